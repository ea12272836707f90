#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "tripmine/mode_inference.hpp"
#include "tripmine/pseudonym.hpp"
#include "tripmine/sources.hpp"
#include "tripmine/trace.hpp"

namespace tripmine {

enum class JobStage { Received, Segmented, Classified, Enriched, Failed };
std::string_view to_string(JobStage stage);
std::optional<JobStage> job_stage_from_string(std::string_view text);

struct JobRecord {
  std::string job_id;
  std::string trip_id;
  JobStage stage = JobStage::Received;
  std::vector<std::pair<JobStage, Instant>> stage_times;
  std::optional<std::string> last_error;

  friend bool operator==(const JobRecord&, const JobRecord&) = default;
};

struct ClassifiedSegment {
  Segment segment;
  std::optional<Classification> classification;  // empty while a job is parked

  friend bool operator==(const ClassifiedSegment&, const ClassifiedSegment&) = default;
};

/// Response of the trace upload endpoint; also the idempotency record.
struct SubmitResult {
  std::string trip_id;
  std::size_t points_accepted = 0;
  std::size_t points_dropped = 0;

  friend bool operator==(const SubmitResult&, const SubmitResult&) = default;
};

/// Points buffered between Start and Stop.
struct OpenRecording {
  std::string trip_id;
  std::vector<TracePoint> points;

  friend bool operator==(const OpenRecording&, const OpenRecording&) = default;
};

struct ConsentRecord {
  Pseudonym pseudonym;
  std::string policy_version;
  Instant granted_at{};
  std::optional<Instant> withdrawn_at;

  friend bool operator==(const ConsentRecord&, const ConsentRecord&) = default;
};

/// AES-256-GCM output; tag appended to the ciphertext.
struct SealedIdentifier {
  std::string nonce_hex;
  std::string ciphertext_hex;

  friend bool operator==(const SealedIdentifier&, const SealedIdentifier&) = default;
};

struct IdentityVaultEntry {
  Pseudonym pseudonym;
  SealedIdentifier sealed;
  Instant created_at{};

  friend bool operator==(const IdentityVaultEntry&, const IdentityVaultEntry&) = default;
};

/// Everything except the identity vault. Keyed containers are ordered so the
/// serialized form is canonical.
struct StoreData {
  std::map<std::string, Trip> trips;
  std::map<std::string, std::vector<ClassifiedSegment>> segments;  // by trip_id
  std::map<std::string, JobRecord> jobs;
  std::map<Pseudonym, OpenRecording> recordings;
  std::map<std::string, SubmitResult> receipts;  // "<pseudonym>/<client_message_id>"
  std::map<Pseudonym, std::vector<ConsentRecord>> consents;
  std::vector<FcdRecord> fcd;
  std::vector<PtQuery> queries;
  std::vector<TrafficNotification> notifications;
  std::vector<StreetSegment> streets;
  std::uint64_t next_trip_seq = 1;
  std::uint64_t next_job_seq = 1;
};

struct ErasureReceipt {
  std::size_t trips_deleted = 0;
  std::size_t points_deleted = 0;
  bool vault_deleted = false;

  friend bool operator==(const ErasureReceipt&, const ErasureReceipt&) = default;
};

struct VaultData {
  std::map<Pseudonym, IdentityVaultEntry> entries;
};

/// Immutable read view; every read through one snapshot is consistent.
using StoreSnapshot = std::shared_ptr<const StoreData>;
using VaultSnapshot = std::shared_ptr<const VaultData>;

/// Copy-on-write store. Writers are serialized and see a private copy that is
/// published (and persisted, when backed by a directory) only if the
/// transaction returns normally. Readers never block writers.
///
/// On-disk layout: <dir>/store.json holds StoreData, <dir>/vault.json the
/// identity vault; both are replaced atomically via rename.
class Store {
 public:
  Store();
  explicit Store(std::filesystem::path directory);

  StoreSnapshot snapshot() const;
  VaultSnapshot vault_snapshot() const;

  template <typename F>
  decltype(auto) transact(F&& body) {
    std::lock_guard writer(write_mutex_);
    auto data = std::make_shared<StoreData>(*snapshot());
    auto vault = std::make_shared<VaultData>(*vault_snapshot());
    if constexpr (std::is_void_v<std::invoke_result_t<F, StoreData&, VaultData&>>) {
      body(*data, *vault);
      publish(std::move(data), std::move(vault));
    } else {
      auto result = body(*data, *vault);
      publish(std::move(data), std::move(vault));
      return result;
    }
  }

  std::string serialize_data() const;
  std::string serialize_vault() const;
  const std::optional<std::filesystem::path>& directory() const noexcept { return directory_; }

 private:
  void publish(std::shared_ptr<StoreData> data, std::shared_ptr<VaultData> vault);

  std::optional<std::filesystem::path> directory_;
  mutable std::mutex read_mutex_;
  std::mutex write_mutex_;
  std::shared_ptr<const StoreData> data_;
  std::shared_ptr<const VaultData> vault_;
};

std::string receipt_key(const Pseudonym& p, std::string_view client_message_id);

}  // namespace tripmine
