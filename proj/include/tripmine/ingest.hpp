#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tripmine/gtfs.hpp"
#include "tripmine/mode_inference.hpp"
#include "tripmine/privacy.hpp"
#include "tripmine/store.hpp"
#include "tripmine/trace.hpp"

namespace tripmine {

enum class RecordingAction { Start, Append, Stop };
std::string_view to_string(RecordingAction action);
std::optional<RecordingAction> recording_action_from_string(std::string_view text);

/// One client upload. user_token is the raw identifier; it is pseudonymized
/// on arrival and never written anywhere.
struct TraceUploadEnvelope {
  std::string client_message_id;
  std::string user_token;
  std::vector<TracePoint> points;
  RecordingAction action = RecordingAction::Append;
};

/// Wire form: {"client_message_id", "user_token", "action", "points": [...]}.
/// Any structural problem is reported as InvalidEnvelope.
TraceUploadEnvelope envelope_from_json(const nlohmann::json& j);
nlohmann::json envelope_to_json(const TraceUploadEnvelope& e);

struct PipelineConfig {
  TraceConfig trace;
  MatchConfig match;
};

using Clock = std::function<Instant()>;
Clock system_clock();

struct JobTally {
  std::size_t attempted = 0;
  std::size_t enriched = 0;
  std::size_t failed = 0;
  std::size_t parked = 0;  // FeedUnavailable
  std::map<JobStage, std::size_t> stage_counts;  // all jobs after the run
};

class IngestService {
 public:
  IngestService(Store& store, SecretKey key, PipelineConfig config = {},
                Clock clock = system_clock());

  void set_feed(std::shared_ptr<const GtfsFeed> feed);
  std::shared_ptr<const GtfsFeed> feed() const;

  Pseudonym grant_consent(std::string_view user_token, std::string policy_version);
  ErasureReceipt withdraw_consent(std::string_view user_token);

  /// Start opens a recording (discarding an abandoned one), Append buffers
  /// points, Stop assembles the trip and enqueues its processing job. A
  /// replayed client_message_id returns the stored result without writing.
  SubmitResult submit_trace_batch(const TraceUploadEnvelope& envelope);

  /// Segments, classifies and enriches one trip. Without a feed the job is
  /// left at Segmented and FeedUnavailable is thrown; calling again after
  /// set_feed completes it. Other failures end in Failed.
  JobRecord run_processing_job(const std::string& job_id);

  /// Runs every Received or Segmented job on the given number of threads.
  JobTally run_pending_jobs(std::size_t workers = 1);

  std::vector<std::string> pending_jobs() const;

  Store& store() noexcept { return store_; }
  const SecretKey& key() const noexcept { return key_; }
  const PipelineConfig& config() const noexcept { return config_; }
  Instant now() const { return clock_(); }

 private:
  JobRecord process(const std::string& job_id);

  Store& store_;
  SecretKey key_;
  PipelineConfig config_;
  Clock clock_;
  mutable std::mutex feed_mutex_;
  std::shared_ptr<const GtfsFeed> feed_;
  std::mutex inflight_mutex_;
  std::set<std::string> inflight_;
};

struct TripFilter {
  std::optional<Pseudonym> owner;
  std::optional<Date> from;  // inclusive, by trip start date (UTC)
  std::optional<Date> to;    // inclusive
  std::optional<Mode> mode;
};

/// FeatureCollection with one LineString per classified segment.
/// Positions are [lon, lat].
std::string export_trips_geojson(const StoreData& data, const TripFilter& filter = {});

}  // namespace tripmine
