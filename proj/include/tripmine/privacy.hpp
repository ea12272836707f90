#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tripmine/pseudonym.hpp"
#include "tripmine/store.hpp"

namespace tripmine {

/// HMAC key material; at least 32 bytes.
class SecretKey {
 public:
  static constexpr std::size_t kMinBytes = 32;

  explicit SecretKey(std::string bytes);  // WeakKey when too short
  static SecretKey from_file(const std::filesystem::path& path);

  std::string_view bytes() const noexcept { return bytes_; }

 private:
  std::string bytes_;
};

/// HMAC-SHA256(key, identifier), hex encoded.
Pseudonym pseudonymize(std::string_view identifier, const SecretKey& key);

/// AES-256-GCM under a key derived from the secret. The nonce is derived from
/// the identifier, so sealing is deterministic and the vault serializes
/// reproducibly.
SealedIdentifier seal_identifier(std::string_view identifier, const SecretKey& key);
std::string unseal_identifier(const SealedIdentifier& sealed, const SecretKey& key);

/// Creates the vault entry on first contact and appends a consent record.
Pseudonym grant_consent(Store& store, const SecretKey& key, std::string_view identifier,
                        std::string policy_version, Instant now);

bool has_active_consent(const StoreData& data, const Pseudonym& p);

/// Marks the open consent withdrawn and erases the user's data. Consent
/// records stay as an audit trail. UnknownPseudonym when no consent is open.
ErasureReceipt withdraw_consent(Store& store, const Pseudonym& p, Instant now);

/// Removes trips, segments, jobs, the open recording, idempotency receipts and
/// the vault entry in one transaction. Consent records are kept. Analytics
/// already computed elsewhere are not rewritten.
ErasureReceipt erase_user(Store& store, const Pseudonym& p);
ErasureReceipt erase_user_records(StoreData& data, VaultData& vault, const Pseudonym& p);

/// A user is known while the vault holds an entry for them.
bool is_known_user(const VaultData& vault, const Pseudonym& p);

/// Line-delimited JSON dump of everything stored about p (see README).
/// UnknownPseudonym when p has no vault entry.
std::string export_user(const StoreData& data, const VaultData& vault, const Pseudonym& p);

/// Replaces p's records with the dump's content. Importing a fresh export of
/// an erased user restores the store byte for byte.
Pseudonym import_user(Store& store, std::string_view dump);

}  // namespace tripmine
