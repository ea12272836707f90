#include "tripmine/privacy.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

#include "tripmine/codec.hpp"
#include "tripmine/error.hpp"

namespace tripmine {

namespace {

constexpr std::size_t kNonceBytes = 12;
constexpr std::size_t kTagBytes = 16;

using Digest = std::array<unsigned char, 32>;

Digest hmac_sha256(std::string_view key, std::string_view message) {
  Digest out{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
            reinterpret_cast<const unsigned char*>(message.data()), message.size(), out.data(),
            &len) ||
      len != out.size()) {
    throw Error(ErrorCode::InvalidArgument, "HMAC computation failed");
  }
  return out;
}

std::string to_hex(const unsigned char* data, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out += kDigits[data[i] >> 4];
    out += kDigits[data[i] & 0xf];
  }
  return out;
}

std::string from_hex(std::string_view hex) {
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw Error(ErrorCode::ParseError, "invalid hex digit");
  };
  if (hex.size() % 2 != 0) throw Error(ErrorCode::ParseError, "odd-length hex string");
  std::string out(hex.size() / 2, '\0');
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<char>(nibble(hex[2 * i]) * 16 + nibble(hex[2 * i + 1]));
  }
  return out;
}

Digest seal_key(const SecretKey& key) { return hmac_sha256(key.bytes(), "vault-seal"); }

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

CipherCtx new_ctx() {
  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  if (!ctx) throw Error(ErrorCode::InvalidArgument, "cipher context allocation failed");
  return ctx;
}

}  // namespace

SecretKey::SecretKey(std::string bytes) : bytes_(std::move(bytes)) {
  if (bytes_.size() < kMinBytes) {
    throw Error(ErrorCode::WeakKey, "privacy key shorter than 32 bytes",
                std::to_string(bytes_.size()));
  }
}

SecretKey SecretKey::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot read privacy key", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return SecretKey(ss.str());
}

Pseudonym pseudonymize(std::string_view identifier, const SecretKey& key) {
  if (identifier.empty()) throw Error(ErrorCode::InvalidArgument, "empty identifier");
  const Digest d = hmac_sha256(key.bytes(), identifier);
  return Pseudonym(to_hex(d.data(), d.size()));
}

SealedIdentifier seal_identifier(std::string_view identifier, const SecretKey& key) {
  const Digest k = seal_key(key);
  const Digest n = hmac_sha256(std::string_view(reinterpret_cast<const char*>(k.data()), k.size()),
                               identifier);
  auto ctx = new_ctx();
  std::string out(identifier.size() + kTagBytes, '\0');
  auto* out_bytes = reinterpret_cast<unsigned char*>(out.data());
  int len = 0;
  int total = 0;
  bool ok = EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) == 1 &&
            EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, k.data(), n.data()) == 1 &&
            EVP_EncryptUpdate(ctx.get(), out_bytes, &len,
                              reinterpret_cast<const unsigned char*>(identifier.data()),
                              static_cast<int>(identifier.size())) == 1;
  total = len;
  ok = ok && EVP_EncryptFinal_ex(ctx.get(), out_bytes + total, &len) == 1;
  total += len;
  ok = ok && EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagBytes, out_bytes + total) == 1;
  if (!ok) throw Error(ErrorCode::InvalidArgument, "identifier sealing failed");
  return SealedIdentifier{to_hex(n.data(), kNonceBytes),
                          to_hex(out_bytes, static_cast<std::size_t>(total) + kTagBytes)};
}

std::string unseal_identifier(const SealedIdentifier& sealed, const SecretKey& key) {
  const Digest k = seal_key(key);
  const std::string nonce = from_hex(sealed.nonce_hex);
  const std::string data = from_hex(sealed.ciphertext_hex);
  if (nonce.size() != kNonceBytes || data.size() < kTagBytes) {
    throw Error(ErrorCode::InvalidArgument, "malformed sealed identifier");
  }
  const std::size_t body = data.size() - kTagBytes;
  std::string tag = data.substr(body);
  auto ctx = new_ctx();
  std::string out(body, '\0');
  int len = 0;
  bool ok = EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) == 1 &&
            EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, k.data(),
                               reinterpret_cast<const unsigned char*>(nonce.data())) == 1 &&
            EVP_DecryptUpdate(ctx.get(), reinterpret_cast<unsigned char*>(out.data()), &len,
                              reinterpret_cast<const unsigned char*>(data.data()),
                              static_cast<int>(body)) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagBytes, tag.data()) == 1;
  int tail = 0;
  ok = ok && EVP_DecryptFinal_ex(ctx.get(), reinterpret_cast<unsigned char*>(out.data()) + len,
                                 &tail) == 1;
  if (!ok) throw Error(ErrorCode::InvalidArgument, "sealed identifier failed authentication");
  return out;
}

Pseudonym grant_consent(Store& store, const SecretKey& key, std::string_view identifier,
                        std::string policy_version, Instant now) {
  const Pseudonym p = pseudonymize(identifier, key);
  SealedIdentifier sealed = seal_identifier(identifier, key);
  store.transact([&](StoreData& data, VaultData& vault) {
    vault.entries.try_emplace(p, IdentityVaultEntry{p, std::move(sealed), now});
    data.consents[p].push_back(ConsentRecord{p, std::move(policy_version), now, std::nullopt});
  });
  return p;
}

bool has_active_consent(const StoreData& data, const Pseudonym& p) {
  const auto it = data.consents.find(p);
  if (it == data.consents.end()) return false;
  for (const auto& c : it->second) {
    if (!c.withdrawn_at) return true;
  }
  return false;
}

ErasureReceipt withdraw_consent(Store& store, const Pseudonym& p, Instant now) {
  return store.transact([&](StoreData& data, VaultData& vault) {
    bool withdrew = false;
    if (auto it = data.consents.find(p); it != data.consents.end()) {
      for (auto& c : it->second) {
        if (!c.withdrawn_at) {
          c.withdrawn_at = std::max(now, c.granted_at);
          withdrew = true;
        }
      }
    }
    if (!withdrew) throw Error(ErrorCode::UnknownPseudonym, "no open consent", p.value());
    return erase_user_records(data, vault, p);
  });
}

ErasureReceipt erase_user_records(StoreData& data, VaultData& vault, const Pseudonym& p) {
  ErasureReceipt receipt;
  for (auto it = data.trips.begin(); it != data.trips.end();) {
    if (it->second.owner != p) {
      ++it;
      continue;
    }
    const std::string& trip_id = it->first;
    ++receipt.trips_deleted;
    receipt.points_deleted += it->second.points.size();
    data.segments.erase(trip_id);
    std::erase_if(data.jobs, [&](const auto& kv) { return kv.second.trip_id == trip_id; });
    it = data.trips.erase(it);
  }
  data.recordings.erase(p);
  const std::string prefix = p.value() + "/";
  std::erase_if(data.receipts, [&](const auto& kv) { return kv.first.starts_with(prefix); });
  receipt.vault_deleted = vault.entries.erase(p) > 0;
  return receipt;
}

ErasureReceipt erase_user(Store& store, const Pseudonym& p) {
  return store.transact(
      [&](StoreData& data, VaultData& vault) { return erase_user_records(data, vault, p); });
}

bool is_known_user(const VaultData& vault, const Pseudonym& p) {
  return vault.entries.contains(p);
}

std::string export_user(const StoreData& data, const VaultData& vault, const Pseudonym& p) {
  const auto entry = vault.entries.find(p);
  if (entry == vault.entries.end()) {
    throw Error(ErrorCode::UnknownPseudonym, "unknown pseudonym", p.value());
  }
  std::string out;
  auto emit = [&](const char* type, json body) {
    json line{{"type", type}};
    line.update(body);
    out += line.dump();
    out += '\n';
  };
  emit("subject", json(entry->second));
  if (auto it = data.consents.find(p); it != data.consents.end()) {
    for (const auto& c : it->second) emit("consent", json(c));
  }
  for (const auto& [id, trip] : data.trips) {
    if (trip.owner != p) continue;
    emit("trip", json{{"trip", trip}});
    if (auto seg = data.segments.find(id); seg != data.segments.end()) {
      emit("segments", json{{"trip_id", id}, {"segments", seg->second}});
    }
    for (const auto& [job_id, job] : data.jobs) {
      if (job.trip_id == id) emit("job", json{{"job", job}});
    }
  }
  if (auto rec = data.recordings.find(p); rec != data.recordings.end()) {
    emit("recording", json{{"recording", rec->second}});
  }
  const std::string prefix = p.value() + "/";
  for (auto it = data.receipts.lower_bound(prefix);
       it != data.receipts.end() && it->first.starts_with(prefix); ++it) {
    emit("receipt", json{{"client_message_id", it->first.substr(prefix.size())},
                         {"result", it->second}});
  }
  return out;
}

Pseudonym import_user(Store& store, std::string_view dump) {
  std::optional<IdentityVaultEntry> subject;
  std::vector<ConsentRecord> consents;
  std::vector<Trip> trips;
  std::vector<std::pair<std::string, std::vector<ClassifiedSegment>>> segments;
  std::vector<JobRecord> jobs;
  std::optional<OpenRecording> recording;
  std::vector<std::pair<std::string, SubmitResult>> receipts;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < dump.size()) {
    const std::size_t end = std::min(dump.find('\n', pos), dump.size());
    const std::string_view line = dump.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "subject") {
        if (subject) throw Error(ErrorCode::ParseError, "duplicate subject line");
        subject = j.get<IdentityVaultEntry>();
      } else if (type == "consent") {
        consents.push_back(j.get<ConsentRecord>());
      } else if (type == "trip") {
        trips.push_back(j.at("trip").get<Trip>());
      } else if (type == "segments") {
        segments.emplace_back(j.at("trip_id").get<std::string>(),
                              j.at("segments").get<std::vector<ClassifiedSegment>>());
      } else if (type == "job") {
        jobs.push_back(j.at("job").get<JobRecord>());
      } else if (type == "recording") {
        recording = j.at("recording").get<OpenRecording>();
      } else if (type == "receipt") {
        receipts.emplace_back(j.at("client_message_id").get<std::string>(),
                              j.at("result").get<SubmitResult>());
      } else {
        throw Error(ErrorCode::ParseError, "unknown record type", type);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, "malformed dump line",
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!subject) throw Error(ErrorCode::ParseError, "dump has no subject line");
  const Pseudonym p = subject->pseudonym;
  for (const auto& c : consents) {
    if (c.pseudonym != p) throw Error(ErrorCode::ParseError, "consent for another pseudonym");
  }
  for (const auto& t : trips) {
    if (t.owner != p) throw Error(ErrorCode::ParseError, "trip of another owner", t.trip_id);
  }

  store.transact([&](StoreData& data, VaultData& vault) {
    for (const auto& t : trips) {
      if (auto it = data.trips.find(t.trip_id); it != data.trips.end() && it->second.owner != p) {
        throw Error(ErrorCode::InvalidArgument, "trip id taken by another user", t.trip_id);
      }
    }
    erase_user_records(data, vault, p);
    vault.entries.insert_or_assign(p, *subject);
    if (consents.empty()) {
      data.consents.erase(p);
    } else {
      data.consents[p] = consents;
    }
    for (const auto& t : trips) data.trips.insert_or_assign(t.trip_id, t);
    for (const auto& [id, segs] : segments) data.segments.insert_or_assign(id, segs);
    for (const auto& job : jobs) data.jobs.insert_or_assign(job.job_id, job);
    if (recording) data.recordings.insert_or_assign(p, *recording);
    for (const auto& [id, result] : receipts) {
      data.receipts.insert_or_assign(receipt_key(p, id), result);
    }
  });
  return p;
}

}  // namespace tripmine
