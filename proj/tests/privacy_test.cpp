#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "support.hpp"
#include "tripmine/error.hpp"
#include "tripmine/codec.hpp"
#include "tripmine/privacy.hpp"

using namespace tripmine;
using tmt::at;

namespace {

const SecretKey kKey(tmt::fixture_key());
const Instant kNow = at("2026-05-04T07:00:00Z");

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidArgument;
}

// Two users with bicycle trips submitted through the ingest path.
struct Fixture {
  Store store;
  IngestService svc{store, kKey, {}, [] { return kNow; }};
  Pseudonym alice;
  Pseudonym bob;

  Fixture() {
    alice = svc.grant_consent("alice@example.org", "v1");
    bob = svc.grant_consent("IMEI-356938035643809", "v1");
    const GeoPoint origin(52.37, 9.73);
    for (int t = 0; t < 3; ++t) {
      for (const auto& e : tmt::trip_envelopes("alice@example.org", "a" + std::to_string(t),
                                               at("2026-05-04T08:00:00Z") + std::chrono::hours{t}, 40,
                                               origin, 4.0, ActivityKind::OnBicycle)) {
        svc.submit_trace_batch(e);
      }
    }
    for (const auto& e : tmt::trip_envelopes("IMEI-356938035643809", "b0", at("2026-05-04T09:30:00Z"), 20,
                                             origin, 1.4, ActivityKind::OnFoot)) {
      svc.submit_trace_batch(e);
    }
    svc.run_pending_jobs(1);
  }
};

}  // namespace

TEST(Key, TooShortIsWeak) {
  EXPECT_EQ(error_of([] { SecretKey(std::string(31, 'k')); }), ErrorCode::WeakKey);
  EXPECT_NO_THROW(SecretKey(std::string(32, 'k')));
}

TEST(Key, FromFile) {
  const auto path = std::filesystem::temp_directory_path() / "tripmine_privacy_key";
  std::ofstream(path, std::ios::binary) << tmt::fixture_key();
  EXPECT_EQ(SecretKey::from_file(path).bytes(), tmt::fixture_key());
  std::filesystem::remove(path);
  EXPECT_THROW(SecretKey::from_file(path), Error);
}

TEST(Pseudonymize, DeterministicAndKeyed) {
  const SecretKey other(std::string(32, 'z'));
  const auto a = pseudonymize("alice@example.org", kKey);
  EXPECT_EQ(a, pseudonymize("alice@example.org", kKey));
  EXPECT_NE(a, pseudonymize("alice@example.org", other));
  EXPECT_EQ(a.value().size(), 64u);
  EXPECT_EQ(a.value().find("alice"), std::string::npos);
  EXPECT_EQ(error_of([] { pseudonymize("", kKey); }), ErrorCode::InvalidArgument);
}

TEST(Pseudonymize, KnownHmacVector) {
  // RFC 4231 test case 2. Zero padding a short HMAC key leaves the output unchanged.
  const SecretKey key(std::string("Jefe") + std::string(28, '\0'));
  EXPECT_EQ(pseudonymize("what do ya want for nothing?", key).value(),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST(Pseudonymize, NoCollisionsOnCorpus) {
  std::set<Pseudonym> seen;
  for (int i = 0; i < 100'000; ++i) seen.insert(pseudonymize("user-" + std::to_string(i), kKey));
  EXPECT_EQ(seen.size(), 100'000u);
}

TEST(Pseudonymize, RandomIdentifiersNeverLeak) {
  tmt::Rng rng(81);
  for (int i = 0; i < 2000; ++i) {
    std::string id;
    const int len = rng.integer(4, 30);
    for (int k = 0; k < len; ++k) id.push_back("abcdef0123456789@.xyz"[rng.integer(0, 20)]);
    const auto p = pseudonymize(id, kKey);
    ASSERT_TRUE(Pseudonym::is_valid(p.value()));
    // Identifiers of hex characters could occur by chance; only longer ones are checked.
    if (id.size() >= 12) EXPECT_EQ(p.value().find(id), std::string::npos);
  }
}

TEST(Pseudonym, Validation) {
  EXPECT_TRUE(Pseudonym::is_valid(std::string(64, 'f')));
  EXPECT_FALSE(Pseudonym::is_valid(std::string(64, 'F')));
  EXPECT_FALSE(Pseudonym::is_valid(std::string(63, 'f')));
  EXPECT_FALSE(Pseudonym::is_valid("alice@example.org"));
  EXPECT_THROW(Pseudonym("alice"), Error);
}

TEST(Vault, SealRoundTrip) {
  const auto sealed = seal_identifier("alice@example.org", kKey);
  EXPECT_EQ(unseal_identifier(sealed, kKey), "alice@example.org");
  EXPECT_EQ(sealed, seal_identifier("alice@example.org", kKey));
  EXPECT_EQ(sealed.ciphertext_hex.find("alice"), std::string::npos);
  EXPECT_THROW(unseal_identifier(sealed, SecretKey(std::string(32, 'z'))), Error);
  auto tampered = sealed;
  tampered.ciphertext_hex[0] = tampered.ciphertext_hex[0] == '0' ? '1' : '0';
  EXPECT_THROW(unseal_identifier(tampered, kKey), Error);
}

TEST(Consent, GrantCreatesVaultEntryAndRecord) {
  Store store;
  const auto p = grant_consent(store, kKey, "alice@example.org", "v1", kNow);
  EXPECT_EQ(p, pseudonymize("alice@example.org", kKey));
  EXPECT_TRUE(is_known_user(*store.vault_snapshot(), p));
  EXPECT_TRUE(has_active_consent(*store.snapshot(), p));
  const auto& entry = store.vault_snapshot()->entries.at(p);
  EXPECT_EQ(unseal_identifier(entry.sealed, kKey), "alice@example.org");
  grant_consent(store, kKey, "alice@example.org", "v2", kNow);
  EXPECT_EQ(store.vault_snapshot()->entries.size(), 1u);
  EXPECT_EQ(store.snapshot()->consents.at(p).size(), 2u);
}

TEST(Consent, WithdrawErasesButKeepsAudit) {
  Fixture f;
  const auto receipt = f.svc.withdraw_consent("alice@example.org");
  EXPECT_EQ(receipt, (ErasureReceipt{3, 120, true}));
  const auto data = f.store.snapshot();
  EXPECT_FALSE(has_active_consent(*data, f.alice));
  ASSERT_EQ(data->consents.at(f.alice).size(), 1u);
  EXPECT_EQ(data->consents.at(f.alice)[0].withdrawn_at, kNow);
  for (const auto& [id, trip] : data->trips) EXPECT_NE(trip.owner, f.alice);
  EXPECT_EQ(error_of([&] { f.svc.withdraw_consent("alice@example.org"); }),
            ErrorCode::UnknownPseudonym);
  EXPECT_EQ(error_of([&] {
              f.svc.submit_trace_batch({"late", "alice@example.org", {}, RecordingAction::Start});
            }),
            ErrorCode::NoConsent);
}

TEST(Erase, RemovesEverythingOfTheUser) {
  Fixture f;
  const std::string bob_before = export_user(*f.store.snapshot(), *f.store.vault_snapshot(), f.bob);
  const auto receipt = erase_user(f.store, f.alice);
  EXPECT_EQ(receipt, (ErasureReceipt{3, 120, true}));
  const auto data = f.store.snapshot();
  EXPECT_EQ(data->trips.size(), 1u);
  EXPECT_EQ(data->segments.size(), 1u);
  EXPECT_EQ(data->jobs.size(), 1u);
  for (const auto& [key, r] : data->receipts) EXPECT_NE(key.substr(0, 64), f.alice.value());
  EXPECT_FALSE(is_known_user(*f.store.vault_snapshot(), f.alice));
  EXPECT_EQ(error_of([&] { export_user(*data, *f.store.vault_snapshot(), f.alice); }),
            ErrorCode::UnknownPseudonym);
  EXPECT_EQ(export_user(*data, *f.store.vault_snapshot(), f.bob), bob_before);
}

TEST(Erase, UnknownPseudonymGivesZeroReceipt) {
  Fixture f;
  const std::string before = f.store.serialize_data();
  EXPECT_EQ(erase_user(f.store, Pseudonym(std::string(64, '0'))), ErasureReceipt{});
  EXPECT_EQ(f.store.serialize_data(), before);
}

TEST(Erase, ReingestAfterEraseHoldsOnlyNewData) {
  Fixture f;
  erase_user(f.store, f.alice);
  f.svc.grant_consent("alice@example.org", "v2");
  for (const auto& e : tmt::trip_envelopes("alice@example.org", "new", at("2026-05-05T08:00:00Z"), 30,
                                           GeoPoint(52.37, 9.73), 4.0, ActivityKind::OnBicycle)) {
    f.svc.submit_trace_batch(e);
  }
  f.svc.run_pending_jobs(1);
  std::size_t trips = 0;
  for (const auto& [id, trip] : f.store.snapshot()->trips) {
    if (trip.owner != f.alice) continue;
    ++trips;
    EXPECT_EQ(trip.points.size(), 30u);
    EXPECT_EQ(trip.started_at, at("2026-05-05T08:00:00Z"));
  }
  EXPECT_EQ(trips, 1u);
}

TEST(Export, ContainsNoRawIdentifiers) {
  Fixture f;
  for (const auto& p : {f.alice, f.bob}) {
    const auto dump = export_user(*f.store.snapshot(), *f.store.vault_snapshot(), p);
    EXPECT_EQ(dump.find("alice"), std::string::npos);
    EXPECT_EQ(dump.find("example.org"), std::string::npos);
    EXPECT_EQ(dump.find("356938035643809"), std::string::npos);
  }
  EXPECT_FALSE(tmt::store_mentions(f.store, "alice"));
  EXPECT_FALSE(tmt::store_mentions(f.store, "356938035643809"));
}

TEST(Export, LinesAreTypedJson) {
  Fixture f;
  const auto dump = export_user(*f.store.snapshot(), *f.store.vault_snapshot(), f.alice);
  std::map<std::string, int> types;
  std::size_t pos = 0;
  while (pos < dump.size()) {
    const auto end = dump.find('\n', pos);
    ASSERT_NE(end, std::string::npos);
    types[json::parse(dump.substr(pos, end - pos)).at("type").get<std::string>()]++;
    pos = end + 1;
  }
  EXPECT_EQ(types["subject"], 1);
  EXPECT_EQ(types["consent"], 1);
  EXPECT_EQ(types["trip"], 3);
  EXPECT_EQ(types["segments"], 3);
  EXPECT_EQ(types["job"], 3);
  EXPECT_EQ(types["receipt"], 9);
}

TEST(Export, EraseThenImportIsByteIdentical) {
  Fixture f;
  const std::string data_before = f.store.serialize_data();
  const std::string vault_before = f.store.serialize_vault();
  const auto dump = export_user(*f.store.snapshot(), *f.store.vault_snapshot(), f.alice);
  erase_user(f.store, f.alice);
  EXPECT_NE(f.store.serialize_data(), data_before);
  EXPECT_EQ(import_user(f.store, dump), f.alice);
  EXPECT_EQ(f.store.serialize_data(), data_before);
  EXPECT_EQ(f.store.serialize_vault(), vault_before);
  EXPECT_EQ(export_user(*f.store.snapshot(), *f.store.vault_snapshot(), f.alice), dump);
}

TEST(Export, ImportOverExistingRecordsIsByteIdentical) {
  Fixture f;
  const std::string data_before = f.store.serialize_data();
  const auto dump = export_user(*f.store.snapshot(), *f.store.vault_snapshot(), f.bob);
  import_user(f.store, dump);
  EXPECT_EQ(f.store.serialize_data(), data_before);
}

TEST(Export, ImportRejectsForeignRecords) {
  Fixture f;
  const auto alice_dump = export_user(*f.store.snapshot(), *f.store.vault_snapshot(), f.alice);
  const auto bob_dump = export_user(*f.store.snapshot(), *f.store.vault_snapshot(), f.bob);
  // Bob's subject line followed by Alice's trips.
  const std::string mixed = bob_dump.substr(0, bob_dump.find('\n') + 1) +
                            alice_dump.substr(alice_dump.find('\n') + 1);
  EXPECT_EQ(error_of([&] { import_user(f.store, mixed); }), ErrorCode::ParseError);
  EXPECT_EQ(error_of([&] { import_user(f.store, "{not json}\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_of([&] { import_user(f.store, ""); }), ErrorCode::ParseError);
}

TEST(Export, ThenEraseSucceeds) {
  Fixture f;
  EXPECT_NO_THROW(export_user(*f.store.snapshot(), *f.store.vault_snapshot(), f.bob));
  EXPECT_TRUE(erase_user(f.store, f.bob).vault_deleted);
}
