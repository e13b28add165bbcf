#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <utility>

#include "adseal/crypto_store.hpp"
#include "adseal/errors.hpp"
#include "adseal/privacy.hpp"
#include "test_util.hpp"

using namespace adseal;

namespace {

std::vector<AdCreative> round_catalog() {
  return {
      {"A00", "new smartphone gadget sale", "electronics"},
      {"A01", "great vacation flight offer", "travel"},
      {"A02", "top workout tracker deal", "fitness"},
      {"A03", "big laptop deal discount", "electronics"},
  };
}

ImpressionEvent make_event(const std::string& user, const AdCreative& ad, bool clicked,
                           int64_t ts) {
  ImpressionEvent e;
  e.user_id = user;
  e.ad_id = ad.ad_id;
  e.ts = ts;
  e.clicked = clicked;
  e.converted = false;
  e.ad_category = ad.category;
  e.device = DeviceType::Mobile;
  e.time_of_day = TimeOfDay::Evening;
  return e;
}

std::vector<UserProfile> round_clients(int n, int events_per_client, uint64_t seed) {
  const auto catalog = round_catalog();
  Rng rng(seed);
  std::vector<UserProfile> clients;
  int64_t ts = 1;
  for (int i = 0; i < n; ++i) {
    UserProfile p;
    p.user_id = "C" + std::to_string(i);
    p.device = DeviceType::Mobile;
    p.time_of_day = TimeOfDay::Evening;
    for (int j = 0; j < events_per_client; ++j) {
      p.events.push_back(
          make_event(p.user_id, catalog[rng.below(catalog.size())], rng.bernoulli(0.5), ts++));
    }
    clients.push_back(std::move(p));
  }
  return clients;
}

Model round_model(uint64_t seed) {
  const auto catalog = round_catalog();
  EncoderConfig cfg;
  cfg.d_model = 6;
  cfg.d_k = 6;
  cfg.layers = 1;
  cfg.max_len = 8;
  std::vector<std::string> copies;
  for (const auto& ad : catalog) copies.push_back(ad.copy);
  FeatureConfig fc;
  std::set<std::string> cats;
  for (const auto& ad : catalog) cats.insert(ad.category);
  fc.categories.assign(cats.begin(), cats.end());
  Rng rng(seed);
  return Model::init(cfg, build_vocab(copies, 1), fc, rng);
}

RoundConfig fast_round_config() {
  RoundConfig rc;
  rc.train.epochs = 1;
  rc.train.batch_size = 8;
  return rc;
}

}  // namespace

TEST_CASE("raw events are blocked in local mode and recorded") {
  AuditLedger ledger;
  const PrivacyMode local{Topology::Local, 0.05};
  const auto clients = round_clients(1, 3, 5);
  const auto msg = BoundaryMessage::raw_events("C0", clients[0].events);
  CHECK_THROWS_AS(send(msg, local, ledger, 0), PrivacyViolation);
  REQUIRE(ledger.size() == 1);
  CHECK(ledger.entries()[0].verdict == Verdict::Blocked);
  CHECK(ledger.entries()[0].kind == MessageKind::RawEvents);
  CHECK(ledger.entries()[0].client == "C0");
  try {
    send(msg, local, ledger, 0);
  } catch (const PrivacyViolation& e) {
    const std::string what = e.what();
    CHECK(what.find("RAW_EVENTS") != std::string::npos);
    CHECK(what.find("C0") != std::string::npos);
  }
}

TEST_CASE("raw events are allowed in cloud mode") {
  AuditLedger ledger;
  const PrivacyMode cloud{Topology::Cloud, 0.05};
  const auto clients = round_clients(1, 3, 7);
  CHECK(send(BoundaryMessage::raw_events("C0", clients[0].events), cloud, ledger, 0) ==
        Verdict::Allowed);
  CHECK(ledger.entries()[0].verdict == Verdict::Allowed);
}

TEST_CASE("model params and user tags are allowed in local mode") {
  AuditLedger ledger;
  const PrivacyMode local{Topology::Local, 0.05};
  Model m = round_model(11);
  CHECK(send(BoundaryMessage::model_params("C1", std::as_const(m).parameters()), local, ledger, 2) ==
        Verdict::Allowed);
  UserTagSet tags;
  tags.tags.push_back(UserTag{"travel", 0.8});
  CHECK(send(BoundaryMessage::user_tags("C1", tags), local, ledger, 2) == Verdict::Allowed);
  CHECK(ledger.size() == 2);
  for (const auto& e : ledger.entries()) {
    CHECK(e.verdict == Verdict::Allowed);
    CHECK(e.round == 2);
    CHECK(e.bytes > 0);
  }
}

TEST_CASE("every send appends exactly one ledger entry") {
  AuditLedger ledger;
  const PrivacyMode local{Topology::Local, 0.0};
  Model m = round_model(13);
  const auto clients = round_clients(2, 2, 13);
  int sends = 0;
  for (int i = 0; i < 5; ++i) {
    try {
      if (i % 2 == 0) {
        send(BoundaryMessage::raw_events("C0", clients[0].events), local, ledger, i);
      } else {
        send(BoundaryMessage::model_params("C1", std::as_const(m).parameters()), local, ledger, i);
      }
    } catch (const PrivacyViolation&) {
    }
    ++sends;
  }
  CHECK(ledger.size() == static_cast<size_t>(sends));
}

TEST_CASE("message payloads round-trip through the boundary types") {
  const auto clients = round_clients(1, 4, 17);
  const auto raw = BoundaryMessage::raw_events("C0", clients[0].events);
  const auto parsed = BoundaryMessage::parse_raw_events(raw);
  REQUIRE(parsed.size() == clients[0].events.size());
  for (size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].user_id == clients[0].events[i].user_id);
    CHECK(parsed[i].ad_id == clients[0].events[i].ad_id);
    CHECK(parsed[i].clicked == clients[0].events[i].clicked);
  }
  Model m = round_model(17);
  const auto params = BoundaryMessage::model_params("C0", std::as_const(m).parameters());
  const auto matrices = BoundaryMessage::parse_model_params(params);
  REQUIRE(matrices.size() == m.parameters().size());
  CHECK(matrices[0] == m.table.token_matrix);
  CHECK_THROWS_AS(BoundaryMessage::parse_model_params(raw), DataError);
}

TEST_CASE("local rounds upload no raw events") {
  const auto catalog = round_catalog();
  const auto clients = round_clients(3, 6, 19);
  Model model = round_model(19);
  AuditLedger ledger;
  const PrivacyMode local{Topology::Local, 0.05};
  const auto result = run_round(clients, local, model, catalog, ledger, 0,
                                fast_round_config(), 19);
  CHECK(result.clients_completed == 3);
  CHECK(ledger.count(MessageKind::RawEvents, Verdict::Allowed) == 0);
  // params + tags per client
  CHECK(ledger.count(MessageKind::ModelParams, Verdict::Allowed) == 3);
  CHECK(ledger.count(MessageKind::UserTags, Verdict::Allowed) == 3);
}

TEST_CASE("cloud rounds upload exactly one raw message per client") {
  const auto catalog = round_catalog();
  const auto clients = round_clients(3, 6, 23);
  Model model = round_model(23);
  AuditLedger ledger;
  const PrivacyMode cloud{Topology::Cloud, 0.05};
  run_round(clients, cloud, model, catalog, ledger, 0, fast_round_config(), 23);
  CHECK(ledger.count(MessageKind::RawEvents, Verdict::Allowed) == 3);
}

TEST_CASE("a blocked client aborts alone, others proceed") {
  const auto catalog = round_catalog();
  const auto clients = round_clients(3, 5, 29);
  Model model = round_model(29);
  AuditLedger ledger;
  const PrivacyMode local{Topology::Local, 0.05};
  RoundConfig rc = fast_round_config();
  rc.inject_raw_upload_attempt = true;  // client 0 misbehaves
  const auto result = run_round(clients, local, model, catalog, ledger, 0, rc, 29);
  CHECK(result.clients_aborted == 1);
  CHECK(result.clients_completed == 2);
  CHECK(ledger.count(MessageKind::RawEvents, Verdict::Blocked) == 1);
  CHECK(ledger.count(MessageKind::RawEvents, Verdict::Allowed) == 0);
  CHECK(ledger.count(MessageKind::ModelParams, Verdict::Allowed) == 2);
}

TEST_CASE("one-client local aggregation equals centralized training") {
  const auto catalog = round_catalog();
  const auto clients = round_clients(1, 8, 31);
  const RoundConfig rc = fast_round_config();

  Model local_model = round_model(31);
  AuditLedger ledger;
  run_round(clients, PrivacyMode{Topology::Local, 0.05}, local_model, catalog, ledger, 0, rc,
            777);

  Model central_model = round_model(31);
  Rng rng(Rng::derive(777, 't', 0));  // the schedule the round gives client 0
  train_loop(central_model, clients[0].events, catalog, rc.train, rng);

  const auto a = local_model.parameters();
  const auto b = central_model.parameters();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(test::max_abs_diff(*a[i], *b[i]) < 1e-9);
  }
}

TEST_CASE("weighted aggregation weighs clients by example count") {
  const auto catalog = round_catalog();
  auto clients = round_clients(2, 4, 61);
  // give client 1 a much longer history so the weighting matters
  {
    Rng rng(62);
    int64_t ts = 1000;
    for (int j = 0; j < 12; ++j) {
      const auto& ad = catalog[rng.below(catalog.size())];
      clients[1].events.push_back(make_event(clients[1].user_id, ad, rng.bernoulli(0.5), ts++));
    }
  }
  const PrivacyMode local{Topology::Local, 0.05};
  RoundConfig rc = fast_round_config();

  Model unweighted = round_model(61);
  AuditLedger ledger_a;
  run_round(clients, local, unweighted, catalog, ledger_a, 0, rc, 61);

  rc.weighted_aggregation = true;
  Model weighted = round_model(61);
  AuditLedger ledger_b;
  run_round(clients, local, weighted, catalog, ledger_b, 0, rc, 61);

  const auto a = unweighted.parameters();
  const auto b = weighted.parameters();
  double diff = 0.0;
  for (size_t i = 0; i < a.size(); ++i) diff = std::max(diff, test::max_abs_diff(*a[i], *b[i]));
  CHECK(diff > 0.0);  // the flag changes the aggregate

  // with a single client both schemes are the identity average
  const std::vector<UserProfile> solo = {clients[0]};
  Model solo_unweighted = round_model(63);
  Model solo_weighted = round_model(63);
  AuditLedger la, lb;
  RoundConfig rcu = fast_round_config();
  run_round(solo, local, solo_unweighted, catalog, la, 0, rcu, 63);
  rcu.weighted_aggregation = true;
  run_round(solo, local, solo_weighted, catalog, lb, 0, rcu, 63);
  const auto sa = solo_unweighted.parameters();
  const auto sb = solo_weighted.parameters();
  for (size_t i = 0; i < sa.size(); ++i) CHECK(*sa[i] == *sb[i]);
}

TEST_CASE("leakage metrics are exactly zero for local runs") {
  const auto catalog = round_catalog();
  const auto clients = round_clients(2, 5, 37);
  Model model = round_model(37);
  AuditLedger ledger;
  const PrivacyMode local{Topology::Local, 0.9};  // even a strong adversary
  run_round(clients, local, model, catalog, ledger, 0, fast_round_config(), 37);
  const auto metrics = leakage_metrics(ledger, local, 2000, 37);
  CHECK(metrics.upload_flag == 0);
  CHECK(metrics.leakage_events == 0);
  CHECK(metrics.leakage_probability == 0.0);
}

TEST_CASE("cloud leakage probability tracks the intercept rate") {
  AuditLedger ledger;
  const PrivacyMode cloud{Topology::Cloud, 0.05};
  const auto clients = round_clients(4, 3, 41);
  for (int i = 0; i < 4; ++i) {
    send(BoundaryMessage::raw_events(clients[i].user_id, clients[i].events), cloud, ledger, 0);
  }
  const auto metrics = leakage_metrics(ledger, cloud, 10000, 123);
  CHECK(metrics.upload_flag == 1);
  CHECK(metrics.leakage_probability == doctest::Approx(0.05).epsilon(0.1));
}

TEST_CASE("zero intercept rate separates upload from interception") {
  AuditLedger ledger;
  const PrivacyMode cloud{Topology::Cloud, 0.0};
  const auto clients = round_clients(1, 3, 43);
  send(BoundaryMessage::raw_events("C0", clients[0].events), cloud, ledger, 0);
  const auto metrics = leakage_metrics(ledger, cloud, 2000, 43);
  CHECK(metrics.upload_flag == 1);
  CHECK(metrics.leakage_events == 0);
  CHECK(metrics.leakage_probability == 0.0);
}

TEST_CASE("ledger persists and reloads unchanged") {
  AuditLedger ledger;
  ledger.append(LedgerEntry{0, "C0", MessageKind::ModelParams, 128, Verdict::Allowed});
  ledger.append(LedgerEntry{1, "C1", MessageKind::RawEvents, 64, Verdict::Blocked});
  const std::string path = "/tmp/adseal_ledger_test.jsonl";
  ledger.save_jsonl(path);
  const AuditLedger loaded = AuditLedger::load_jsonl(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.entries()[0].client == "C0");
  CHECK(loaded.entries()[1].verdict == Verdict::Blocked);
  CHECK(loaded.entries()[1].kind == MessageKind::RawEvents);
  std::remove(path.c_str());
}

TEST_CASE("encryption round trip restores the plaintext") {
  const SecretKey key = generate_key();
  Rng rng(47);
  for (size_t size : {size_t(0), size_t(1), size_t(100), size_t(1 << 20)}) {
    std::vector<unsigned char> plain(size);
    for (auto& b : plain) b = static_cast<unsigned char>(rng.below(256));
    const EncryptedStore store = encrypt_store(plain, key);
    CHECK(decrypt_store(store, key) == plain);
  }
}

TEST_CASE("any single-bit tamper is rejected") {
  const SecretKey key = generate_key();
  std::vector<unsigned char> plain = {'u', 's', 'e', 'r', ' ', 'd', 'a', 't', 'a'};
  EncryptedStore store = encrypt_store(plain, key);

  Rng rng(53);
  for (int trial = 0; trial < 32; ++trial) {
    EncryptedStore tampered = store;
    const size_t byte = rng.below(tampered.ciphertext.size());
    tampered.ciphertext[byte] ^= static_cast<unsigned char>(1u << rng.below(8));
    CHECK_THROWS_AS(decrypt_store(tampered, key), CryptoError);
  }
  EncryptedStore bad_tag = store;
  bad_tag.tag[0] ^= 1;
  CHECK_THROWS_AS(decrypt_store(bad_tag, key), CryptoError);
}

TEST_CASE("wrong key fails loudly") {
  const SecretKey key = generate_key();
  const SecretKey other = generate_key();
  const EncryptedStore store = encrypt_store({1, 2, 3}, key);
  CHECK_THROWS_AS(decrypt_store(store, other), CryptoError);
}

TEST_CASE("same plaintext encrypts to different ciphertexts") {
  const SecretKey key = generate_key();
  const std::vector<unsigned char> plain = {9, 9, 9, 9};
  const EncryptedStore a = encrypt_store(plain, key);
  const EncryptedStore b = encrypt_store(plain, key);
  CHECK(a.nonce != b.nonce);
  CHECK(a.ciphertext != b.ciphertext);
}

TEST_CASE("encrypted store file round trip") {
  const SecretKey key = generate_key();
  const std::vector<unsigned char> plain = {'x', 'y', 'z'};
  const EncryptedStore store = encrypt_store(plain, key);
  const std::string path = "/tmp/adseal_store_test.bin";
  save_encrypted_store(store, path);
  const EncryptedStore loaded = load_encrypted_store(path);
  CHECK(decrypt_store(loaded, key) == plain);
  std::remove(path.c_str());
}

TEST_CASE("key file holds 32 restricted bytes") {
  const SecretKey key = generate_key();
  const std::string path = "/tmp/adseal_key_test.bin";
  save_key_file(key, path);
  CHECK(load_key_file(path) == key);
  namespace fs = std::filesystem;
  const auto perms = fs::status(path).permissions();
  CHECK((perms & fs::perms::group_all) == fs::perms::none);
  CHECK((perms & fs::perms::others_all) == fs::perms::none);
  std::remove(path.c_str());
}

TEST_CASE("anonymization is stable within a key and unlinkable across keys") {
  const SecretKey k1 = generate_key();
  const SecretKey k2 = generate_key();
  const auto clients = round_clients(2, 2, 59);
  std::vector<ImpressionEvent> events = clients[0].events;
  events.insert(events.end(), clients[1].events.begin(), clients[1].events.end());

  const auto a1 = anonymize(events, k1);
  const auto a2 = anonymize(events, k1);
  const auto b = anonymize(events, k2);
  REQUIRE(a1.size() == events.size());
  for (size_t i = 0; i < events.size(); ++i) {
    CHECK(a1[i].user_id == a2[i].user_id);     // stable
    CHECK(a1[i].user_id != events[i].user_id); // actually pseudonymous
    CHECK(a1[i].user_id != b[i].user_id);      // unlinkable across keys
    // same source user, same pseudonym
    for (size_t j = 0; j < events.size(); ++j) {
      if (events[i].user_id == events[j].user_id) CHECK(a1[i].user_id == a1[j].user_id);
    }
    // all other fields preserved
    CHECK(a1[i].ad_id == events[i].ad_id);
    CHECK(a1[i].clicked == events[i].clicked);
    CHECK(a1[i].converted == events[i].converted);
    CHECK(a1[i].ad_category == events[i].ad_category);
    CHECK(a1[i].device == events[i].device);
    CHECK(a1[i].time_of_day == events[i].time_of_day);
  }
}

TEST_CASE("anonymization coarsens timestamps to the bucket start") {
  const SecretKey key = generate_key();
  ImpressionEvent e;
  e.user_id = "U1";
  e.ad_id = "A1";
  e.ts = 3 * 86400 + 14 * 3600 + 1234;  // day 3, afternoon
  e.ad_category = "x";
  e.time_of_day = TimeOfDay::Afternoon;
  const auto out = anonymize({e}, key);
  CHECK(out[0].ts == 3 * 86400 + 12 * 3600);
}
