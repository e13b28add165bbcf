#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "adseal/errors.hpp"
#include "adseal/evaluate.hpp"
#include "adseal/model.hpp"
#include "adseal/trainer.hpp"
#include "test_util.hpp"

using namespace adseal;

namespace {

Model tiny_model(const std::vector<AdCreative>& catalog, bool ad_only, uint64_t seed,
                 int d_model = 8) {
  EncoderConfig cfg;
  cfg.d_model = d_model;
  cfg.d_k = d_model;
  cfg.layers = 1;
  cfg.max_len = 8;
  std::vector<std::string> copies;
  for (const auto& ad : catalog) copies.push_back(ad.copy);
  FeatureConfig fc;
  fc.ad_only = ad_only;
  std::set<std::string> cats;
  for (const auto& ad : catalog) cats.insert(ad.category);
  fc.categories.assign(cats.begin(), cats.end());
  Rng rng(seed);
  return Model::init(cfg, build_vocab(copies, 1), fc, rng);
}

std::vector<AdCreative> small_catalog() {
  return {
      {"A00", "new smartphone gadget sale", "electronics"},
      {"A01", "big laptop deal discount", "electronics"},
      {"A02", "great vacation flight offer", "travel"},
      {"A03", "fresh hotel getaway promo", "travel"},
      {"A04", "top workout tracker deal", "fitness"},
      {"A05", "best gym protein offer", "fitness"},
  };
}

ImpressionEvent make_event(const std::string& user, const std::string& ad,
                           const std::string& category, bool clicked, int64_t ts,
                           bool converted = false) {
  ImpressionEvent e;
  e.user_id = user;
  e.ad_id = ad;
  e.ts = ts;
  e.clicked = clicked;
  e.converted = converted;
  e.ad_category = category;
  e.device = DeviceType::Mobile;
  e.time_of_day = TimeOfDay::Morning;
  return e;
}

}  // namespace

TEST_CASE("predict_ctr is 0.5 for a zero head") {
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, false, 5);
  model.head.w = Matrix::zeros(model.head.w.rows, 1);
  model.head.b = Matrix::zeros(1, 1);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  const Matrix f = user_features(model.features, DeviceType::Mobile, TimeOfDay::Morning, {},
                                 "electronics");
  CHECK(predict_ctr(ec.embeddings[0], f, model.head) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("predict_ctr saturates under a huge bias but stays inside (0,1)") {
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, false, 7);
  model.head.b.at(0, 0) = 50.0;
  const auto ec = EmbeddedCatalog::build(catalog, model);
  const Matrix f = user_features(model.features, DeviceType::Desktop, TimeOfDay::Night, {},
                                 "travel");
  const double p = predict_ctr(ec.embeddings[2], f, model.head);
  CHECK(p >= 1.0 - 1e-9);
  CHECK(p < 1.0);
  model.head.b.at(0, 0) = -50.0;
  const double q = predict_ctr(ec.embeddings[2], f, model.head);
  CHECK(q <= 1e-9);
  CHECK(q > 0.0);
}

TEST_CASE("predict_ctr matches a straight-line sigmoid oracle") {
  const auto catalog = small_catalog();
  Rng rng(11);
  Model model = tiny_model(catalog, false, 11);
  for (auto& v : model.head.w.data) v = rng.normal(0.0, 0.8);
  model.head.b.at(0, 0) = rng.normal(0.0, 0.5);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  std::map<std::string, double> tags = {{"electronics", 0.7}, {"travel", 0.2}};
  for (size_t a = 0; a < ec.ads.size(); ++a) {
    const Matrix f = user_features(model.features, DeviceType::Laptop, TimeOfDay::Evening,
                                   tags, ec.ads[a].category);
    // independent recomputation, plain loops
    double z = model.head.b.at(0, 0);
    for (int c = 0; c < ec.embeddings[a].vector.cols; ++c) {
      z += ec.embeddings[a].vector.at(0, c) * model.head.w.at(c, 0);
    }
    for (int c = 0; c < f.cols; ++c) {
      z += f.at(0, c) * model.head.w.at(ec.embeddings[a].vector.cols + c, 0);
    }
    const double expected = 1.0 / (1.0 + std::exp(-z));
    CHECK(std::fabs(predict_ctr(ec.embeddings[a], f, model.head) - expected) < 1e-12);
  }
}

TEST_CASE("predict_ctr rejects mismatched feature width") {
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, false, 13);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  CHECK_THROWS_AS(predict_ctr(ec.embeddings[0], Matrix(1, 2), model.head), DimensionError);
}

TEST_CASE("sigmoid head is strictly monotone in the logit") {
  Rng rng(17);
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, true, 17);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  // vary only the bias: higher logit must mean strictly higher probability
  // (range kept inside the 1e-12 output clamp)
  double prev = -1.0;
  for (double b = -25.0; b <= 25.0; b += 1.5) {
    model.head.b.at(0, 0) = b;
    const double p = predict_ctr(ec.embeddings[0], Matrix(1, 0), model.head);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("build_user_tags puts the only-clicked category on top") {
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, false, 19);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  UserProfile u;
  u.user_id = "U1";
  u.events = {
      make_event("U1", "A00", "electronics", true, 1),
      make_event("U1", "A01", "electronics", true, 2),
      make_event("U1", "A02", "travel", false, 3),
      make_event("U1", "A04", "fitness", false, 4),
  };
  const UserTagSet tags = build_user_tags(u, model, ec, 3);
  REQUIRE_FALSE(tags.tags.empty());
  CHECK(tags.tags[0].category == "electronics");
  for (const auto& t : tags.tags) {
    CHECK(t.weight >= 0.0);
    CHECK(t.weight <= 1.0);
  }
}

TEST_CASE("uniform random clicks give nearly uniform tag weights") {
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, false, 23);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  Rng rng(23);
  UserProfile u;
  u.user_id = "U2";
  int64_t ts = 1;
  for (int round = 0; round < 120; ++round) {
    const auto& ad = catalog[rng.below(catalog.size())];
    u.events.push_back(make_event("U2", ad.ad_id, ad.category, rng.bernoulli(0.5), ts++));
  }
  const UserTagSet tags = build_user_tags(u, model, ec, 3);
  REQUIRE(tags.tags.size() == 3);
  const double spread = tags.tags.front().weight - tags.tags.back().weight;
  CHECK(spread < 0.1);
}

TEST_CASE("one-event history yields exactly that category") {
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, false, 29);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  UserProfile u;
  u.user_id = "U3";
  u.events = {make_event("U3", "A02", "travel", true, 1)};
  const UserTagSet tags = build_user_tags(u, model, ec, 3);
  REQUIRE(tags.tags.size() == 1);
  CHECK(tags.tags[0].category == "travel");
}

TEST_CASE("build_user_tags rejects empty history") {
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, false, 31);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  UserProfile u;
  u.user_id = "U4";
  CHECK_THROWS_AS(build_user_tags(u, model, ec, 3), DataError);
}

TEST_CASE("recommend on a single-ad catalog returns that ad") {
  const std::vector<AdCreative> catalog = {{"A00", "lonely ad copy", "misc"}};
  Model model = tiny_model(catalog, false, 37);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  UserProfile u;
  u.user_id = "U5";
  const auto recs = recommend(u, ec, model, 3);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].ad_id == "A00");
}

TEST_CASE("recommend rejects an empty catalog") {
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, false, 41);
  EmbeddedCatalog empty;
  UserProfile u;
  CHECK_THROWS_AS(recommend(u, empty, model, 3), DataError);
}

TEST_CASE("tech-leaning profile ranks electronics ads first") {
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, false, 43);
  // Give the match feature a clear positive weight so affinity dominates.
  model.head.w = Matrix::zeros(model.head.w.rows, 1);
  model.head.w.at(model.head.w.rows - 1, 0) = 4.0;
  const auto ec = EmbeddedCatalog::build(catalog, model);

  UserProfile u001;
  u001.user_id = "U001";
  u001.device = DeviceType::Mobile;
  u001.time_of_day = TimeOfDay::Morning;
  u001.events = {
      make_event("U001", "A00", "electronics", true, 1, true),
      make_event("U001", "A01", "electronics", true, 2),
      make_event("U001", "A02", "travel", false, 3),
      make_event("U001", "A05", "fitness", false, 4),
  };
  const auto recs = recommend(u001, ec, model, 2);
  REQUIRE(recs.size() == 2);
  for (const auto& r : recs) {
    CHECK(ec.creative(r.ad_id)->category == "electronics");
  }
}

TEST_CASE("bit-identical ads tie-break by ascending ad id") {
  const std::vector<AdCreative> catalog = {
      {"A09", "same words here", "misc"},
      {"A03", "same words here", "misc"},
  };
  Model model = tiny_model(catalog, false, 47);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  UserProfile u;
  u.user_id = "U6";
  const auto recs = recommend(u, ec, model, 2);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].score == recs[1].score);
  CHECK(recs[0].ad_id == "A03");
  CHECK(recs[1].ad_id == "A09");
}

TEST_CASE("recommend is deterministic") {
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, false, 53);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  UserProfile u;
  u.user_id = "U7";
  u.events = {make_event("U7", "A02", "travel", true, 1)};
  const auto a = recommend(u, ec, model, 4);
  const auto b = recommend(u, ec, model, 4);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ad_id == b[i].ad_id);
    CHECK(a[i].score == b[i].score);
  }
}

TEST_CASE("ranking order is invariant under increasing score transforms") {
  const auto catalog = small_catalog();
  Model model = tiny_model(catalog, false, 59);
  Rng rng(59);
  for (auto& v : model.head.w.data) v = rng.normal(0.0, 0.6);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  UserProfile u;
  u.user_id = "U8";
  u.events = {make_event("U8", "A00", "electronics", true, 1),
              make_event("U8", "A02", "travel", true, 2)};
  const auto recs = recommend(u, ec, model, static_cast<int>(catalog.size()));

  for (auto transform : {+[](double s) { return 3.0 * s + 1.0; },
                         +[](double s) { return std::tanh(s); },
                         +[](double s) { return std::exp(s); }}) {
    std::vector<ScoredAd> transformed;
    for (const auto& r : recs) transformed.push_back({r.ad_id, transform(r.score)});
    std::sort(transformed.begin(), transformed.end(), [](const ScoredAd& a, const ScoredAd& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.ad_id < b.ad_id;
    });
    for (size_t i = 0; i < recs.size(); ++i) CHECK(transformed[i].ad_id == recs[i].ad_id);
  }
}

TEST_CASE("training memorizes a single event") {
  const auto catalog = small_catalog();
  std::vector<ImpressionEvent> log = {make_event("U9", "A00", "electronics", true, 1)};
  TrainConfig tc;
  tc.lr = 0.05;
  tc.batch_size = 1;
  tc.epochs = 60;
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.d_k = 8;
  cfg.layers = 1;
  cfg.max_len = 8;
  TrainStats stats;
  train_model(log, catalog, cfg, tc, false, 1, 101, &stats);
  REQUIRE(static_cast<int>(stats.epoch_loss.size()) == tc.epochs);
  CHECK(stats.epoch_loss.back() < 0.02);
  for (size_t i = 1; i < stats.epoch_loss.size(); ++i) {
    CHECK(stats.epoch_loss[i] <= stats.epoch_loss[i - 1] + 1e-3);
  }
  // single positive event means an all-one-class warning
  REQUIRE_FALSE(stats.warnings.empty());
  CHECK(stats.warnings[0].find("all positive") != std::string::npos);
}

TEST_CASE("training loss decreases on a learnable log") {
  const auto catalog = small_catalog();
  std::vector<ImpressionEvent> log;
  int64_t ts = 1;
  Rng rng(61);
  for (int i = 0; i < 60; ++i) {
    const auto& ad = catalog[rng.below(catalog.size())];
    const bool clicked = ad.category == "electronics";  // fully separable
    log.push_back(make_event("U" + std::to_string(i % 4), ad.ad_id, ad.category, clicked, ts++));
  }
  TrainConfig tc;
  tc.lr = 0.01;
  tc.epochs = 5;
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.d_k = 8;
  cfg.layers = 1;
  cfg.max_len = 8;
  TrainStats stats;
  train_model(log, catalog, cfg, tc, false, 1, 103, &stats);
  CHECK(stats.epoch_loss.back() < stats.epoch_loss.front());
}

TEST_CASE("training aborts with a diagnostic on non-finite state") {
  const auto catalog = small_catalog();
  std::vector<ImpressionEvent> log;
  int64_t ts = 1;
  for (int i = 0; i < 8; ++i) {
    log.push_back(make_event("U0", catalog[i % catalog.size()].ad_id,
                             catalog[i % catalog.size()].category, i % 2 == 0, ts++));
  }
  TrainConfig tc;
  tc.epochs = 2;
  EncoderConfig cfg;
  cfg.d_model = 4;
  cfg.d_k = 4;
  cfg.layers = 1;
  cfg.max_len = 8;
  Model model = tiny_model(catalog, false, 107, 4);
  model.stack.layers[0].ffn_w1.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
  Rng rng(107);
  CHECK_THROWS_AS(train_loop(model, log, catalog, tc, rng), Error);
}

TEST_CASE("ad-only head trains and predicts without user features") {
  const auto catalog = small_catalog();
  std::vector<ImpressionEvent> log;
  int64_t ts = 1;
  Rng rng(71);
  for (int i = 0; i < 40; ++i) {
    const auto& ad = catalog[rng.below(catalog.size())];
    log.push_back(make_event("U" + std::to_string(i % 3), ad.ad_id, ad.category,
                             ad.category == "travel", ts++));
  }
  TrainConfig tc;
  tc.epochs = 2;
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.d_k = 8;
  cfg.layers = 1;
  cfg.max_len = 8;
  const Model model = train_model(log, catalog, cfg, tc, /*ad_only=*/true, 1, 109, nullptr);
  CHECK(model.features.user_dim() == 0);
  CHECK(model.head.w.rows == cfg.d_model);
  const auto ec = EmbeddedCatalog::build(catalog, model);
  const double p = predict_ctr(ec.embeddings[0], Matrix(1, 0), model.head);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
  UserProfile u;
  u.user_id = "U0";
  u.events = {log[0]};
  const auto recs = recommend(u, ec, model, 3);
  CHECK_FALSE(recs.empty());
}

TEST_CASE("AUC flips exactly under label inversion") {
  Rng rng(67);
  std::vector<double> scores;
  std::vector<int> labels, flipped;
  for (int i = 0; i < 400; ++i) {
    scores.push_back(rng.uniform());
    const int y = rng.bernoulli(0.4) ? 1 : 0;
    labels.push_back(y);
    flipped.push_back(1 - y);
  }
  const double a = auc_score(scores, labels);
  const double b = auc_score(scores, flipped);
  CHECK(a + b == doctest::Approx(1.0).epsilon(1e-12));
}
