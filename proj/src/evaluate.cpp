#include "adseal/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "adseal/errors.hpp"
#include "adseal/rng.hpp"

namespace adseal {

namespace {

class ModelSystem final : public RecSystem {
 public:
  ModelSystem(const Model& model, const EmbeddedCatalog& catalog, int tags_top_k,
              double tag_blend)
      : model_(model), catalog_(catalog), tags_top_k_(tags_top_k), tag_blend_(tag_blend) {}

  std::string name() const override { return "model"; }

  std::vector<ScoredAd> recommend_for(const UserProfile& profile, int k,
                                      uint64_t) const override {
    return recommend(profile, catalog_, model_, k, tags_top_k_, tag_blend_);
  }

  bool score_event(const UserProfile& profile, const ImpressionEvent& event,
                   double* score_out) const override {
    const AdEmbedding* emb = catalog_.find(event.ad_id);
    if (!emb) return false;
    std::map<std::string, double> weights;
    if (!profile.events.empty()) {
      weights = category_weights(profile, model_, catalog_, tag_blend_);
    }
    const Matrix f = user_features(model_.features, event.device, event.time_of_day, weights,
                                   event.ad_category);
    *score_out = predict_ctr(*emb, f, model_.head);
    return true;
  }

 private:
  const Model& model_;
  const EmbeddedCatalog& catalog_;
  int tags_top_k_;
  double tag_blend_;
};

class ContentSystem final : public RecSystem {
 public:
  explicit ContentSystem(const EmbeddedCatalog& catalog) : catalog_(catalog) {}
  std::string name() const override { return "content"; }
  std::vector<ScoredAd> recommend_for(const UserProfile& profile, int k,
                                      uint64_t user_seed) const override {
    return recommend_content(profile, catalog_, k, user_seed);
  }

 private:
  const EmbeddedCatalog& catalog_;
};

class CfSystem final : public RecSystem {
 public:
  explicit CfSystem(const AlsModel& als) : als_(als) {}
  std::string name() const override { return "cf"; }
  std::vector<ScoredAd> recommend_for(const UserProfile& profile, int k,
                                      uint64_t) const override {
    return recommend_cf(profile, als_, k);
  }

 private:
  const AlsModel& als_;
};

class RandomSystem final : public RecSystem {
 public:
  explicit RandomSystem(const std::vector<AdCreative>& catalog) : catalog_(catalog) {}
  std::string name() const override { return "random"; }
  std::vector<ScoredAd> recommend_for(const UserProfile&, int k,
                                      uint64_t user_seed) const override {
    return recommend_random(catalog_, k, user_seed);
  }

 private:
  const std::vector<AdCreative>& catalog_;
};

std::string format_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v);
  return buf;
}

std::string format_frac(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::unique_ptr<RecSystem> make_model_system(const Model& model, const EmbeddedCatalog& catalog,
                                             int tags_top_k, double tag_blend) {
  return std::make_unique<ModelSystem>(model, catalog, tags_top_k, tag_blend);
}
std::unique_ptr<RecSystem> make_content_system(const EmbeddedCatalog& catalog) {
  return std::make_unique<ContentSystem>(catalog);
}
std::unique_ptr<RecSystem> make_cf_system(const AlsModel& als) {
  return std::make_unique<CfSystem>(als);
}
std::unique_ptr<RecSystem> make_random_system(const std::vector<AdCreative>& catalog) {
  return std::make_unique<RandomSystem>(catalog);
}

double auc_score(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw DataError("auc_score: need equal nonempty score/label vectors");
  }
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // average ranks over ties
  std::vector<double> rank(scores.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t t = i; t <= j; ++t) rank[order[t]] = avg;
    i = j + 1;
  }

  double pos_rank_sum = 0.0;
  size_t pos = 0;
  for (size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] == 1) {
      pos_rank_sum += rank[t];
      ++pos;
    }
  }
  const size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    throw DataError("auc_score: need both classes present");
  }
  return (pos_rank_sum - static_cast<double>(pos) * (pos + 1) / 2.0) /
         (static_cast<double>(pos) * static_cast<double>(neg));
}

EvalReport evaluate(const std::vector<const RecSystem*>& systems,
                    const std::vector<UserProfile>& profiles, const PlantedTruth& truth,
                    const std::vector<ImpressionEvent>& test_log, int k, uint64_t seed) {
  if (test_log.empty()) throw DataError("evaluate: empty test log");
  if (profiles.empty()) throw DataError("evaluate: no profiles");

  std::map<std::string, const UserProfile*> by_user;
  for (const auto& p : profiles) by_user[p.user_id] = &p;

  // ad_id -> category comes from whatever the systems recommend; look it up
  // in the test log first, then fall back to the profiles' histories.
  std::map<std::string, std::string> ad_category;
  for (const auto& e : test_log) ad_category[e.ad_id] = e.ad_category;
  for (const auto& p : profiles)
    for (const auto& e : p.events) ad_category.emplace(e.ad_id, e.ad_category);

  EvalReport report;
  report.seed = seed;
  report.k = k;
  report.users = static_cast<int>(profiles.size());

  for (size_t s = 0; s < systems.size(); ++s) {
    const RecSystem& sys = *systems[s];
    SystemReport sr;
    sr.name = sys.name();
    int clicks = 0, conversions = 0;
    for (size_t u = 0; u < profiles.size(); ++u) {
      const auto& profile = profiles[u];
      const uint64_t user_seed = Rng::derive(seed, 1000 + s, u);
      std::vector<ScoredAd> recs;
      try {
        recs = sys.recommend_for(profile, k, user_seed);
      } catch (const Error&) {
        ++sr.skips;
        continue;
      }
      Rng outcome(Rng::derive(seed, 2000 + s, u));
      for (const auto& rec : recs) {
        auto cat = ad_category.find(rec.ad_id);
        const std::string category = cat == ad_category.end() ? "" : cat->second;
        const bool clicked = outcome.bernoulli(truth.click_prob(profile.user_id, category));
        const bool converted = clicked && outcome.bernoulli(truth.conversion_rate);
        ++sr.n_impressions;
        if (clicked) ++clicks;
        if (converted) ++conversions;
      }
    }
    if (sr.n_impressions > 0) {
      sr.ctr = static_cast<double>(clicks) / sr.n_impressions;
      sr.cr = static_cast<double>(conversions) / sr.n_impressions;
    }

    // AUC over the held-out log for systems that can score events
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& e : test_log) {
      auto it = by_user.find(e.user_id);
      if (it == by_user.end()) continue;
      double score = 0.0;
      if (sys.score_event(*it->second, e, &score)) {
        scores.push_back(score);
        labels.push_back(e.clicked ? 1 : 0);
      }
    }
    if (!scores.empty()) {
      try {
        sr.auc = auc_score(scores, labels);
        sr.has_auc = true;
      } catch (const DataError&) {
        sr.has_auc = false;  // single-class test log
      }
    }
    report.systems.push_back(std::move(sr));
  }
  return report;
}

ReplayMetrics replay_metrics(const std::vector<ImpressionEvent>& log) {
  if (log.empty()) throw DataError("replay: empty log");
  ReplayMetrics m;
  for (const auto& e : log) {
    ++m.impressions;
    if (e.clicked) ++m.clicks;
    if (e.converted) ++m.conversions;
  }
  m.ctr = static_cast<double>(m.clicks) / m.impressions;
  m.cr = static_cast<double>(m.conversions) / m.impressions;
  return m;
}

std::string report_to_csv(const EvalReport& report, const std::string& config_echo) {
  std::string out = "# config: " + config_echo + "\n";
  out += "system,ctr_pct,cr_pct,auc,n_impressions,skips\n";
  for (const auto& s : report.systems) {
    out += s.name + "," + format_pct(s.ctr) + "," + format_pct(s.cr) + ",";
    out += s.has_auc ? format_frac(s.auc) : std::string("");
    out += "," + std::to_string(s.n_impressions) + "," + std::to_string(s.skips) + "\n";
  }
  return out;
}

std::string report_to_markdown(const EvalReport& report, const std::string& config_echo) {
  std::string out = "# Recommendation performance\n\n";
  out += "| System | CTR (%) | CR (%) | AUC |\n";
  out += "|--------|---------|--------|-----|\n";
  for (const auto& s : report.systems) {
    out += "| " + s.name + " | " + format_pct(s.ctr) + " | " + format_pct(s.cr) + " | " +
           (s.has_auc ? format_frac(s.auc) : std::string("-")) + " |\n";
  }
  out += "\nSeed: " + std::to_string(report.seed) + ", slate size k=" + std::to_string(report.k) +
         ", users: " + std::to_string(report.users) + "\n";
  out += "\nConfig: `" + config_echo + "`\n";
  return out;
}

}  // namespace adseal
