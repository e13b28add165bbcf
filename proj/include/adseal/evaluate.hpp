#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "adseal/baselines.hpp"
#include "adseal/events.hpp"
#include "adseal/model.hpp"
#include "adseal/synthetic.hpp"

namespace adseal {

// A recommendation system under evaluation.
class RecSystem {
 public:
  virtual ~RecSystem() = default;
  virtual std::string name() const = 0;
  virtual std::vector<ScoredAd> recommend_for(const UserProfile& profile, int k,
                                              uint64_t user_seed) const = 0;
  // Per-event CTR score for AUC; returns false when not applicable.
  virtual bool score_event(const UserProfile& profile, const ImpressionEvent& event,
                           double* score_out) const {
    (void)profile;
    (void)event;
    (void)score_out;
    return false;
  }
};

std::unique_ptr<RecSystem> make_model_system(const Model& model, const EmbeddedCatalog& catalog,
                                             int tags_top_k, double tag_blend);
std::unique_ptr<RecSystem> make_content_system(const EmbeddedCatalog& catalog);
std::unique_ptr<RecSystem> make_cf_system(const AlsModel& als);
std::unique_ptr<RecSystem> make_random_system(const std::vector<AdCreative>& catalog);

struct SystemReport {
  std::string name;
  double ctr = 0.0;
  double cr = 0.0;
  double auc = 0.0;       // valid iff has_auc
  bool has_auc = false;
  int n_impressions = 0;  // recommended impressions actually judged
  int skips = 0;          // users skipped because the system failed
};

struct EvalReport {
  std::vector<SystemReport> systems;
  uint64_t seed = 0;
  std::string spec_hash;  // provenance of the resolved run configuration
  int k = 1;
  int users = 0;
};

// Mann-Whitney AUC with average ranks for ties.
double auc_score(const std::vector<double>& scores, const std::vector<int>& labels);

// Simulation-mode evaluation: each system recommends top-k per user and the
// planted truth samples the click/conversion outcome (seeded per user).
// AUC is computed over `test_log` for systems that can score events.
EvalReport evaluate(const std::vector<const RecSystem*>& systems,
                    const std::vector<UserProfile>& profiles, const PlantedTruth& truth,
                    const std::vector<ImpressionEvent>& test_log, int k, uint64_t seed);

// Logged-replay metrics: CTR/CR counted directly over the rows of a log.
struct ReplayMetrics {
  int impressions = 0;
  int clicks = 0;
  int conversions = 0;
  double ctr = 0.0;
  double cr = 0.0;
};

ReplayMetrics replay_metrics(const std::vector<ImpressionEvent>& log);

std::string report_to_csv(const EvalReport& report, const std::string& config_echo);
std::string report_to_markdown(const EvalReport& report, const std::string& config_echo);

}  // namespace adseal
