#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adseal/events.hpp"
#include "adseal/model.hpp"

namespace adseal {

// Uniform random ranking (the RRS baseline). Seeded and reproducible.
std::vector<ScoredAd> recommend_random(const std::vector<AdCreative>& catalog, int k,
                                       uint64_t seed);

// Content-based baseline: the user vector is the normalized mean embedding
// of the ads they clicked; scores are cosine similarities. Cold users fall
// back to recommend_random with the same seed.
std::vector<ScoredAd> recommend_content(const UserProfile& profile,
                                        const EmbeddedCatalog& catalog, int k, uint64_t seed);

// Bag-of-tokens ad representation for the content baseline: each ad is the
// L2-normalized mean of seeded random word vectors, so shared vocabulary is
// the only similarity signal. Independent of any trained model.
EmbeddedCatalog token_mean_catalog(const std::vector<AdCreative>& catalog,
                                   const Vocabulary& vocab, int dim, uint64_t seed);

// Alternating least squares on a dense ratings matrix. Each sweep solves
// both sides exactly, so the regularized objective never increases.
struct AlsFactors {
  Matrix user_factors;  // rows x factors
  Matrix item_factors;  // cols x factors
  std::vector<double> objective_per_sweep;
};

AlsFactors als_factorize(const Matrix& ratings, int factors, double lambda, int sweeps,
                         uint64_t seed);

// Rank-`factors` ALS matrix factorization over the binary user x ad click
// matrix (the RF baseline).
struct AlsModel {
  std::vector<std::string> user_ids;  // row order
  std::vector<std::string> ad_ids;    // column order
  Matrix user_factors;                // users x factors
  Matrix item_factors;                // ads x factors
  std::vector<double> objective_per_sweep;  // full regularized objective
  std::vector<std::pair<std::string, int>> popularity;  // ad_id, click count (desc)

  int user_index(const std::string& user_id) const;
};

AlsModel fit_als(const std::vector<ImpressionEvent>& train_log,
                 const std::vector<AdCreative>& catalog, int factors = 8,
                 double lambda = 0.1, int sweeps = 15, uint64_t seed = 0);

// Unseen users fall back to the item-popularity ranking.
std::vector<ScoredAd> recommend_cf(const UserProfile& profile, const AlsModel& als, int k);

}  // namespace adseal
