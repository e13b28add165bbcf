#pragma once

#include <string>
#include <vector>

#include "adseal/model.hpp"
#include "adseal/rng.hpp"

namespace adseal {

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 32;
  int epochs = 6;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainStats {
  std::vector<double> epoch_loss;  // mean per-example BCE per epoch
  std::vector<std::string> warnings;
};

// One precomputed supervised example: the ad's token ids, the frozen
// user/context feature row, and the click label.
struct TrainExample {
  std::vector<int> token_ids;
  Matrix features;
  double label = 0.0;
};

// Pairs every event with its ad's tokens and the user/context features.
// The per-user tag block is the empirical click rate per category over
// that user's events in `log` (model-independent, so no train-time cycle).
std::vector<TrainExample> build_examples(const std::vector<ImpressionEvent>& log,
                                         const std::vector<AdCreative>& catalog,
                                         const Model& model);

// Mini-batch Adam over binary cross-entropy; updates the model in place.
// Deterministic given the rng stream. Throws on non-finite loss.
TrainStats train_loop(Model& model, const std::vector<ImpressionEvent>& log,
                      const std::vector<AdCreative>& catalog, const TrainConfig& cfg,
                      Rng& rng);

// Fresh model + full training run: builds the vocabulary from the catalog,
// initializes parameters from `seed`, then runs train_loop.
Model train_model(const std::vector<ImpressionEvent>& log,
                  const std::vector<AdCreative>& catalog, const EncoderConfig& enc_cfg,
                  const TrainConfig& cfg, bool ad_only_features, int min_freq, uint64_t seed,
                  TrainStats* stats_out = nullptr);

}  // namespace adseal
