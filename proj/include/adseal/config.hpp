#pragma once

#include <cstdint>
#include <string>

#include "adseal/encoder.hpp"
#include "adseal/privacy.hpp"
#include "adseal/synthetic.hpp"
#include "adseal/trainer.hpp"

namespace adseal {

// Whole-run configuration. One JSON document; every field has a default;
// unknown keys are rejected so typos cannot silently fall back.
struct RunConfig {
  uint64_t seed = 42;

  EncoderConfig encoder;
  int tokenizer_min_freq = 1;
  TrainConfig training;
  bool head_ad_only = false;

  int tags_top_k = 3;
  double tag_blend = 0.5;

  Topology privacy_mode = Topology::Local;
  double adversary_intercept_rate = 0.05;
  int privacy_rounds = 1;
  bool weighted_aggregation = false;
  int mc_replays = 10000;

  SyntheticSpec synthetic;
  int eval_k = 1;

  static RunConfig defaults() { return RunConfig{}; }

  // Parses and validates a JSON document; throws ConfigError on unknown
  // keys or out-of-range values.
  static RunConfig from_json_text(const std::string& text);
  static RunConfig load(const std::string& path);

  // Canonical echo of the resolved configuration (sorted keys, compact).
  std::string to_json_text() const;
  std::string config_hash() const;
};

}  // namespace adseal
