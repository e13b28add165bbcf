#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adseal/events.hpp"

namespace adseal {

// Parameters of the planted-structure click world: each user draws a set of
// interest categories; a matching ad's click probability is base * lift.
struct SyntheticSpec {
  int users = 200;
  int ads = 50;
  int categories = 8;
  int interests_min = 3;
  int interests_max = 5;
  double base_click_rate = 0.3;
  double affinity_lift = 3.0;      // multiplier for interest-matched ads
  double conversion_rate = 0.4;    // P(converted | clicked)
  int impressions_per_user = 60;
  uint64_t seed = 42;

  void validate() const;  // throws ConfigError on bad values
};

// The generator's ground truth, used only by the evaluation harness to
// sample outcomes for recommended ads. Recommenders never see it.
struct PlantedTruth {
  std::map<std::string, std::vector<std::string>> interests;  // user -> categories
  double base = 0.3;
  double lift = 3.0;
  double conversion_rate = 0.4;

  double click_prob(const std::string& user_id, const std::string& category) const;

  void save_json(const std::string& path) const;
  static PlantedTruth load_json(const std::string& path);
};

struct Dataset {
  std::vector<AdCreative> catalog;
  std::vector<UserProfile> profiles;  // context only; events live in the logs
  std::vector<ImpressionEvent> train_log;
  std::vector<ImpressionEvent> test_log;
  PlantedTruth truth;
};

// Deterministic per seed. Ad copy mentions its category's vocabulary so the
// encoder can tell categories apart; the 80/20 split is stratified by the
// click label.
Dataset generate(const SyntheticSpec& spec);

// Category names available to the generator, in id order.
std::vector<std::string> category_names(int n);

}  // namespace adseal
