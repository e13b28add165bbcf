#include "adseal/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "adseal/errors.hpp"
#include "adseal/io_util.hpp"
#include "adseal/rng.hpp"

namespace adseal {

using nlohmann::json;

namespace {

// Word pools keyed by category, used to template ad copy.
const std::vector<std::pair<std::string, std::vector<std::string>>> kCategoryWords = {
    {"electronics", {"smartphone", "laptop", "gadget", "headphones"}},
    {"fitness", {"tracker", "workout", "gym", "protein"}},
    {"travel", {"vacation", "flight", "hotel", "getaway"}},
    {"entertainment", {"streaming", "movies", "concert", "shows"}},
    {"home", {"appliance", "furniture", "kitchen", "decor"}},
    {"finance", {"insurance", "savings", "credit", "loan"}},
    {"education", {"course", "learning", "tutoring", "degree"}},
    {"fashion", {"sneakers", "jacket", "dress", "watch"}},
    {"food", {"snacks", "coffee", "delivery", "recipe"}},
    {"gaming", {"console", "controller", "arcade", "esports"}},
    {"auto", {"sedan", "tires", "detailing", "roadtrip"}},
    {"music", {"vinyl", "speakers", "playlist", "festival"}},
};

const std::vector<std::string> kAdjectives = {"new", "big", "top", "best", "great", "fresh"};
const std::vector<std::string> kOffers = {"sale", "deal", "offer", "discount", "promo"};

std::string pad_number(int n, int width) {
  std::string s = std::to_string(n);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

std::vector<std::string> category_names(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) {
    if (i < static_cast<int>(kCategoryWords.size())) {
      names.push_back(kCategoryWords[i].first);
    } else {
      names.push_back("category" + std::to_string(i + 1));
    }
  }
  return names;
}

void SyntheticSpec::validate() const {
  if (users < 1 || ads < 1 || categories < 1 || impressions_per_user < 1) {
    throw ConfigError("synthetic: users, ads, categories, impressions_per_user must be >= 1");
  }
  if (base_click_rate < 0.0 || base_click_rate > 1.0 || conversion_rate < 0.0 ||
      conversion_rate > 1.0) {
    throw ConfigError("synthetic: probabilities must lie in [0, 1]");
  }
  if (affinity_lift < 1.0) {
    throw ConfigError("synthetic: affinity_lift must be >= 1");
  }
  if (interests_min < 1 || interests_max < interests_min || interests_max > categories) {
    throw ConfigError("synthetic: need 1 <= interests_min <= interests_max <= categories");
  }
}

double PlantedTruth::click_prob(const std::string& user_id, const std::string& category) const {
  double p = base;
  auto it = interests.find(user_id);
  if (it != interests.end() &&
      std::find(it->second.begin(), it->second.end(), category) != it->second.end()) {
    p *= lift;
  }
  return std::min(p, 0.95);
}

void PlantedTruth::save_json(const std::string& path) const {
  json j;
  j["base"] = base;
  j["lift"] = lift;
  j["conversion_rate"] = conversion_rate;
  j["interests"] = interests;
  atomic_write_file(path, j.dump(2) + "\n");
}

PlantedTruth PlantedTruth::load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read planted truth " + path);
  json j;
  in >> j;
  PlantedTruth t;
  t.base = j.at("base").get<double>();
  t.lift = j.at("lift").get<double>();
  t.conversion_rate = j.at("conversion_rate").get<double>();
  t.interests =
      j.at("interests").get<std::map<std::string, std::vector<std::string>>>();
  return t;
}

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Dataset ds;
  Rng rng(spec.seed);
  const auto cats = category_names(spec.categories);

  // catalog: categories round-robin, copy mentions category words
  for (int a = 0; a < spec.ads; ++a) {
    const int c = a % spec.categories;
    AdCreative ad;
    ad.ad_id = "A" + pad_number(a, 3);
    ad.category = cats[c];
    const std::vector<std::string>& words =
        c < static_cast<int>(kCategoryWords.size())
            ? kCategoryWords[c].second
            : std::vector<std::string>{cats[c] + "x", cats[c] + "y", cats[c] + "z",
                                       cats[c] + "w"};
    const std::string w1 = words[rng.below(words.size())];
    std::string w2 = words[rng.below(words.size())];
    if (w2 == w1) w2 = words[(rng.below(words.size()) + 1) % words.size()];
    ad.copy = kAdjectives[rng.below(kAdjectives.size())] + " " + w1 + " " + w2 + " " +
              kOffers[rng.below(kOffers.size())] + " item" + std::to_string(a);
    ds.catalog.push_back(std::move(ad));
  }

  // users: interest set + fixed context
  const DeviceType devices[3] = {DeviceType::Mobile, DeviceType::Desktop, DeviceType::Laptop};
  const TimeOfDay tods[4] = {TimeOfDay::Morning, TimeOfDay::Afternoon, TimeOfDay::Evening,
                             TimeOfDay::Night};
  ds.truth.base = spec.base_click_rate;
  ds.truth.lift = spec.affinity_lift;
  ds.truth.conversion_rate = spec.conversion_rate;

  for (int u = 0; u < spec.users; ++u) {
    UserProfile p;
    p.user_id = "U" + pad_number(u, 4);
    p.device = devices[rng.below(3)];
    p.time_of_day = tods[rng.below(4)];

    const int n_interests =
        spec.interests_min +
        static_cast<int>(rng.below(static_cast<uint64_t>(spec.interests_max - spec.interests_min + 1)));
    std::vector<int> cat_ids(spec.categories);
    for (int i = 0; i < spec.categories; ++i) cat_ids[i] = i;
    rng.shuffle(cat_ids);
    std::vector<std::string> interests;
    for (int i = 0; i < n_interests; ++i) interests.push_back(cats[cat_ids[i]]);
    std::sort(interests.begin(), interests.end());
    ds.truth.interests[p.user_id] = interests;
    ds.profiles.push_back(std::move(p));
  }

  // impressions
  std::vector<ImpressionEvent> all;
  for (int u = 0; u < spec.users; ++u) {
    const auto& profile = ds.profiles[u];
    for (int j = 0; j < spec.impressions_per_user; ++j) {
      const auto& ad = ds.catalog[rng.below(static_cast<uint64_t>(spec.ads))];
      ImpressionEvent e;
      e.user_id = profile.user_id;
      e.ad_id = ad.ad_id;
      e.ts = 100000 + static_cast<int64_t>(j) * 1000 + u;
      e.ad_category = ad.category;
      e.device = profile.device;
      e.time_of_day = tods[rng.below(4)];
      e.clicked = rng.bernoulli(ds.truth.click_prob(e.user_id, e.ad_category));
      e.converted = e.clicked && rng.bernoulli(spec.conversion_rate);
      all.push_back(std::move(e));
    }
  }

  // 80/20 stratified split on the click label
  std::vector<size_t> pos, neg;
  for (size_t i = 0; i < all.size(); ++i) (all[i].clicked ? pos : neg).push_back(i);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::set<size_t> test_idx;
  for (size_t i = 0; i < pos.size() / 5; ++i) test_idx.insert(pos[i]);
  for (size_t i = 0; i < neg.size() / 5; ++i) test_idx.insert(neg[i]);
  for (size_t i = 0; i < all.size(); ++i) {
    (test_idx.count(i) ? ds.test_log : ds.train_log).push_back(all[i]);
  }

  const auto by_ts = [](const ImpressionEvent& a, const ImpressionEvent& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    return a.user_id < b.user_id;
  };
  std::stable_sort(ds.train_log.begin(), ds.train_log.end(), by_ts);
  std::stable_sort(ds.test_log.begin(), ds.test_log.end(), by_ts);
  return ds;
}

}  // namespace adseal
