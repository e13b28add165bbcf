#include "adseal/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "adseal/errors.hpp"
#include "adseal/io_util.hpp"

namespace adseal {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("config: unknown key '" + (scope.empty() ? it.key() : scope + "." + it.key()) + "'");
    }
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
  }
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  RunConfig cfg;
  reject_unknown_keys(j, {"seed", "encoder", "tokenizer", "training", "head", "tags",
                          "privacy", "synthetic", "eval"},
                      "");
  read_field(j, "seed", cfg.seed);

  if (j.contains("encoder")) {
    const json& e = j["encoder"];
    reject_unknown_keys(e, {"d_model", "d_k", "layers", "max_len", "ffn_mult",
                            "scaled_attention", "minimal_blocks"},
                        "encoder");
    read_field(e, "d_model", cfg.encoder.d_model);
    read_field(e, "d_k", cfg.encoder.d_k);
    read_field(e, "layers", cfg.encoder.layers);
    read_field(e, "max_len", cfg.encoder.max_len);
    read_field(e, "ffn_mult", cfg.encoder.ffn_mult);
    read_field(e, "scaled_attention", cfg.encoder.scaled_attention);
    read_field(e, "minimal_blocks", cfg.encoder.minimal_blocks);
    if (cfg.encoder.d_model < 1 || cfg.encoder.d_k < 1 || cfg.encoder.layers < 0 ||
        cfg.encoder.max_len < 1 || cfg.encoder.ffn_mult < 1) {
      throw ConfigError("config: encoder dimensions out of range");
    }
  }
  if (j.contains("tokenizer")) {
    const json& t = j["tokenizer"];
    reject_unknown_keys(t, {"min_freq"}, "tokenizer");
    read_field(t, "min_freq", cfg.tokenizer_min_freq);
    if (cfg.tokenizer_min_freq < 1) throw ConfigError("config: tokenizer.min_freq must be >= 1");
  }
  if (j.contains("training")) {
    const json& t = j["training"];
    reject_unknown_keys(t, {"lr", "batch_size", "epochs", "adam_beta1", "adam_beta2",
                            "adam_eps"},
                        "training");
    read_field(t, "lr", cfg.training.lr);
    read_field(t, "batch_size", cfg.training.batch_size);
    read_field(t, "epochs", cfg.training.epochs);
    read_field(t, "adam_beta1", cfg.training.adam_beta1);
    read_field(t, "adam_beta2", cfg.training.adam_beta2);
    read_field(t, "adam_eps", cfg.training.adam_eps);
    if (cfg.training.lr <= 0.0 || cfg.training.batch_size < 1 || cfg.training.epochs < 1) {
      throw ConfigError("config: training hyperparameters out of range");
    }
  }
  if (j.contains("head")) {
    const json& h = j["head"];
    reject_unknown_keys(h, {"ad_only"}, "head");
    read_field(h, "ad_only", cfg.head_ad_only);
  }
  if (j.contains("tags")) {
    const json& t = j["tags"];
    reject_unknown_keys(t, {"top_k", "blend"}, "tags");
    read_field(t, "top_k", cfg.tags_top_k);
    read_field(t, "blend", cfg.tag_blend);
    if (cfg.tags_top_k < 1 || cfg.tag_blend < 0.0 || cfg.tag_blend > 1.0) {
      throw ConfigError("config: tags.top_k must be >= 1 and blend in [0,1]");
    }
  }
  if (j.contains("privacy")) {
    const json& p = j["privacy"];
    reject_unknown_keys(p, {"mode", "intercept_rate", "rounds", "weighted_aggregation",
                            "mc_replays"},
                        "privacy");
    if (p.contains("mode")) cfg.privacy_mode = topology_from_string(p.at("mode").get<std::string>());
    read_field(p, "intercept_rate", cfg.adversary_intercept_rate);
    read_field(p, "rounds", cfg.privacy_rounds);
    read_field(p, "weighted_aggregation", cfg.weighted_aggregation);
    read_field(p, "mc_replays", cfg.mc_replays);
    if (cfg.adversary_intercept_rate < 0.0 || cfg.adversary_intercept_rate > 1.0 ||
        cfg.privacy_rounds < 1 || cfg.mc_replays < 1) {
      throw ConfigError("config: privacy settings out of range");
    }
  }
  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    reject_unknown_keys(s, {"users", "ads", "categories", "interests_min", "interests_max",
                            "base_click_rate", "affinity_lift", "conversion_rate",
                            "impressions_per_user", "seed"},
                        "synthetic");
    read_field(s, "users", cfg.synthetic.users);
    read_field(s, "ads", cfg.synthetic.ads);
    read_field(s, "categories", cfg.synthetic.categories);
    read_field(s, "interests_min", cfg.synthetic.interests_min);
    read_field(s, "interests_max", cfg.synthetic.interests_max);
    read_field(s, "base_click_rate", cfg.synthetic.base_click_rate);
    read_field(s, "affinity_lift", cfg.synthetic.affinity_lift);
    read_field(s, "conversion_rate", cfg.synthetic.conversion_rate);
    read_field(s, "impressions_per_user", cfg.synthetic.impressions_per_user);
    read_field(s, "seed", cfg.synthetic.seed);
    cfg.synthetic.validate();
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    reject_unknown_keys(e, {"k"}, "eval");
    read_field(e, "k", cfg.eval_k);
    if (cfg.eval_k < 1) throw ConfigError("config: eval.k must be >= 1");
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string RunConfig::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["encoder"] = {{"d_model", encoder.d_model},
                  {"d_k", encoder.d_k},
                  {"layers", encoder.layers},
                  {"max_len", encoder.max_len},
                  {"ffn_mult", encoder.ffn_mult},
                  {"scaled_attention", encoder.scaled_attention},
                  {"minimal_blocks", encoder.minimal_blocks}};
  j["tokenizer"] = {{"min_freq", tokenizer_min_freq}};
  j["training"] = {{"lr", training.lr},
                   {"batch_size", training.batch_size},
                   {"epochs", training.epochs},
                   {"adam_beta1", training.adam_beta1},
                   {"adam_beta2", training.adam_beta2},
                   {"adam_eps", training.adam_eps}};
  j["head"] = {{"ad_only", head_ad_only}};
  j["tags"] = {{"top_k", tags_top_k}, {"blend", tag_blend}};
  j["privacy"] = {{"mode", to_string(privacy_mode)},
                  {"intercept_rate", adversary_intercept_rate},
                  {"rounds", privacy_rounds},
                  {"weighted_aggregation", weighted_aggregation},
                  {"mc_replays", mc_replays}};
  j["synthetic"] = {{"users", synthetic.users},
                    {"ads", synthetic.ads},
                    {"categories", synthetic.categories},
                    {"interests_min", synthetic.interests_min},
                    {"interests_max", synthetic.interests_max},
                    {"base_click_rate", synthetic.base_click_rate},
                    {"affinity_lift", synthetic.affinity_lift},
                    {"conversion_rate", synthetic.conversion_rate},
                    {"impressions_per_user", synthetic.impressions_per_user},
                    {"seed", synthetic.seed}};
  j["eval"] = {{"k", eval_k}};
  return j.dump();
}

std::string RunConfig::config_hash() const { return sha256_hex(to_json_text()); }

}  // namespace adseal
