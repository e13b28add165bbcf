// adseal: privacy-preserving ad recommendation pipeline.
// Subcommands: gen, train, evaluate, audit, replay.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "adseal/baselines.hpp"
#include "adseal/config.hpp"
#include "adseal/errors.hpp"
#include "adseal/evaluate.hpp"
#include "adseal/io_util.hpp"
#include "adseal/model.hpp"
#include "adseal/privacy.hpp"
#include "adseal/synthetic.hpp"
#include "adseal/trainer.hpp"

namespace {

using namespace adseal;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPrivacy = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> mode;
  std::string out_dir = "out";
  std::optional<int> k;
};

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg =
      flags.config_path.empty() ? RunConfig::defaults() : RunConfig::load(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.mode) cfg.privacy_mode = topology_from_string(*flags.mode);
  if (flags.k) cfg.eval_k = *flags.k;
  return cfg;
}

void write_run_meta(const RunConfig& cfg, const std::string& dir, const std::string& command) {
  json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config"] = json::parse(cfg.to_json_text());
  j["config_sha256"] = cfg.config_hash();
  atomic_write_file(dir + "/run_meta.json", j.dump(2) + "\n");
}

std::string config_echo(const RunConfig& cfg) { return cfg.to_json_text(); }

int cmd_gen(const CommonFlags& flags) {
  RunConfig cfg = resolve_config(flags);
  cfg.synthetic.seed = cfg.seed;  // one seed drives the whole run
  std::filesystem::create_directories(flags.out_dir);
  const Dataset ds = generate(cfg.synthetic);

  save_catalog_jsonl(ds.catalog, flags.out_dir + "/catalog.jsonl");
  save_profiles_jsonl(ds.profiles, flags.out_dir + "/profiles.jsonl");
  save_events_jsonl(ds.train_log, flags.out_dir + "/train.jsonl");
  save_events_jsonl(ds.test_log, flags.out_dir + "/test.jsonl");
  ds.truth.save_json(flags.out_dir + "/planted.json");
  write_run_meta(cfg, flags.out_dir, "gen");

  std::cout << "generated " << ds.catalog.size() << " ads, " << ds.profiles.size()
            << " users, " << ds.train_log.size() << " train events, " << ds.test_log.size()
            << " test events into " << flags.out_dir << "\n";
  return kExitOk;
}

int cmd_train(const CommonFlags& flags, const std::string& data_dir) {
  RunConfig cfg = resolve_config(flags);
  std::filesystem::create_directories(flags.out_dir);
  const auto catalog = load_catalog_jsonl(data_dir + "/catalog.jsonl");
  const auto train_log = load_events_jsonl(data_dir + "/train.jsonl");

  AuditLedger ledger;
  const PrivacyMode mode{cfg.privacy_mode, cfg.adversary_intercept_rate};

  // Fresh model; the vocabulary comes from the catalog either way.
  std::vector<std::string> copies;
  for (const auto& ad : catalog) copies.push_back(ad.copy);
  FeatureConfig features;
  features.ad_only = cfg.head_ad_only;
  {
    std::set<std::string> cats;
    for (const auto& ad : catalog) cats.insert(ad.category);
    features.categories.assign(cats.begin(), cats.end());
  }
  Rng init_rng(Rng::derive(cfg.seed, 'i', 0));
  Model model = Model::init(cfg.encoder, build_vocab(copies, cfg.tokenizer_min_freq),
                            features, init_rng);

  const auto clients = profiles_from_events(train_log);
  RoundConfig rc;
  rc.train = cfg.training;
  rc.tags_top_k = cfg.tags_top_k;
  rc.tag_blend = cfg.tag_blend;
  rc.weighted_aggregation = cfg.weighted_aggregation;

  if (mode.topology == Topology::Cloud) {
    const auto result = run_round(clients, mode, model, catalog, ledger, 0, rc, cfg.seed);
    for (size_t e = 0; e < result.epoch_loss.size(); ++e) {
      std::printf("epoch %zu loss %.6f\n", e + 1, result.epoch_loss[e]);
    }
  } else {
    for (int round = 0; round < cfg.privacy_rounds; ++round) {
      const auto result = run_round(clients, mode, model, catalog, ledger, round, rc,
                                    Rng::derive(cfg.seed, 'r', static_cast<uint64_t>(round)));
      if (!result.epoch_loss.empty()) {
        std::printf("round %d mean client loss %.6f (%d clients, %d aborted)\n", round + 1,
                    result.epoch_loss.back(), result.clients_completed,
                    result.clients_aborted);
      }
    }
  }

  save_model(model, flags.out_dir);
  ledger.save_jsonl(flags.out_dir + "/ledger.jsonl");
  write_run_meta(cfg, flags.out_dir, "train");

  const auto metrics = leakage_metrics(ledger, mode, cfg.mc_replays, cfg.seed);
  std::cout << "trained in " << to_string(mode.topology) << " mode; ledger entries: "
            << ledger.size() << ", upload flag: " << metrics.upload_flag << "\n";
  return kExitOk;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& data_dir,
                 const std::string& model_dir) {
  RunConfig cfg = resolve_config(flags);
  std::filesystem::create_directories(flags.out_dir);
  const auto catalog = load_catalog_jsonl(data_dir + "/catalog.jsonl");
  const auto train_log = load_events_jsonl(data_dir + "/train.jsonl");
  const auto test_log = load_events_jsonl(data_dir + "/test.jsonl");
  const auto truth = PlantedTruth::load_json(data_dir + "/planted.json");
  auto profiles = load_profiles_jsonl(data_dir + "/profiles.jsonl");
  attach_events(profiles, train_log);

  const Model model = load_model(model_dir);
  const auto embedded = EmbeddedCatalog::build(catalog, model);
  const auto content_embedded =
      token_mean_catalog(catalog, model.vocab, 32, Rng::derive(cfg.seed, 'c', 0));
  const AlsModel als = fit_als(train_log, catalog, 8, 0.1, 15, cfg.seed);

  const auto model_sys = make_model_system(model, embedded, cfg.tags_top_k, cfg.tag_blend);
  const auto content_sys = make_content_system(content_embedded);
  const auto cf_sys = make_cf_system(als);
  const auto random_sys = make_random_system(catalog);
  const std::vector<const RecSystem*> systems = {model_sys.get(), content_sys.get(),
                                                 cf_sys.get(), random_sys.get()};

  EvalReport report = evaluate(systems, profiles, truth, test_log, cfg.eval_k, cfg.seed);
  report.spec_hash = cfg.config_hash();
  atomic_write_file(flags.out_dir + "/report.csv", report_to_csv(report, config_echo(cfg)));
  atomic_write_file(flags.out_dir + "/report.md",
                    report_to_markdown(report, config_echo(cfg)));

  // per-user rankings of the trained model
  std::string rankings = "# config: " + config_echo(cfg) + "\n";
  rankings += "user_id,rank,ad_id,score\n";
  for (const auto& profile : profiles) {
    const auto recs = recommend(profile, embedded, model, cfg.eval_k, cfg.tags_top_k,
                                cfg.tag_blend);
    for (size_t r = 0; r < recs.size(); ++r) {
      char line[160];
      std::snprintf(line, sizeof(line), "%s,%zu,%s,%.6f\n", profile.user_id.c_str(), r + 1,
                    recs[r].ad_id.c_str(), recs[r].score);
      rankings += line;
    }
  }
  atomic_write_file(flags.out_dir + "/rankings.csv", rankings);
  write_run_meta(cfg, flags.out_dir, "evaluate");

  for (const auto& s : report.systems) {
    std::printf("%-8s CTR %6.2f%%  CR %6.2f%%", s.name.c_str(), 100.0 * s.ctr, 100.0 * s.cr);
    if (s.has_auc) std::printf("  AUC %.4f", s.auc);
    std::printf("\n");
  }
  return kExitOk;
}

int cmd_audit(const CommonFlags& flags, const std::vector<std::string>& ledger_paths) {
  RunConfig cfg = resolve_config(flags);
  std::filesystem::create_directories(flags.out_dir);

  std::string md = "# Privacy audit\n\n";
  md += "| Run | Mode | Privacy leakage incidents | User data uploaded | Leakage probability |\n";
  md += "|-----|------|---------------------------|--------------------|---------------------|\n";
  std::string console;
  for (const auto& path : ledger_paths) {
    const AuditLedger ledger = AuditLedger::load_jsonl(path);
    // the run's mode is observable from the ledger itself
    const bool uploaded = ledger.count(MessageKind::RawEvents, Verdict::Allowed) > 0;
    const PrivacyMode mode{uploaded ? Topology::Cloud : Topology::Local,
                           cfg.adversary_intercept_rate};
    const auto metrics = leakage_metrics(ledger, mode, cfg.mc_replays, cfg.seed);
    char row[256];
    std::snprintf(row, sizeof(row), "| %s | %s | %d | %d | %.2f%% |\n", path.c_str(),
                  to_string(mode.topology).c_str(), metrics.leakage_events,
                  metrics.upload_flag, 100.0 * metrics.leakage_probability);
    md += row;
    std::snprintf(row, sizeof(row),
                  "%s: upload flag %d, leakage events %d, leakage probability %.2f%%\n",
                  path.c_str(), metrics.upload_flag, metrics.leakage_events,
                  100.0 * metrics.leakage_probability);
    console += row;
  }
  md += "\nAdversary intercept rate: " +
        std::to_string(cfg.adversary_intercept_rate) + ", Monte-Carlo replays: " +
        std::to_string(cfg.mc_replays) + "\n";
  md += "\nConfig: `" + config_echo(cfg) + "`\n";
  atomic_write_file(flags.out_dir + "/audit.md", md);
  write_run_meta(cfg, flags.out_dir, "audit");
  std::cout << console;
  return kExitOk;
}

int cmd_replay(const CommonFlags& flags, const std::string& log_path) {
  RunConfig cfg = resolve_config(flags);
  const auto log = load_events_jsonl(log_path);
  const ReplayMetrics m = replay_metrics(log);
  std::printf("CTR %.2f%%\n", 100.0 * m.ctr);
  std::printf("CR %.2f%%\n", 100.0 * m.cr);
  std::printf("impressions %d, clicks %d, conversions %d\n", m.impressions, m.clicks,
              m.conversions);
  if (!flags.out_dir.empty() && flags.out_dir != "-") {
    std::filesystem::create_directories(flags.out_dir);
    char body[512];
    std::snprintf(body, sizeof(body),
                  "# Log replay\n\n| Metric | Value |\n|--------|-------|\n"
                  "| Impressions | %d |\n| Clicks | %d |\n| Conversions | %d |\n"
                  "| CTR | %.2f%% |\n| CR | %.2f%% |\n",
                  m.impressions, m.clicks, m.conversions, 100.0 * m.ctr, 100.0 * m.cr);
    std::string md(body);
    md += "\nConfig: `" + config_echo(cfg) + "`\n";
    atomic_write_file(flags.out_dir + "/replay.md", md);
    write_run_meta(cfg, flags.out_dir, "replay");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adseal: private on-device ad recommendation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  CommonFlags flags;
  app.add_option("--config", flags.config_path, "JSON run configuration file");
  app.add_option("--seed", flags.seed, "override the config seed");
  app.add_option("--mode", flags.mode, "privacy mode: local|cloud");
  app.add_option("--out", flags.out_dir, "output directory");
  app.add_option("--k", flags.k, "slate size for evaluation");

  auto* gen = app.add_subcommand("gen", "generate a synthetic planted-structure dataset");

  std::string data_dir = "out";
  auto* train = app.add_subcommand("train", "train the click model in local or cloud mode");
  train->add_option("--data", data_dir, "directory produced by gen");

  std::string model_dir = "model";
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "compare model, content, CF and random recommenders");
  evaluate_cmd->add_option("--data", data_dir, "directory produced by gen");
  evaluate_cmd->add_option("--model", model_dir, "directory produced by train");

  std::vector<std::string> ledger_paths;
  auto* audit = app.add_subcommand("audit", "summarize boundary ledgers");
  audit->add_option("--ledger", ledger_paths, "ledger JSONL path (repeatable)")->required();

  std::string log_path;
  auto* replay = app.add_subcommand("replay", "compute CTR/CR from a logged JSONL fixture");
  replay->add_option("--log", log_path, "impression log JSONL path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;  // --help stays success
  }

  try {
    if (gen->parsed()) return cmd_gen(flags);
    if (train->parsed()) return cmd_train(flags, data_dir);
    if (evaluate_cmd->parsed()) return cmd_evaluate(flags, data_dir, model_dir);
    if (audit->parsed()) return cmd_audit(flags, ledger_paths);
    if (replay->parsed()) return cmd_replay(flags, log_path);
  } catch (const PrivacyViolation& e) {
    std::cerr << "privacy violation: " << e.what() << "\n";
    return kExitPrivacy;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
