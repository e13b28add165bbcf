#include "adseal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "adseal/errors.hpp"

namespace adseal {

namespace {

struct AdamState {
  std::vector<Matrix> m, v;
  int t = 0;

  explicit AdamState(const std::vector<Matrix*>& params) {
    for (const Matrix* p : params) {
      m.emplace_back(p->rows, p->cols);
      v.emplace_back(p->rows, p->cols);
    }
  }

  void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
            const TrainConfig& cfg) {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    for (size_t i = 0; i < params.size(); ++i) {
      Matrix& p = *params[i];
      const Matrix& g = *grads[i];
      for (size_t j = 0; j < p.size(); ++j) {
        m[i].data[j] = cfg.adam_beta1 * m[i].data[j] + (1.0 - cfg.adam_beta1) * g.data[j];
        v[i].data[j] =
            cfg.adam_beta2 * v[i].data[j] + (1.0 - cfg.adam_beta2) * g.data[j] * g.data[j];
        const double mh = m[i].data[j] / bc1;
        const double vh = v[i].data[j] / bc2;
        p.data[j] -= cfg.lr * mh / (std::sqrt(vh) + cfg.adam_eps);
      }
    }
  }
};

struct ModelNodes {
  EncoderStackNodes enc;
  Tape::NodeId head_w, head_b;
};

ModelNodes register_model_params(Tape& tape, const Model& model) {
  ModelNodes n;
  n.enc = register_encoder_params(tape, model.table, model.stack);
  n.head_w = tape.param(model.head.w);
  n.head_b = tape.param(model.head.b);
  return n;
}

std::vector<Tape::NodeId> flatten_param_nodes(const ModelNodes& n) {
  std::vector<Tape::NodeId> ids;
  ids.push_back(n.enc.token_matrix);
  ids.push_back(n.enc.position_matrix);
  for (const auto& l : n.enc.layers) {
    ids.push_back(l.ln1_scale);
    ids.push_back(l.ln1_shift);
    ids.push_back(l.w_q);
    ids.push_back(l.w_k);
    ids.push_back(l.w_v);
    ids.push_back(l.ln2_scale);
    ids.push_back(l.ln2_shift);
    ids.push_back(l.ffn_w1);
    ids.push_back(l.ffn_w2);
  }
  ids.push_back(n.head_w);
  ids.push_back(n.head_b);
  return ids;
}

Tape::NodeId example_loss(Tape& tape, const ModelNodes& nodes, const TrainExample& ex,
                          const EncoderConfig& cfg) {
  auto h = encode_graph(tape, nodes.enc, ex.token_ids, cfg);
  if (ex.features.cols > 0) {
    h = tape.concat_cols(h, tape.leaf(ex.features));
  }
  auto logit = tape.add(tape.matmul(h, nodes.head_w), nodes.head_b);
  return tape.bce_with_logits(logit, ex.label);
}

}  // namespace

std::vector<TrainExample> build_examples(const std::vector<ImpressionEvent>& log,
                                         const std::vector<AdCreative>& catalog,
                                         const Model& model) {
  std::map<std::string, std::vector<int>> tokens_by_ad;
  for (const auto& ad : catalog) {
    tokens_by_ad[ad.ad_id] =
        tokenize(ad.copy, model.vocab, model.stack.config.max_len).ids;
  }

  // empirical click rate per (user, category) over this log
  struct Counts {
    int impressions = 0;
    int clicks = 0;
  };
  std::map<std::string, std::map<std::string, Counts>> per_user;
  for (const auto& e : log) {
    auto& c = per_user[e.user_id][e.ad_category];
    ++c.impressions;
    if (e.clicked) ++c.clicks;
  }
  std::map<std::string, std::map<std::string, double>> rates;
  for (const auto& [uid, cats] : per_user) {
    for (const auto& [cat, c] : cats) {
      rates[uid][cat] = static_cast<double>(c.clicks) / c.impressions;
    }
  }

  std::vector<TrainExample> examples;
  examples.reserve(log.size());
  for (const auto& e : log) {
    auto it = tokens_by_ad.find(e.ad_id);
    if (it == tokens_by_ad.end()) {
      throw DataError("train: event references unknown ad " + e.ad_id);
    }
    TrainExample ex;
    ex.token_ids = it->second;
    ex.features =
        user_features(model.features, e.device, e.time_of_day, rates[e.user_id], e.ad_category);
    ex.label = e.clicked ? 1.0 : 0.0;
    examples.push_back(std::move(ex));
  }
  return examples;
}

TrainStats train_loop(Model& model, const std::vector<ImpressionEvent>& log,
                      const std::vector<AdCreative>& catalog, const TrainConfig& cfg,
                      Rng& rng) {
  if (log.empty()) throw DataError("train: empty event log");
  TrainStats stats;

  const auto examples = build_examples(log, catalog, model);
  {
    bool all_pos = true, all_neg = true;
    for (const auto& ex : examples) (ex.label > 0.5 ? all_neg : all_pos) = false;
    if (all_pos || all_neg) {
      stats.warnings.push_back(std::string("training labels are all ") +
                               (all_pos ? "positive" : "negative") +
                               "; model will fit a constant");
    }
  }

  auto params = model.parameters();
  AdamState adam(params);

  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      Tape tape;
      const ModelNodes nodes = register_model_params(tape, model);
      Tape::NodeId total = -1;
      for (size_t i = start; i < end; ++i) {
        const auto loss = example_loss(tape, nodes, examples[order[i]], model.stack.config);
        total = (total < 0) ? loss : tape.add(total, loss);
      }
      const auto batch_loss = tape.scale(total, 1.0 / static_cast<double>(end - start));
      const double loss_value = tape.value(batch_loss).at(0, 0);
      if (!std::isfinite(loss_value)) {
        throw Error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                    std::to_string(start / cfg.batch_size));
      }
      epoch_loss_sum += loss_value * static_cast<double>(end - start);

      tape.backward(batch_loss);
      const auto node_ids = flatten_param_nodes(nodes);
      std::vector<const Matrix*> grads;
      grads.reserve(node_ids.size());
      for (auto id : node_ids) grads.push_back(&tape.grad(id));
      adam.step(params, grads, cfg);
    }
    stats.epoch_loss.push_back(epoch_loss_sum / static_cast<double>(examples.size()));
  }
  return stats;
}

Model train_model(const std::vector<ImpressionEvent>& log,
                  const std::vector<AdCreative>& catalog, const EncoderConfig& enc_cfg,
                  const TrainConfig& cfg, bool ad_only_features, int min_freq, uint64_t seed,
                  TrainStats* stats_out) {
  if (catalog.empty()) throw DataError("train: empty catalog");
  std::vector<std::string> copies;
  for (const auto& ad : catalog) copies.push_back(ad.copy);
  Vocabulary vocab = build_vocab(copies, min_freq);

  FeatureConfig features;
  features.ad_only = ad_only_features;
  std::set<std::string> cats;
  for (const auto& ad : catalog) cats.insert(ad.category);
  features.categories.assign(cats.begin(), cats.end());

  Rng init_rng(Rng::derive(seed, 'i', 0));
  Model model = Model::init(enc_cfg, std::move(vocab), std::move(features), init_rng);

  Rng train_rng(Rng::derive(seed, 't', 0));
  TrainStats stats = train_loop(model, log, catalog, cfg, train_rng);
  if (stats_out) *stats_out = std::move(stats);
  return model;
}

}  // namespace adseal
