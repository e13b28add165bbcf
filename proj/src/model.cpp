#include "adseal/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "adseal/errors.hpp"
#include "adseal/io_util.hpp"

namespace adseal {

namespace {
constexpr char kMagic[9] = "ADSEAL01";
constexpr double kProbClamp = 1e-12;

constexpr uint32_t kFlagScaledAttention = 1u << 0;
constexpr uint32_t kFlagMinimalBlocks = 1u << 1;
constexpr uint32_t kFlagAdOnly = 1u << 2;
}  // namespace

Model Model::init(const EncoderConfig& cfg, Vocabulary vocab, FeatureConfig features,
                  Rng& rng) {
  Model m;
  m.vocab = std::move(vocab);
  m.features = std::move(features);
  m.table.token_matrix = Matrix::randn(m.vocab.size(), cfg.d_model, 0.02, rng);
  m.table.position_matrix = Matrix::randn(cfg.max_len, cfg.d_model, 0.02, rng);
  m.stack = EncoderStack::init(cfg, rng);
  m.head.w = Matrix::randn(cfg.d_model + m.features.user_dim(), 1, 0.02, rng);
  m.head.b = Matrix::zeros(1, 1);
  return m;
}

std::vector<Matrix*> Model::parameters() {
  std::vector<Matrix*> ps;
  ps.push_back(&table.token_matrix);
  ps.push_back(&table.position_matrix);
  for (auto& layer : stack.layers) {
    ps.push_back(&layer.ln1_scale);
    ps.push_back(&layer.ln1_shift);
    ps.push_back(&layer.attention.w_q);
    ps.push_back(&layer.attention.w_k);
    ps.push_back(&layer.attention.w_v);
    ps.push_back(&layer.ln2_scale);
    ps.push_back(&layer.ln2_shift);
    ps.push_back(&layer.ffn_w1);
    ps.push_back(&layer.ffn_w2);
  }
  ps.push_back(&head.w);
  ps.push_back(&head.b);
  return ps;
}

std::vector<const Matrix*> Model::parameters() const {
  auto ps = const_cast<Model*>(this)->parameters();
  return std::vector<const Matrix*>(ps.begin(), ps.end());
}

EmbeddedCatalog EmbeddedCatalog::build(const std::vector<AdCreative>& catalog,
                                       const Model& model) {
  EmbeddedCatalog ec;
  ec.ads = catalog;
  std::vector<std::string> ids, copies;
  for (const auto& ad : catalog) {
    ids.push_back(ad.ad_id);
    copies.push_back(ad.copy);
  }
  auto [embeddings, errors] =
      embed_catalog(ids, copies, model.vocab, model.table, model.stack);
  if (!errors.empty()) {
    throw DataError("catalog embedding failed for ad index " +
                    std::to_string(errors.front().index) + ": " + errors.front().message);
  }
  ec.embeddings = std::move(embeddings);
  for (size_t i = 0; i < ec.ads.size(); ++i) ec.by_ad_id[ec.ads[i].ad_id] = i;
  return ec;
}

const AdEmbedding* EmbeddedCatalog::find(const std::string& ad_id) const {
  auto it = by_ad_id.find(ad_id);
  return it == by_ad_id.end() ? nullptr : &embeddings[it->second];
}

const AdCreative* EmbeddedCatalog::creative(const std::string& ad_id) const {
  auto it = by_ad_id.find(ad_id);
  return it == by_ad_id.end() ? nullptr : &ads[it->second];
}

Matrix user_features(const FeatureConfig& fc, DeviceType device, TimeOfDay tod,
                     const std::map<std::string, double>& tag_weights,
                     const std::string& ad_category) {
  Matrix f(1, fc.user_dim());
  if (fc.ad_only) return f;
  f.at(0, static_cast<int>(device)) = 1.0;
  f.at(0, kDeviceCount + static_cast<int>(tod)) = 1.0;
  const int base = kDeviceCount + kTimeOfDayCount;
  double match = 0.0;
  for (size_t c = 0; c < fc.categories.size(); ++c) {
    auto it = tag_weights.find(fc.categories[c]);
    const double w = it == tag_weights.end() ? 0.0 : it->second;
    f.at(0, base + static_cast<int>(c)) = w;
    if (fc.categories[c] == ad_category) match = w;
  }
  f.at(0, base + static_cast<int>(fc.categories.size())) = match;
  return f;
}

double predict_ctr(const AdEmbedding& ad, const Matrix& features, const CtrHead& head) {
  const int d_ad = ad.vector.cols;
  if (features.rows != 1 || d_ad + features.cols != head.w.rows) {
    throw DimensionError("predict_ctr: feature width " + features.shape_str() +
                         " incompatible with head " + head.w.shape_str());
  }
  double z = head.b.at(0, 0);
  for (int c = 0; c < d_ad; ++c) z += ad.vector.at(0, c) * head.w.at(c, 0);
  for (int c = 0; c < features.cols; ++c) z += features.at(0, c) * head.w.at(d_ad + c, 0);
  const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

std::map<std::string, double> category_weights(const UserProfile& profile, const Model& model,
                                               const EmbeddedCatalog& catalog, double blend) {
  if (profile.events.empty()) {
    throw DataError("category_weights: user " + profile.user_id + " has no history");
  }
  struct Acc {
    int impressions = 0;
    int clicks = 0;
    double propensity_sum = 0.0;
    int propensity_n = 0;
  };
  std::map<std::string, Acc> acc;
  const std::map<std::string, double> no_tags;  // zeroed tag block breaks the cycle
  for (const auto& e : profile.events) {
    auto& a = acc[e.ad_category];
    ++a.impressions;
    if (e.clicked) ++a.clicks;
    if (const AdEmbedding* emb = catalog.find(e.ad_id)) {
      const Matrix f =
          user_features(model.features, e.device, e.time_of_day, no_tags, e.ad_category);
      a.propensity_sum += predict_ctr(*emb, f, model.head);
      ++a.propensity_n;
    }
  }
  std::map<std::string, double> weights;
  for (const auto& [category, a] : acc) {
    const double empirical = static_cast<double>(a.clicks) / a.impressions;
    // Categories whose ads are absent from the catalog fall back to the
    // empirical rate alone.
    const double w = a.propensity_n > 0
                         ? blend * (a.propensity_sum / a.propensity_n) + (1.0 - blend) * empirical
                         : empirical;
    weights[category] = std::min(std::max(w, 0.0), 1.0);
  }
  return weights;
}

UserTagSet build_user_tags(const UserProfile& profile, const Model& model,
                           const EmbeddedCatalog& catalog, int top_k, double blend) {
  const auto weights = category_weights(profile, model, catalog, blend);
  std::vector<UserTag> tags;
  for (const auto& [category, w] : weights) tags.push_back(UserTag{category, w});
  std::sort(tags.begin(), tags.end(), [](const UserTag& a, const UserTag& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.category < b.category;
  });
  if (static_cast<int>(tags.size()) > top_k) tags.resize(top_k);
  return UserTagSet{std::move(tags)};
}

std::vector<ScoredAd> recommend(const UserProfile& profile, const EmbeddedCatalog& catalog,
                                const Model& model, int k, int tags_top_k, double blend) {
  if (catalog.ads.empty()) throw DataError("recommend: empty catalog");

  std::map<std::string, double> weights;
  UserTagSet tags;
  if (!profile.events.empty()) {
    weights = category_weights(profile, model, catalog, blend);
    tags = build_user_tags(profile, model, catalog, tags_top_k, blend);
  }

  std::vector<size_t> candidates;
  for (size_t i = 0; i < catalog.ads.size(); ++i) {
    if (tags.has(catalog.ads[i].category)) candidates.push_back(i);
  }
  if (candidates.empty()) {  // cold start or no overlap: whole catalog
    candidates.resize(catalog.ads.size());
    for (size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
  }

  std::vector<ScoredAd> scored;
  scored.reserve(candidates.size());
  for (size_t i : candidates) {
    const auto& ad = catalog.ads[i];
    const Matrix f =
        user_features(model.features, profile.device, profile.time_of_day, weights, ad.category);
    scored.push_back(ScoredAd{ad.ad_id, predict_ctr(catalog.embeddings[i], f, model.head)});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredAd& a, const ScoredAd& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ad_id < b.ad_id;
  });
  if (static_cast<int>(scored.size()) > k) scored.resize(k);
  return scored;
}

std::vector<unsigned char> serialize_matrices(const std::vector<const Matrix*>& ms) {
  std::vector<unsigned char> out;
  for (const Matrix* m : ms) {
    put_i32_le(out, m->rows);
    put_i32_le(out, m->cols);
    for (double v : m->data) put_f64_le(out, v);
  }
  return out;
}

std::vector<Matrix> deserialize_matrices(const std::vector<unsigned char>& bytes) {
  std::vector<Matrix> ms;
  size_t pos = 0;
  while (pos < bytes.size()) {
    const int rows = get_i32_le(bytes, pos);
    const int cols = get_i32_le(bytes, pos);
    if (rows < 0 || cols < 0) throw DataError("matrix blob: negative dimensions");
    Matrix m(rows, cols);
    for (auto& v : m.data) v = get_f64_le(bytes, pos);
    ms.push_back(std::move(m));
  }
  return ms;
}

void save_model(const Model& model, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto& cfg = model.stack.config;

  std::vector<unsigned char> bin(kMagic, kMagic + 8);
  uint32_t flags = 0;
  if (cfg.scaled_attention) flags |= kFlagScaledAttention;
  if (cfg.minimal_blocks) flags |= kFlagMinimalBlocks;
  if (model.features.ad_only) flags |= kFlagAdOnly;
  put_i32_le(bin, cfg.d_model);
  put_i32_le(bin, cfg.d_k);
  put_i32_le(bin, cfg.layers);
  put_i32_le(bin, cfg.max_len);
  put_i32_le(bin, model.vocab.size());
  put_i32_le(bin, static_cast<int32_t>(flags));
  const auto blob = serialize_matrices(model.parameters());
  bin.insert(bin.end(), blob.begin(), blob.end());
  write_file_bytes(dir + "/model.bin", bin);

  model.vocab.save(dir + "/vocab.txt");

  std::string cats;
  for (const auto& c : model.features.categories) cats += c + "\n";
  atomic_write_file(dir + "/categories.txt", cats);
}

Model load_model(const std::string& dir) {
  const auto bin = read_file_bytes(dir + "/model.bin");
  if (bin.size() < 8 || !std::equal(kMagic, kMagic + 8, bin.begin())) {
    throw DataError("model.bin: bad magic (expected ADSEAL01)");
  }
  size_t pos = 8;
  EncoderConfig cfg;
  cfg.d_model = get_i32_le(bin, pos);
  cfg.d_k = get_i32_le(bin, pos);
  cfg.layers = get_i32_le(bin, pos);
  cfg.max_len = get_i32_le(bin, pos);
  const int vocab_size = get_i32_le(bin, pos);
  const uint32_t flags = static_cast<uint32_t>(get_i32_le(bin, pos));
  cfg.scaled_attention = (flags & kFlagScaledAttention) != 0;
  cfg.minimal_blocks = (flags & kFlagMinimalBlocks) != 0;

  Model m;
  m.vocab = Vocabulary::load(dir + "/vocab.txt");
  if (m.vocab.size() != vocab_size) {
    throw DataError("model.bin/vocab.txt disagree on vocabulary size");
  }
  m.features.ad_only = (flags & kFlagAdOnly) != 0;
  {
    std::ifstream in(dir + "/categories.txt", std::ios::binary);
    if (!in) throw DataError("cannot read " + dir + "/categories.txt");
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) m.features.categories.push_back(line);
    }
  }

  std::vector<unsigned char> rest(bin.begin() + static_cast<long>(pos), bin.end());
  auto ms = deserialize_matrices(rest);
  const size_t expected = 2 + 9 * static_cast<size_t>(cfg.layers) + 2;
  if (ms.size() != expected) {
    throw DataError("model.bin: expected " + std::to_string(expected) + " matrices, found " +
                    std::to_string(ms.size()));
  }
  size_t i = 0;
  m.table.token_matrix = std::move(ms[i++]);
  m.table.position_matrix = std::move(ms[i++]);
  m.stack.config = cfg;
  for (int l = 0; l < cfg.layers; ++l) {
    EncoderLayer layer;
    layer.ln1_scale = std::move(ms[i++]);
    layer.ln1_shift = std::move(ms[i++]);
    layer.attention.w_q = std::move(ms[i++]);
    layer.attention.w_k = std::move(ms[i++]);
    layer.attention.w_v = std::move(ms[i++]);
    layer.ln2_scale = std::move(ms[i++]);
    layer.ln2_shift = std::move(ms[i++]);
    layer.ffn_w1 = std::move(ms[i++]);
    layer.ffn_w2 = std::move(ms[i++]);
    m.stack.layers.push_back(std::move(layer));
  }
  if (!m.stack.layers.empty()) {
    m.stack.config.ffn_mult = m.stack.layers[0].ffn_w1.cols / std::max(1, cfg.d_model);
  }
  m.head.w = std::move(ms[i++]);
  m.head.b = std::move(ms[i++]);
  if (m.head.w.rows != cfg.d_model + m.features.user_dim()) {
    throw DataError("model.bin: head width disagrees with feature layout");
  }
  return m;
}

}  // namespace adseal
