#pragma once

#include <map>
#include <string>
#include <vector>

#include "adseal/encoder.hpp"
#include "adseal/events.hpp"
#include "adseal/matrix.hpp"
#include "adseal/tokenizer.hpp"

namespace adseal {

// Sigmoid click head: p = sigmoid(w . [h_ad | user features] + b).
struct CtrHead {
  Matrix w;  // (d_model + user_dim) x 1
  Matrix b;  // 1 x 1
};

// Fixed-width user/context feature layout:
//   [device one-hot | time-of-day one-hot | tag weight per category |
//    tag weight of the candidate ad's category]
// With ad_only=true the user block is empty and the head scores h_ad alone.
struct FeatureConfig {
  std::vector<std::string> categories;  // sorted, frozen at training time
  bool ad_only = false;

  int user_dim() const {
    return ad_only ? 0
                   : kDeviceCount + kTimeOfDayCount + static_cast<int>(categories.size()) + 1;
  }
};

// Trained state: tokenizer vocabulary, embedding table, encoder stack, click
// head, and the feature layout the head was trained against.
struct Model {
  Vocabulary vocab;
  EmbeddingTable table;
  EncoderStack stack;
  CtrHead head;
  FeatureConfig features;

  static Model init(const EncoderConfig& cfg, Vocabulary vocab, FeatureConfig features,
                    Rng& rng);

  // Checkpoint order; also the order deltas are serialized in.
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
};

// Ranked recommendation output.
struct ScoredAd {
  std::string ad_id;
  double score = 0.0;
};

// Catalog plus its embeddings under a frozen model, indexed by ad id.
struct EmbeddedCatalog {
  std::vector<AdCreative> ads;
  std::vector<AdEmbedding> embeddings;  // parallel to ads
  std::map<std::string, size_t> by_ad_id;

  static EmbeddedCatalog build(const std::vector<AdCreative>& catalog, const Model& model);
  const AdEmbedding* find(const std::string& ad_id) const;
  const AdCreative* creative(const std::string& ad_id) const;
};

Matrix user_features(const FeatureConfig& fc, DeviceType device, TimeOfDay tod,
                     const std::map<std::string, double>& tag_weights,
                     const std::string& ad_category);

// p in (0,1), clamped away from exact 0/1 so downstream logs stay finite.
double predict_ctr(const AdEmbedding& ad, const Matrix& features, const CtrHead& head);

// Blended per-category affinity: 0.5 * mean predicted CTR over the user's
// historical ads in the category (tag features zeroed to break the
// tags->prediction cycle) + 0.5 * empirical click rate in the category.
std::map<std::string, double> category_weights(const UserProfile& profile, const Model& model,
                                               const EmbeddedCatalog& catalog,
                                               double blend = 0.5);

// Top-k of category_weights, descending weight, category name tie-break.
UserTagSet build_user_tags(const UserProfile& profile, const Model& model,
                           const EmbeddedCatalog& catalog, int top_k = 3, double blend = 0.5);

// Tag-filtered catalog ranking by predicted CTR. Falls back to the whole
// catalog when the user is cold or no category overlaps the tag set.
std::vector<ScoredAd> recommend(const UserProfile& profile, const EmbeddedCatalog& catalog,
                                const Model& model, int k, int tags_top_k = 3,
                                double blend = 0.5);

// Binary checkpoint: magic "ADSEAL01", six i32 LE config words (d_model, d_k,
// layers, max_len, vocab_size, flags), then every parameter matrix in
// parameters() order as (rows i32, cols i32, row-major f64 LE). Bit-exact
// round trip. vocab.txt / categories.txt live next to it.
void save_model(const Model& model, const std::string& dir);
Model load_model(const std::string& dir);

std::vector<unsigned char> serialize_matrices(const std::vector<const Matrix*>& ms);
std::vector<Matrix> deserialize_matrices(const std::vector<unsigned char>& bytes);

}  // namespace adseal
