#pragma once

#include <string>
#include <utility>
#include <vector>

#include "adseal/matrix.hpp"
#include "adseal/rng.hpp"
#include "adseal/tape.hpp"
#include "adseal/tokenizer.hpp"

namespace adseal {

struct EncoderConfig {
  int d_model = 32;
  int d_k = 32;            // single head, d_k = d_model by default
  int layers = 2;
  int max_len = 32;
  int ffn_mult = 4;
  bool scaled_attention = true;   // divide logits by sqrt(d_k)
  bool minimal_blocks = false;    // ablation: bare attention, no residual/LN/FFN
};

struct AttentionParams {
  Matrix w_q, w_k, w_v;  // d_model x d_k each
};

struct EncoderLayer {
  Matrix ln1_scale, ln1_shift;  // 1 x d_model
  AttentionParams attention;
  Matrix ln2_scale, ln2_shift;
  Matrix ffn_w1;  // d_model x (ffn_mult * d_model)
  Matrix ffn_w2;  // (ffn_mult * d_model) x d_model
};

struct EncoderStack {
  EncoderConfig config;
  std::vector<EncoderLayer> layers;

  // N(0, 0.02^2) weights, unit layer-norm scales, zero shifts.
  static EncoderStack init(const EncoderConfig& cfg, Rng& rng);
};

// The L2-normalized [CLS] representation of one ad's copy.
struct AdEmbedding {
  std::string ad_id;
  Matrix vector;  // 1 x d_model, unit norm
};

// Single-head self-attention. Q=xWq, K=xWk, V=xWv, alpha=softmax(QK^T
// [/sqrt(d_k)]), output alpha*V. When alpha_out is non-null the attention
// weights are copied there.
Matrix attention(const Matrix& x, const AttentionParams& p, bool scaled,
                 Matrix* alpha_out = nullptr);

// One pre-norm block: x + attn(LN(x)), then x + FFN(LN(x)).
Matrix encoder_layer_forward(const Matrix& x, const EncoderLayer& layer,
                             const EncoderConfig& cfg);

// Runs the full stack and returns the normalized row-0 representation.
Matrix encode(const Matrix& seq_embeddings, const EncoderStack& stack);

struct CatalogError {
  size_t index;
  std::string message;
};

// Inference over a whole catalog. Per-ad failures are reported with the ad
// index; the remaining ads are still embedded.
std::pair<std::vector<AdEmbedding>, std::vector<CatalogError>> embed_catalog(
    const std::vector<std::string>& ad_ids, const std::vector<std::string>& copies,
    const Vocabulary& vocab, const EmbeddingTable& table, const EncoderStack& stack);

// Tape-side parameter handles for one layer / the whole stack, used by the
// trainer to build differentiable forward graphs.
struct EncoderLayerNodes {
  Tape::NodeId ln1_scale, ln1_shift, w_q, w_k, w_v, ln2_scale, ln2_shift, ffn_w1, ffn_w2;
};

struct EncoderStackNodes {
  Tape::NodeId token_matrix, position_matrix;
  std::vector<EncoderLayerNodes> layers;
};

EncoderStackNodes register_encoder_params(Tape& tape, const EmbeddingTable& table,
                                          const EncoderStack& stack);

Tape::NodeId attention_graph(Tape& tape, Tape::NodeId x, const EncoderLayerNodes& p,
                             const EncoderConfig& cfg);

// seq -> embedded rows -> L layers -> normalized row 0 (1 x d_model)
Tape::NodeId encode_graph(Tape& tape, const EncoderStackNodes& nodes,
                          const std::vector<int>& token_ids, const EncoderConfig& cfg);

}  // namespace adseal
