#include "adseal/encoder.hpp"

#include <cmath>

#include "adseal/errors.hpp"

namespace adseal {

EncoderStack EncoderStack::init(const EncoderConfig& cfg, Rng& rng) {
  EncoderStack stack;
  stack.config = cfg;
  const double std = 0.02;
  for (int l = 0; l < cfg.layers; ++l) {
    EncoderLayer layer;
    layer.ln1_scale = Matrix::full(1, cfg.d_model, 1.0);
    layer.ln1_shift = Matrix::zeros(1, cfg.d_model);
    layer.attention.w_q = Matrix::randn(cfg.d_model, cfg.d_k, std, rng);
    layer.attention.w_k = Matrix::randn(cfg.d_model, cfg.d_k, std, rng);
    layer.attention.w_v = Matrix::randn(cfg.d_model, cfg.d_k, std, rng);
    layer.ln2_scale = Matrix::full(1, cfg.d_model, 1.0);
    layer.ln2_shift = Matrix::zeros(1, cfg.d_model);
    layer.ffn_w1 = Matrix::randn(cfg.d_model, cfg.ffn_mult * cfg.d_model, std, rng);
    layer.ffn_w2 = Matrix::randn(cfg.ffn_mult * cfg.d_model, cfg.d_model, std, rng);
    stack.layers.push_back(std::move(layer));
  }
  return stack;
}

Matrix attention(const Matrix& x, const AttentionParams& p, bool scaled, Matrix* alpha_out) {
  if (x.rows < 1) throw DimensionError("attention: empty input");
  const Matrix q = matmul(x, p.w_q);
  const Matrix k = matmul(x, p.w_k);
  const Matrix v = matmul(x, p.w_v);
  Matrix logits = matmul(q, transpose(k));
  if (scaled) logits = scale(logits, 1.0 / std::sqrt(static_cast<double>(p.w_k.cols)));
  const Matrix alpha = softmax_rows(logits);
  if (alpha_out) *alpha_out = alpha;
  return matmul(alpha, v);
}

namespace {

Matrix affine_layer_norm(const Matrix& x, const Matrix& ln_scale, const Matrix& ln_shift) {
  Matrix h = layer_norm_rows(x);
  for (int r = 0; r < h.rows; ++r)
    for (int c = 0; c < h.cols; ++c)
      h.at(r, c) = h.at(r, c) * ln_scale.at(0, c) + ln_shift.at(0, c);
  return h;
}

}  // namespace

Matrix encoder_layer_forward(const Matrix& x, const EncoderLayer& layer,
                             const EncoderConfig& cfg) {
  if (cfg.minimal_blocks) {
    return attention(x, layer.attention, cfg.scaled_attention);
  }
  const Matrix h = attention(affine_layer_norm(x, layer.ln1_scale, layer.ln1_shift),
                             layer.attention, cfg.scaled_attention);
  const Matrix x1 = add(x, h);
  Matrix f = affine_layer_norm(x1, layer.ln2_scale, layer.ln2_shift);
  f = matmul(relu(matmul(f, layer.ffn_w1)), layer.ffn_w2);
  return add(x1, f);
}

Matrix encode(const Matrix& seq_embeddings, const EncoderStack& stack) {
  if (seq_embeddings.rows < 1) throw DimensionError("encode: empty input");
  Matrix x = seq_embeddings;
  for (const auto& layer : stack.layers) {
    x = encoder_layer_forward(x, layer, stack.config);
  }
  Matrix cls(1, x.cols);
  for (int c = 0; c < x.cols; ++c) cls.at(0, c) = x.at(0, c);
  return l2_normalize(cls);
}

std::pair<std::vector<AdEmbedding>, std::vector<CatalogError>> embed_catalog(
    const std::vector<std::string>& ad_ids, const std::vector<std::string>& copies,
    const Vocabulary& vocab, const EmbeddingTable& table, const EncoderStack& stack) {
  if (ad_ids.size() != copies.size()) {
    throw DimensionError("embed_catalog: ids/copies length mismatch");
  }
  std::vector<AdEmbedding> out;
  std::vector<CatalogError> errors;
  for (size_t i = 0; i < copies.size(); ++i) {
    try {
      const TokenSequence seq = tokenize(copies[i], vocab, stack.config.max_len);
      out.push_back(AdEmbedding{ad_ids[i], encode(embed(seq, table), stack)});
    } catch (const Error& e) {
      errors.push_back(CatalogError{i, e.what()});
    }
  }
  return {std::move(out), std::move(errors)};
}

EncoderStackNodes register_encoder_params(Tape& tape, const EmbeddingTable& table,
                                          const EncoderStack& stack) {
  EncoderStackNodes nodes;
  nodes.token_matrix = tape.param(table.token_matrix);
  nodes.position_matrix = tape.param(table.position_matrix);
  for (const auto& layer : stack.layers) {
    EncoderLayerNodes ln;
    ln.ln1_scale = tape.param(layer.ln1_scale);
    ln.ln1_shift = tape.param(layer.ln1_shift);
    ln.w_q = tape.param(layer.attention.w_q);
    ln.w_k = tape.param(layer.attention.w_k);
    ln.w_v = tape.param(layer.attention.w_v);
    ln.ln2_scale = tape.param(layer.ln2_scale);
    ln.ln2_shift = tape.param(layer.ln2_shift);
    ln.ffn_w1 = tape.param(layer.ffn_w1);
    ln.ffn_w2 = tape.param(layer.ffn_w2);
    nodes.layers.push_back(ln);
  }
  return nodes;
}

Tape::NodeId attention_graph(Tape& tape, Tape::NodeId x, const EncoderLayerNodes& p,
                             const EncoderConfig& cfg) {
  const auto q = tape.matmul(x, p.w_q);
  const auto k = tape.matmul(x, p.w_k);
  const auto v = tape.matmul(x, p.w_v);
  auto logits = tape.matmul(q, tape.transpose(k));
  if (cfg.scaled_attention) {
    logits = tape.scale(logits, 1.0 / std::sqrt(static_cast<double>(cfg.d_k)));
  }
  return tape.matmul(tape.softmax_rows(logits), v);
}

namespace {

Tape::NodeId affine_layer_norm_graph(Tape& tape, Tape::NodeId x, Tape::NodeId ln_scale,
                                     Tape::NodeId ln_shift) {
  auto h = tape.layer_norm_rows(x);
  h = tape.mul_row_broadcast(h, ln_scale);
  return tape.add_row_broadcast(h, ln_shift);
}

}  // namespace

Tape::NodeId encode_graph(Tape& tape, const EncoderStackNodes& nodes,
                          const std::vector<int>& token_ids, const EncoderConfig& cfg) {
  auto x = tape.embed_rows(nodes.token_matrix, nodes.position_matrix, token_ids);
  for (const auto& layer : nodes.layers) {
    if (cfg.minimal_blocks) {
      x = attention_graph(tape, x, layer, cfg);
      continue;
    }
    const auto h =
        attention_graph(tape, affine_layer_norm_graph(tape, x, layer.ln1_scale, layer.ln1_shift),
                        layer, cfg);
    const auto x1 = tape.add(x, h);
    auto f = affine_layer_norm_graph(tape, x1, layer.ln2_scale, layer.ln2_shift);
    f = tape.matmul(tape.relu(tape.matmul(f, layer.ffn_w1)), layer.ffn_w2);
    x = tape.add(x1, f);
  }
  return tape.l2_normalize_row(tape.pick_row(x, 0));
}

}  // namespace adseal
