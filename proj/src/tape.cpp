#include "adseal/tape.hpp"

#include <cmath>

#include "adseal/errors.hpp"

namespace adseal {

namespace {

double sigmoid_scalar(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

Tape::NodeId Tape::push(Op op, Matrix value, NodeId a, NodeId b, double c) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.c = c;
  n.tracked = (op == Op::Param) || (a >= 0 && nodes_[a].tracked) || (b >= 0 && nodes_[b].tracked);
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::leaf(Matrix value) { return push(Op::Leaf, std::move(value), -1, -1, 0.0); }

Tape::NodeId Tape::param(const Matrix& value) { return push(Op::Param, value, -1, -1, 0.0); }

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  return push(Op::MatMul, adseal::matmul(value(a), value(b)), a, b, 0.0);
}

Tape::NodeId Tape::transpose(NodeId a) {
  return push(Op::Transpose, adseal::transpose(value(a)), a, -1, 0.0);
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  return push(Op::Add, adseal::add(value(a), value(b)), a, b, 0.0);
}

Tape::NodeId Tape::add_row_broadcast(NodeId x, NodeId row) {
  const Matrix& xv = value(x);
  const Matrix& rv = value(row);
  if (rv.rows != 1 || rv.cols != xv.cols) {
    throw DimensionError("add_row_broadcast: " + xv.shape_str() + " vs " + rv.shape_str());
  }
  Matrix out(xv.rows, xv.cols);
  for (int r = 0; r < xv.rows; ++r)
    for (int c = 0; c < xv.cols; ++c) out.at(r, c) = xv.at(r, c) + rv.at(0, c);
  return push(Op::AddRowBcast, std::move(out), x, row, 0.0);
}

Tape::NodeId Tape::mul_row_broadcast(NodeId x, NodeId row) {
  const Matrix& xv = value(x);
  const Matrix& rv = value(row);
  if (rv.rows != 1 || rv.cols != xv.cols) {
    throw DimensionError("mul_row_broadcast: " + xv.shape_str() + " vs " + rv.shape_str());
  }
  Matrix out(xv.rows, xv.cols);
  for (int r = 0; r < xv.rows; ++r)
    for (int c = 0; c < xv.cols; ++c) out.at(r, c) = xv.at(r, c) * rv.at(0, c);
  return push(Op::MulRowBcast, std::move(out), x, row, 0.0);
}

Tape::NodeId Tape::hadamard(NodeId a, NodeId b) {
  return push(Op::Hadamard, adseal::hadamard(value(a), value(b)), a, b, 0.0);
}

Tape::NodeId Tape::scale(NodeId a, double c) {
  return push(Op::Scale, adseal::scale(value(a), c), a, -1, c);
}

Tape::NodeId Tape::softmax_rows(NodeId a) {
  return push(Op::SoftmaxRows, adseal::softmax_rows(value(a)), a, -1, 0.0);
}

Tape::NodeId Tape::layer_norm_rows(NodeId a) {
  return push(Op::LayerNormRows, adseal::layer_norm_rows(value(a)), a, -1, 0.0);
}

Tape::NodeId Tape::relu(NodeId a) {
  return push(Op::Relu, adseal::relu(value(a)), a, -1, 0.0);
}

Tape::NodeId Tape::sigmoid(NodeId a) {
  return push(Op::Sigmoid, adseal::sigmoid(value(a)), a, -1, 0.0);
}

Tape::NodeId Tape::pick_row(NodeId a, int row) {
  const Matrix& av = value(a);
  if (row < 0 || row >= av.rows) {
    throw DimensionError("pick_row: row " + std::to_string(row) + " of " + av.shape_str());
  }
  Matrix out(1, av.cols);
  for (int c = 0; c < av.cols; ++c) out.at(0, c) = av.at(row, c);
  return push(Op::PickRow, std::move(out), a, -1, static_cast<double>(row));
}

Tape::NodeId Tape::l2_normalize_row(NodeId a) {
  return push(Op::L2NormRow, adseal::l2_normalize(value(a)), a, -1, 0.0);
}

Tape::NodeId Tape::concat_cols(NodeId a, NodeId b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.rows != 1 || bv.rows != 1) {
    throw DimensionError("concat_cols: need single rows, " + av.shape_str() + " and " +
                         bv.shape_str());
  }
  Matrix out(1, av.cols + bv.cols);
  for (int c = 0; c < av.cols; ++c) out.at(0, c) = av.at(0, c);
  for (int c = 0; c < bv.cols; ++c) out.at(0, av.cols + c) = bv.at(0, c);
  return push(Op::ConcatCols, std::move(out), a, b, 0.0);
}

Tape::NodeId Tape::sum(NodeId a) {
  Matrix out(1, 1);
  out.at(0, 0) = sum_all(value(a));
  return push(Op::Sum, std::move(out), a, -1, 0.0);
}

Tape::NodeId Tape::bce_with_logits(NodeId logit, double label) {
  const Matrix& z = value(logit);
  if (z.rows != 1 || z.cols != 1) {
    throw DimensionError("bce_with_logits: logit must be 1x1, got " + z.shape_str());
  }
  const double zv = z.at(0, 0);
  Matrix out(1, 1);
  // max(z,0) - z*y + log(1 + exp(-|z|)), stable for large |z|
  out.at(0, 0) = std::max(zv, 0.0) - zv * label + std::log1p(std::exp(-std::fabs(zv)));
  ensure_finite(out, "bce_with_logits");
  return push(Op::BceWithLogits, std::move(out), logit, -1, label);
}

Tape::NodeId Tape::embed_rows(NodeId token_matrix, NodeId position_matrix, std::vector<int> ids) {
  const Matrix& tok = value(token_matrix);
  const Matrix& pos = value(position_matrix);
  const int n = static_cast<int>(ids.size());
  if (tok.cols != pos.cols) {
    throw DimensionError("embed_rows: d_model mismatch, " + tok.shape_str() + " vs " +
                         pos.shape_str());
  }
  if (n > pos.rows) {
    throw DimensionError("embed_rows: sequence length " + std::to_string(n) +
                         " exceeds position table rows " + std::to_string(pos.rows));
  }
  Matrix out(n, tok.cols);
  for (int i = 0; i < n; ++i) {
    if (ids[i] < 0 || ids[i] >= tok.rows) {
      throw DimensionError("embed_rows: token id " + std::to_string(ids[i]) + " out of range");
    }
    for (int c = 0; c < tok.cols; ++c) {
      out.at(i, c) = tok.at(ids[i], c) + pos.at(i, c);
    }
  }
  const NodeId id = push(Op::EmbedRows, std::move(out), token_matrix, position_matrix, 0.0);
  nodes_[id].idx = std::move(ids);
  return id;
}

void Tape::backward(NodeId loss) {
  const Matrix& lv = value(loss);
  if (lv.rows != 1 || lv.cols != 1) {
    throw DimensionError("backward: loss must be scalar (1x1), got " + lv.shape_str());
  }
  for (auto& n : nodes_) {
    n.grad = Matrix(n.value.rows, n.value.cols);
  }
  nodes_[loss].grad.at(0, 0) = 1.0;

  for (NodeId id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.tracked) continue;
    const Matrix& gy = n.grad;
    switch (n.op) {
      case Op::Leaf:
      case Op::Param:
        break;
      case Op::MatMul: {
        const Matrix& av = nodes_[n.a].value;
        const Matrix& bv = nodes_[n.b].value;
        if (nodes_[n.a].tracked) {
          Matrix ga = adseal::matmul(gy, adseal::transpose(bv));
          nodes_[n.a].grad = adseal::add(nodes_[n.a].grad, ga);
        }
        if (nodes_[n.b].tracked) {
          Matrix gb = adseal::matmul(adseal::transpose(av), gy);
          nodes_[n.b].grad = adseal::add(nodes_[n.b].grad, gb);
        }
        break;
      }
      case Op::Transpose:
        nodes_[n.a].grad = adseal::add(nodes_[n.a].grad, adseal::transpose(gy));
        break;
      case Op::Add:
        if (nodes_[n.a].tracked) nodes_[n.a].grad = adseal::add(nodes_[n.a].grad, gy);
        if (nodes_[n.b].tracked) nodes_[n.b].grad = adseal::add(nodes_[n.b].grad, gy);
        break;
      case Op::AddRowBcast: {
        if (nodes_[n.a].tracked) nodes_[n.a].grad = adseal::add(nodes_[n.a].grad, gy);
        if (nodes_[n.b].tracked) {
          Matrix& gr = nodes_[n.b].grad;
          for (int r = 0; r < gy.rows; ++r)
            for (int c = 0; c < gy.cols; ++c) gr.at(0, c) += gy.at(r, c);
        }
        break;
      }
      case Op::MulRowBcast: {
        const Matrix& xv = nodes_[n.a].value;
        const Matrix& rv = nodes_[n.b].value;
        if (nodes_[n.a].tracked) {
          Matrix& gx = nodes_[n.a].grad;
          for (int r = 0; r < gy.rows; ++r)
            for (int c = 0; c < gy.cols; ++c) gx.at(r, c) += gy.at(r, c) * rv.at(0, c);
        }
        if (nodes_[n.b].tracked) {
          Matrix& gr = nodes_[n.b].grad;
          for (int r = 0; r < gy.rows; ++r)
            for (int c = 0; c < gy.cols; ++c) gr.at(0, c) += gy.at(r, c) * xv.at(r, c);
        }
        break;
      }
      case Op::Hadamard: {
        if (nodes_[n.a].tracked)
          nodes_[n.a].grad =
              adseal::add(nodes_[n.a].grad, adseal::hadamard(gy, nodes_[n.b].value));
        if (nodes_[n.b].tracked)
          nodes_[n.b].grad =
              adseal::add(nodes_[n.b].grad, adseal::hadamard(gy, nodes_[n.a].value));
        break;
      }
      case Op::Scale:
        nodes_[n.a].grad = adseal::add(nodes_[n.a].grad, adseal::scale(gy, n.c));
        break;
      case Op::SoftmaxRows: {
        // dx_i = y_i * (gy_i - sum_j gy_j y_j) per row
        const Matrix& y = n.value;
        Matrix& gx = nodes_[n.a].grad;
        for (int r = 0; r < y.rows; ++r) {
          double dot = 0.0;
          for (int c = 0; c < y.cols; ++c) dot += gy.at(r, c) * y.at(r, c);
          for (int c = 0; c < y.cols; ++c) gx.at(r, c) += y.at(r, c) * (gy.at(r, c) - dot);
        }
        break;
      }
      case Op::LayerNormRows: {
        // dx = (gy - mean(gy) - y * mean(gy*y)) / sqrt(var + eps), per row
        const Matrix& y = n.value;
        const Matrix& x = nodes_[n.a].value;
        Matrix& gx = nodes_[n.a].grad;
        const double eps = 1e-5;
        for (int r = 0; r < y.rows; ++r) {
          double mean = 0.0;
          for (int c = 0; c < x.cols; ++c) mean += x.at(r, c);
          mean /= x.cols;
          double var = 0.0;
          for (int c = 0; c < x.cols; ++c) {
            const double d = x.at(r, c) - mean;
            var += d * d;
          }
          var /= x.cols;
          const double inv = 1.0 / std::sqrt(var + eps);
          double gmean = 0.0, gymean = 0.0;
          for (int c = 0; c < y.cols; ++c) {
            gmean += gy.at(r, c);
            gymean += gy.at(r, c) * y.at(r, c);
          }
          gmean /= y.cols;
          gymean /= y.cols;
          for (int c = 0; c < y.cols; ++c) {
            gx.at(r, c) += inv * (gy.at(r, c) - gmean - y.at(r, c) * gymean);
          }
        }
        break;
      }
      case Op::Relu: {
        const Matrix& x = nodes_[n.a].value;
        Matrix& gx = nodes_[n.a].grad;
        for (size_t i = 0; i < x.size(); ++i)
          if (x.data[i] > 0.0) gx.data[i] += gy.data[i];
        break;
      }
      case Op::Sigmoid: {
        const Matrix& y = n.value;
        Matrix& gx = nodes_[n.a].grad;
        for (size_t i = 0; i < y.size(); ++i)
          gx.data[i] += gy.data[i] * y.data[i] * (1.0 - y.data[i]);
        break;
      }
      case Op::PickRow: {
        const int row = static_cast<int>(n.c);
        Matrix& gx = nodes_[n.a].grad;
        for (int c = 0; c < gy.cols; ++c) gx.at(row, c) += gy.at(0, c);
        break;
      }
      case Op::L2NormRow: {
        // y = x / |x|; dx = (gy - y * (y . gy)) / |x|
        const Matrix& y = n.value;
        const Matrix& x = nodes_[n.a].value;
        const double norm = l2_norm(x);
        double dot = 0.0;
        for (int c = 0; c < y.cols; ++c) dot += y.at(0, c) * gy.at(0, c);
        Matrix& gx = nodes_[n.a].grad;
        for (int c = 0; c < y.cols; ++c)
          gx.at(0, c) += (gy.at(0, c) - y.at(0, c) * dot) / norm;
        break;
      }
      case Op::ConcatCols: {
        const int ca = nodes_[n.a].value.cols;
        if (nodes_[n.a].tracked) {
          Matrix& ga = nodes_[n.a].grad;
          for (int c = 0; c < ca; ++c) ga.at(0, c) += gy.at(0, c);
        }
        if (nodes_[n.b].tracked) {
          Matrix& gb = nodes_[n.b].grad;
          for (int c = 0; c < gy.cols - ca; ++c) gb.at(0, c) += gy.at(0, ca + c);
        }
        break;
      }
      case Op::Sum: {
        Matrix& gx = nodes_[n.a].grad;
        const double g = gy.at(0, 0);
        for (auto& v : gx.data) v += g;
        break;
      }
      case Op::BceWithLogits: {
        // d(loss)/dz = sigmoid(z) - label
        const double z = nodes_[n.a].value.at(0, 0);
        nodes_[n.a].grad.at(0, 0) += gy.at(0, 0) * (sigmoid_scalar(z) - n.c);
        break;
      }
      case Op::EmbedRows: {
        if (nodes_[n.a].tracked) {
          Matrix& gt = nodes_[n.a].grad;
          for (int i = 0; i < gy.rows; ++i)
            for (int c = 0; c < gy.cols; ++c) gt.at(n.idx[i], c) += gy.at(i, c);
        }
        if (nodes_[n.b].tracked) {
          Matrix& gp = nodes_[n.b].grad;
          for (int i = 0; i < gy.rows; ++i)
            for (int c = 0; c < gy.cols; ++c) gp.at(i, c) += gy.at(i, c);
        }
        break;
      }
    }
  }
}

}  // namespace adseal
