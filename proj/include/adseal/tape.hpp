#pragma once

#include <cstdint>
#include <vector>

#include "adseal/matrix.hpp"

namespace adseal {

// Reverse-mode tape over Matrix-valued nodes. Nodes are appended in
// evaluation order, so ids are already topologically sorted; backward()
// walks them strictly in reverse. One tape per training step, never shared.
class Tape {
 public:
  using NodeId = int;

  enum class Op : uint8_t {
    Leaf,          // constant, no gradient
    Param,         // tracked leaf
    MatMul,        // a x b
    Transpose,
    Add,           // same-shape a + b
    AddRowBcast,   // X (n x d) + row (1 x d) broadcast over rows
    MulRowBcast,   // X (n x d) * row (1 x d) broadcast over rows
    Hadamard,
    Scale,         // X * scalar constant
    SoftmaxRows,
    LayerNormRows,
    Relu,
    Sigmoid,
    PickRow,       // one row of X as a 1 x d matrix
    L2NormRow,     // 1 x d row scaled to unit L2 norm
    ConcatCols,    // [a | b], both single rows
    Sum,           // 1x1 sum of all entries
    BceWithLogits, // 1x1 stable binary cross-entropy vs. a constant label
    EmbedRows      // row i = token_matrix[ids[i]] + position_matrix[i]
  };

  NodeId leaf(Matrix value);
  NodeId param(const Matrix& value);

  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId add(NodeId a, NodeId b);
  NodeId add_row_broadcast(NodeId x, NodeId row);
  NodeId mul_row_broadcast(NodeId x, NodeId row);
  NodeId hadamard(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId softmax_rows(NodeId a);
  NodeId layer_norm_rows(NodeId a);
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId pick_row(NodeId a, int row);
  NodeId l2_normalize_row(NodeId a);
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId sum(NodeId a);
  NodeId bce_with_logits(NodeId logit, double label);
  NodeId embed_rows(NodeId token_matrix, NodeId position_matrix, std::vector<int> ids);

  const Matrix& value(NodeId id) const { return nodes_[id].value; }
  const Matrix& grad(NodeId id) const { return nodes_[id].grad; }
  bool tracked(NodeId id) const { return nodes_[id].tracked; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every node
  // reachable from a tracked leaf. The loss node must be 1x1.
  void backward(NodeId loss);

 private:
  struct Node {
    Op op;
    NodeId a = -1;
    NodeId b = -1;
    double c = 0.0;   // scalar payload (Scale constant, BCE label, PickRow index)
    std::vector<int> idx;  // EmbedRows token ids
    Matrix value;
    Matrix grad;
    bool tracked = false;  // any tracked leaf upstream
  };

  NodeId push(Op op, Matrix value, NodeId a, NodeId b, double c);
  std::vector<Node> nodes_;
};

}  // namespace adseal
