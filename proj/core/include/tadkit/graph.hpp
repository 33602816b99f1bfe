#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "tadkit/tensor.hpp"

namespace tadkit {

// Operator set of the compute graph. The first block is the public
// contract used by the model; the last three are structural primitives
// (layout changes and embedding row lookup) with trivial adjoints.
enum class OpTag {
  kMatmul,
  kConv1d,
  kAdd,
  kMul,
  kConcat,
  kSlice,
  kSigmoid,
  kTanh,
  kRelu,
  kLeakyRelu,
  kSoftmax,
  kMean,
  kSquare,
  kSqrt,
  kAffineModulate,
  kReshape,
  kTranspose,
  kGather,
};

OpTag op_from_name(std::string_view name);  // unknown name -> ConfigError
std::string_view op_name(OpTag tag);

struct OpAttrs {
  int axis = -1;                      // concat/slice/softmax/mean (-1: all for mean)
  double slope = 0.2;                 // leaky_relu
  int start = 0;                      // slice
  int length = 0;                     // slice
  std::vector<int> shape;             // reshape target
  std::vector<std::int64_t> indices;  // gather row ids
};

using NodeId = int;

// Dynamic reverse-mode tape. A graph is built per forward pass; backward
// walks the tape once in reverse topological (= reverse insertion) order.
// Parameter leaves are bound by pointer and their grad slots accumulate
// across backward calls until explicitly zeroed.
class Graph {
 public:
  // Leaf with no gradient (batch inputs, masks, constants).
  NodeId constant(Tensor t);
  NodeId scalar(double v) { return constant(Tensor::scalar(v)); }
  // Leaf bound to an external parameter tensor; must outlive the graph.
  NodeId param(Tensor& p);

  NodeId forward_op(OpTag tag, const std::vector<NodeId>& inputs, OpAttrs attrs = {});

  const Tensor& value(NodeId id) const;
  std::size_t node_count() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss)=1 and accumulates into every bound parameter with
  // requires_grad; parameters not on a path to the loss receive zeros.
  // loss must be scalar-shaped. Repeated calls accumulate (by design).
  void backward(NodeId loss);

  // Convenience builders.
  NodeId matmul(NodeId a, NodeId b) { return forward_op(OpTag::kMatmul, {a, b}); }
  NodeId conv1d(NodeId x, NodeId w) { return forward_op(OpTag::kConv1d, {x, w}); }
  NodeId add(NodeId a, NodeId b) { return forward_op(OpTag::kAdd, {a, b}); }
  NodeId mul(NodeId a, NodeId b) { return forward_op(OpTag::kMul, {a, b}); }
  NodeId sub(NodeId a, NodeId b) { return add(a, mul(b, scalar(-1.0))); }
  NodeId concat(const std::vector<NodeId>& xs, int axis);
  NodeId slice(NodeId x, int axis, int start, int length);
  NodeId sigmoid(NodeId x) { return forward_op(OpTag::kSigmoid, {x}); }
  NodeId tanh(NodeId x) { return forward_op(OpTag::kTanh, {x}); }
  NodeId relu(NodeId x) { return forward_op(OpTag::kRelu, {x}); }
  NodeId leaky_relu(NodeId x, double slope);
  NodeId softmax(NodeId x, int axis);
  NodeId mean_all(NodeId x);
  NodeId mean_axis(NodeId x, int axis);
  NodeId square(NodeId x) { return forward_op(OpTag::kSquare, {x}); }
  NodeId sqrt(NodeId x) { return forward_op(OpTag::kSqrt, {x}); }
  NodeId affine_modulate(NodeId x, NodeId gamma, NodeId beta) {
    return forward_op(OpTag::kAffineModulate, {x, gamma, beta});
  }
  NodeId reshape(NodeId x, std::vector<int> shape);
  NodeId transpose(NodeId x);  // swaps the last two axes
  NodeId gather(NodeId table, std::vector<std::int64_t> indices);

 private:
  struct Node {
    OpTag tag = OpTag::kAdd;
    bool is_leaf = false;
    bool needs_grad = false;
    std::vector<NodeId> inputs;
    Tensor out;
    OpAttrs attrs;
    Tensor* bound = nullptr;  // set for parameter leaves
  };

  NodeId push(Node n);
  std::vector<Node> nodes_;
  std::vector<NodeId> param_leaves_;
};

}  // namespace tadkit
