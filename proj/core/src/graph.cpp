#include "tadkit/graph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "tadkit/errors.hpp"

namespace tadkit {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using MapM = Eigen::Map<RowMat>;

struct TagName {
  OpTag tag;
  std::string_view name;
};

constexpr TagName kTagNames[] = {
    {OpTag::kMatmul, "matmul"},
    {OpTag::kConv1d, "conv1d"},
    {OpTag::kAdd, "add"},
    {OpTag::kMul, "mul"},
    {OpTag::kConcat, "concat"},
    {OpTag::kSlice, "slice"},
    {OpTag::kSigmoid, "sigmoid"},
    {OpTag::kTanh, "tanh"},
    {OpTag::kRelu, "relu"},
    {OpTag::kLeakyRelu, "leaky_relu"},
    {OpTag::kSoftmax, "softmax"},
    {OpTag::kMean, "mean"},
    {OpTag::kSquare, "square"},
    {OpTag::kSqrt, "sqrt"},
    {OpTag::kAffineModulate, "affine_modulate"},
    {OpTag::kReshape, "reshape"},
    {OpTag::kTranspose, "transpose"},
    {OpTag::kGather, "gather"},
};

// Broadcast support for add/mul/affine_modulate: dims must match or be 1
// after right-alignment, rank <= 4. Returns the output shape.
std::vector<int> broadcast_shape(const std::vector<int>& a, const std::vector<int>& b) {
  size_t r = std::max(a.size(), b.size());
  if (r > 4) throw DimensionError("broadcast rank > 4");
  std::vector<int> out(r, 1);
  for (size_t i = 0; i < r; ++i) {
    int da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    int db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("incompatible broadcast shapes " + Tensor::shape_to_string(a) +
                           " vs " + Tensor::shape_to_string(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// Flat strides of `shape` right-aligned inside `out`, 0 on broadcast dims.
std::array<std::int64_t, 4> aligned_strides(const std::vector<int>& shape,
                                            const std::vector<int>& out) {
  std::array<std::int64_t, 4> st{0, 0, 0, 0};
  size_t r = out.size();
  std::int64_t acc = 1;
  for (size_t i = shape.size(); i-- > 0;) {
    size_t oi = i + (r - shape.size());
    st[oi] = (shape[i] == 1 && out[oi] != 1) ? 0 : acc;
    acc *= shape[i];
  }
  return st;
}

std::array<int, 4> padded_dims(const std::vector<int>& out) {
  std::array<int, 4> d{1, 1, 1, 1};
  size_t off = 4 - out.size();
  for (size_t i = 0; i < out.size(); ++i) d[off + i] = out[i];
  return d;
}

std::array<std::int64_t, 4> padded_strides(const std::vector<int>& shape,
                                           const std::vector<int>& out) {
  auto st = aligned_strides(shape, out);
  std::array<std::int64_t, 4> p{0, 0, 0, 0};
  size_t off = 4 - out.size();
  for (size_t i = 0; i < out.size(); ++i) p[off + i] = st[i];
  return p;
}

// Decompose `shape` around `axis` into (outer, n, inner) extents.
struct AxisView {
  std::int64_t outer = 1;
  std::int64_t n = 1;
  std::int64_t inner = 1;
};

AxisView axis_view(const std::vector<int>& shape, int axis) {
  AxisView v;
  for (int i = 0; i < static_cast<int>(shape.size()); ++i) {
    if (i < axis) v.outer *= shape[i];
    else if (i == axis) v.n = shape[i];
    else v.inner *= shape[i];
  }
  return v;
}

void check_axis(const Tensor& t, int axis, const char* what) {
  if (axis < 0 || axis >= t.rank()) {
    throw DimensionError(std::string(what) + ": axis " + std::to_string(axis) +
                         " out of range for " + t.shape_str());
  }
}

int conv_pad_left(int kernel) { return (kernel - 1) / 2; }

}  // namespace

OpTag op_from_name(std::string_view name) {
  for (const auto& t : kTagNames) {
    if (t.name == name) return t.tag;
  }
  throw ConfigError("unknown operator tag '" + std::string(name) + "'");
}

std::string_view op_name(OpTag tag) {
  for (const auto& t : kTagNames) {
    if (t.tag == tag) return t.name;
  }
  return "?";
}

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::constant(Tensor t) {
  Node n;
  n.is_leaf = true;
  n.needs_grad = false;
  n.out = std::move(t);
  return push(std::move(n));
}

NodeId Graph::param(Tensor& p) {
  Node n;
  n.is_leaf = true;
  n.bound = &p;
  n.needs_grad = p.requires_grad();
  n.out = p;  // value snapshot; grads flow to the bound tensor
  NodeId id = push(std::move(n));
  param_leaves_.push_back(id);
  return id;
}

const Tensor& Graph::value(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) {
    throw ContractError("invalid node id " + std::to_string(id));
  }
  return nodes_[static_cast<size_t>(id)].out;
}

NodeId Graph::concat(const std::vector<NodeId>& xs, int axis) {
  OpAttrs a;
  a.axis = axis;
  return forward_op(OpTag::kConcat, xs, std::move(a));
}

NodeId Graph::slice(NodeId x, int axis, int start, int length) {
  OpAttrs a;
  a.axis = axis;
  a.start = start;
  a.length = length;
  return forward_op(OpTag::kSlice, {x}, std::move(a));
}

NodeId Graph::leaky_relu(NodeId x, double slope) {
  OpAttrs a;
  a.slope = slope;
  return forward_op(OpTag::kLeakyRelu, {x}, std::move(a));
}

NodeId Graph::softmax(NodeId x, int axis) {
  OpAttrs a;
  a.axis = axis;
  return forward_op(OpTag::kSoftmax, {x}, std::move(a));
}

NodeId Graph::mean_all(NodeId x) {
  OpAttrs a;
  a.axis = -1;
  return forward_op(OpTag::kMean, {x}, std::move(a));
}

NodeId Graph::mean_axis(NodeId x, int axis) {
  OpAttrs a;
  a.axis = axis;
  return forward_op(OpTag::kMean, {x}, std::move(a));
}

NodeId Graph::reshape(NodeId x, std::vector<int> shape) {
  OpAttrs a;
  a.shape = std::move(shape);
  return forward_op(OpTag::kReshape, {x}, std::move(a));
}

NodeId Graph::transpose(NodeId x) { return forward_op(OpTag::kTranspose, {x}); }

NodeId Graph::gather(NodeId table, std::vector<std::int64_t> indices) {
  OpAttrs a;
  a.indices = std::move(indices);
  return forward_op(OpTag::kGather, {table}, std::move(a));
}

NodeId Graph::forward_op(OpTag tag, const std::vector<NodeId>& inputs, OpAttrs attrs) {
  auto arity = [&](size_t want) {
    if (inputs.size() != want) {
      throw ContractError(std::string(op_name(tag)) + ": expected " + std::to_string(want) +
                          " inputs, got " + std::to_string(inputs.size()));
    }
  };
  for (NodeId id : inputs) {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) {
      throw ContractError("forward_op: invalid input node id");
    }
  }

  Node n;
  n.tag = tag;
  n.inputs = inputs;
  n.attrs = std::move(attrs);
  for (NodeId id : inputs) n.needs_grad |= nodes_[static_cast<size_t>(id)].needs_grad;

  auto in = [&](size_t i) -> const Tensor& { return nodes_[static_cast<size_t>(inputs[i])].out; };

  switch (tag) {
    case OpTag::kMatmul: {
      arity(2);
      const Tensor& A = in(0);
      const Tensor& B = in(1);
      if (A.rank() == 2 && B.rank() == 2) {
        if (A.dim(1) != B.dim(0)) {
          throw DimensionError("matmul: " + A.shape_str() + " x " + B.shape_str());
        }
        int m = A.dim(0), k = A.dim(1), p = B.dim(1);
        Tensor out = Tensor::zeros({m, p});
        MapM(out.mutable_values().data(), m, p).noalias() =
            MapC(A.values().data(), m, k) * MapC(B.values().data(), k, p);
        n.out = std::move(out);
      } else if (A.rank() == 3 && B.rank() == 3 && A.dim(0) == B.dim(0)) {
        if (A.dim(2) != B.dim(1)) {
          throw DimensionError("matmul: " + A.shape_str() + " x " + B.shape_str());
        }
        int bs = A.dim(0), m = A.dim(1), k = A.dim(2), p = B.dim(2);
        Tensor out = Tensor::zeros({bs, m, p});
        for (int b = 0; b < bs; ++b) {
          MapM(out.mutable_values().data() + static_cast<std::int64_t>(b) * m * p, m, p).noalias() =
              MapC(A.values().data() + static_cast<std::int64_t>(b) * m * k, m, k) *
              MapC(B.values().data() + static_cast<std::int64_t>(b) * k * p, k, p);
        }
        n.out = std::move(out);
      } else {
        throw DimensionError("matmul: unsupported ranks " + A.shape_str() + " x " + B.shape_str());
      }
      break;
    }

    case OpTag::kConv1d: {
      // x: [B,L,Cin], w: [K,Cin,Cout], stride 1, zero same-padding.
      // Even kernels pad (K-1)/2 on the left and the remainder on the right.
      arity(2);
      const Tensor& X = in(0);
      const Tensor& W = in(1);
      if (X.rank() != 3 || W.rank() != 3 || X.dim(2) != W.dim(1)) {
        throw DimensionError("conv1d: x " + X.shape_str() + " w " + W.shape_str());
      }
      int B = X.dim(0), L = X.dim(1), Ci = X.dim(2), K = W.dim(0), Co = W.dim(2);
      int pad = conv_pad_left(K);
      Tensor out = Tensor::zeros({B, L, Co});
      const double* x = X.values().data();
      const double* w = W.values().data();
      double* y = out.mutable_values().data();
      for (int b = 0; b < B; ++b) {
        for (int t = 0; t < L; ++t) {
          double* yrow = y + (static_cast<std::int64_t>(b) * L + t) * Co;
          for (int j = 0; j < K; ++j) {
            int s = t + j - pad;
            if (s < 0 || s >= L) continue;
            const double* xrow = x + (static_cast<std::int64_t>(b) * L + s) * Ci;
            const double* wrow = w + static_cast<std::int64_t>(j) * Ci * Co;
            for (int ci = 0; ci < Ci; ++ci) {
              double xv = xrow[ci];
              const double* wr = wrow + static_cast<std::int64_t>(ci) * Co;
              for (int co = 0; co < Co; ++co) yrow[co] += xv * wr[co];
            }
          }
        }
      }
      n.out = std::move(out);
      break;
    }

    case OpTag::kAdd:
    case OpTag::kMul: {
      arity(2);
      const Tensor& A = in(0);
      const Tensor& B = in(1);
      if (A.shape() == B.shape()) {
        std::vector<double> v(A.values());
        const auto& bv = B.values();
        if (tag == OpTag::kAdd) {
          for (size_t i = 0; i < v.size(); ++i) v[i] += bv[i];
        } else {
          for (size_t i = 0; i < v.size(); ++i) v[i] *= bv[i];
        }
        n.out = Tensor::raw(A.shape(), std::move(v));
      } else {
        auto os = broadcast_shape(A.shape(), B.shape());
        auto dims = padded_dims(os);
        auto sa = padded_strides(A.shape(), os);
        auto sb = padded_strides(B.shape(), os);
        Tensor out = Tensor::zeros(os);
        double* y = out.mutable_values().data();
        const double* a = A.values().data();
        const double* b = B.values().data();
        std::int64_t o = 0;
        for (int i0 = 0; i0 < dims[0]; ++i0)
          for (int i1 = 0; i1 < dims[1]; ++i1)
            for (int i2 = 0; i2 < dims[2]; ++i2)
              for (int i3 = 0; i3 < dims[3]; ++i3) {
                std::int64_t ia = i0 * sa[0] + i1 * sa[1] + i2 * sa[2] + i3 * sa[3];
                std::int64_t ib = i0 * sb[0] + i1 * sb[1] + i2 * sb[2] + i3 * sb[3];
                y[o++] = tag == OpTag::kAdd ? a[ia] + b[ib] : a[ia] * b[ib];
              }
        n.out = std::move(out);
      }
      break;
    }

    case OpTag::kConcat: {
      if (inputs.size() < 2) throw ContractError("concat: needs >= 2 inputs");
      const Tensor& first = in(0);
      check_axis(first, n.attrs.axis, "concat");
      int axis = n.attrs.axis;
      std::vector<int> os = first.shape();
      for (size_t i = 1; i < inputs.size(); ++i) {
        const Tensor& T = in(i);
        if (T.rank() != first.rank()) throw DimensionError("concat: rank mismatch");
        for (int d = 0; d < first.rank(); ++d) {
          if (d == axis) continue;
          if (T.shape()[static_cast<size_t>(d)] != first.shape()[static_cast<size_t>(d)]) {
            throw DimensionError("concat: shape mismatch off axis");
          }
        }
        os[static_cast<size_t>(axis)] += T.dim(axis);
      }
      Tensor out = Tensor::zeros(os);
      auto ov = axis_view(os, axis);
      double* y = out.mutable_values().data();
      std::int64_t posn = 0;
      for (size_t i = 0; i < inputs.size(); ++i) {
        const Tensor& T = in(i);
        auto tv = axis_view(T.shape(), axis);
        const double* x = T.values().data();
        for (std::int64_t outr = 0; outr < tv.outer; ++outr) {
          double* dst = y + (outr * ov.n + posn) * ov.inner;
          const double* src = x + outr * tv.n * tv.inner;
          std::copy(src, src + tv.n * tv.inner, dst);
        }
        posn += tv.n;
      }
      n.out = std::move(out);
      break;
    }

    case OpTag::kSlice: {
      arity(1);
      const Tensor& X = in(0);
      check_axis(X, n.attrs.axis, "slice");
      int axis = n.attrs.axis, start = n.attrs.start, len = n.attrs.length;
      if (len <= 0 || start < 0 || start + len > X.dim(axis)) {
        throw DimensionError("slice: range [" + std::to_string(start) + "," +
                             std::to_string(start + len) + ") out of bounds for " + X.shape_str());
      }
      std::vector<int> os = X.shape();
      os[static_cast<size_t>(axis)] = len;
      Tensor out = Tensor::zeros(os);
      auto xv = axis_view(X.shape(), axis);
      const double* x = X.values().data();
      double* y = out.mutable_values().data();
      for (std::int64_t outr = 0; outr < xv.outer; ++outr) {
        const double* src = x + (outr * xv.n + start) * xv.inner;
        std::copy(src, src + static_cast<std::int64_t>(len) * xv.inner,
                  y + outr * len * xv.inner);
      }
      n.out = std::move(out);
      break;
    }

    case OpTag::kSigmoid:
    case OpTag::kTanh:
    case OpTag::kRelu:
    case OpTag::kLeakyRelu:
    case OpTag::kSquare:
    case OpTag::kSqrt: {
      arity(1);
      const Tensor& X = in(0);
      std::vector<double> v(X.values());
      switch (tag) {
        case OpTag::kSigmoid:
          for (double& x : v) x = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
          break;
        case OpTag::kTanh:
          for (double& x : v) x = std::tanh(x);
          break;
        case OpTag::kRelu:
          for (double& x : v) x = x > 0 ? x : 0.0;
          break;
        case OpTag::kLeakyRelu:
          for (double& x : v) x = x > 0 ? x : n.attrs.slope * x;
          break;
        case OpTag::kSquare:
          for (double& x : v) x = x * x;
          break;
        case OpTag::kSqrt:
          for (double& x : v) {
            if (x < 0) throw NumericError("sqrt of negative value");
            x = std::sqrt(x);
          }
          break;
        default:
          break;
      }
      n.out = Tensor::raw(X.shape(), std::move(v));
      break;
    }

    case OpTag::kSoftmax: {
      arity(1);
      const Tensor& X = in(0);
      check_axis(X, n.attrs.axis, "softmax");
      auto v = axis_view(X.shape(), n.attrs.axis);
      std::vector<double> y(X.values());
      for (std::int64_t o = 0; o < v.outer; ++o) {
        for (std::int64_t i = 0; i < v.inner; ++i) {
          double* base = y.data() + o * v.n * v.inner + i;
          double mx = base[0];
          for (std::int64_t j = 1; j < v.n; ++j) mx = std::max(mx, base[j * v.inner]);
          double sum = 0;
          for (std::int64_t j = 0; j < v.n; ++j) {
            double e = std::exp(base[j * v.inner] - mx);
            base[j * v.inner] = e;
            sum += e;
          }
          for (std::int64_t j = 0; j < v.n; ++j) base[j * v.inner] /= sum;
        }
      }
      n.out = Tensor::raw(X.shape(), std::move(y));
      break;
    }

    case OpTag::kMean: {
      arity(1);
      const Tensor& X = in(0);
      if (n.attrs.axis == -1) {
        double s = 0;
        for (double x : X.values()) s += x;
        n.out = Tensor::raw({1}, {s / static_cast<double>(X.size())});
      } else {
        check_axis(X, n.attrs.axis, "mean");
        auto v = axis_view(X.shape(), n.attrs.axis);
        std::vector<int> os;
        for (int d = 0; d < X.rank(); ++d) {
          if (d != n.attrs.axis) os.push_back(X.shape()[static_cast<size_t>(d)]);
        }
        if (os.empty()) os.push_back(1);
        Tensor out = Tensor::zeros(os);
        const double* x = X.values().data();
        double* y = out.mutable_values().data();
        for (std::int64_t o = 0; o < v.outer; ++o) {
          for (std::int64_t i = 0; i < v.inner; ++i) {
            double s = 0;
            for (std::int64_t j = 0; j < v.n; ++j) s += x[(o * v.n + j) * v.inner + i];
            y[o * v.inner + i] = s / static_cast<double>(v.n);
          }
        }
        n.out = std::move(out);
      }
      break;
    }

    case OpTag::kAffineModulate: {
      // y = (1 + gamma) * x + beta, gamma/beta broadcastable to x.
      arity(3);
      const Tensor& X = in(0);
      const Tensor& G = in(1);
      const Tensor& Bt = in(2);
      auto osg = broadcast_shape(X.shape(), G.shape());
      auto osb = broadcast_shape(X.shape(), Bt.shape());
      if (osg != X.shape() || osb != X.shape()) {
        throw DimensionError("affine_modulate: gamma/beta must broadcast to x " + X.shape_str());
      }
      auto dims = padded_dims(X.shape());
      auto sg = padded_strides(G.shape(), X.shape());
      auto sb = padded_strides(Bt.shape(), X.shape());
      Tensor out = Tensor::zeros(X.shape());
      const double* x = X.values().data();
      const double* g = G.values().data();
      const double* bb = Bt.values().data();
      double* y = out.mutable_values().data();
      std::int64_t o = 0;
      for (int i0 = 0; i0 < dims[0]; ++i0)
        for (int i1 = 0; i1 < dims[1]; ++i1)
          for (int i2 = 0; i2 < dims[2]; ++i2)
            for (int i3 = 0; i3 < dims[3]; ++i3) {
              std::int64_t ig = i0 * sg[0] + i1 * sg[1] + i2 * sg[2] + i3 * sg[3];
              std::int64_t ib = i0 * sb[0] + i1 * sb[1] + i2 * sb[2] + i3 * sb[3];
              y[o] = (1.0 + g[ig]) * x[o] + bb[ib];
              ++o;
            }
      n.out = std::move(out);
      break;
    }

    case OpTag::kReshape: {
      arity(1);
      const Tensor& X = in(0);
      if (Tensor::shape_size(n.attrs.shape) != X.size()) {
        throw DimensionError("reshape: size mismatch " + X.shape_str() + " -> " +
                             Tensor::shape_to_string(n.attrs.shape));
      }
      n.out = Tensor::raw(n.attrs.shape, X.values());
      break;
    }

    case OpTag::kTranspose: {
      arity(1);
      const Tensor& X = in(0);
      if (X.rank() < 2) throw DimensionError("transpose: rank < 2");
      std::vector<int> os = X.shape();
      std::swap(os[os.size() - 1], os[os.size() - 2]);
      int m = X.shape()[X.shape().size() - 2];
      int p = X.shape()[X.shape().size() - 1];
      std::int64_t batch = X.size() / (static_cast<std::int64_t>(m) * p);
      Tensor out = Tensor::zeros(os);
      const double* x = X.values().data();
      double* y = out.mutable_values().data();
      for (std::int64_t b = 0; b < batch; ++b) {
        const double* xs = x + b * m * p;
        double* ys = y + b * m * p;
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < p; ++j) ys[static_cast<std::int64_t>(j) * m + i] = xs[static_cast<std::int64_t>(i) * p + j];
      }
      n.out = std::move(out);
      break;
    }

    case OpTag::kGather: {
      arity(1);
      const Tensor& T = in(0);
      if (T.rank() != 2) throw DimensionError("gather: table must be rank 2");
      int V = T.dim(0), E = T.dim(1);
      const auto& idx = n.attrs.indices;
      if (idx.empty()) throw ContractError("gather: empty index list");
      Tensor out = Tensor::zeros({static_cast<int>(idx.size()), E});
      const double* x = T.values().data();
      double* y = out.mutable_values().data();
      for (size_t i = 0; i < idx.size(); ++i) {
        std::int64_t r = idx[i];
        if (r < 0 || r >= V) {
          throw DimensionError("gather: row " + std::to_string(r) + " out of range [0," +
                               std::to_string(V) + ")");
        }
        std::copy(x + r * E, x + (r + 1) * E, y + static_cast<std::int64_t>(i) * E);
      }
      n.out = std::move(out);
      break;
    }
  }

  return push(std::move(n));
}

void Graph::backward(NodeId loss) {
  if (loss < 0 || loss >= static_cast<NodeId>(nodes_.size())) {
    throw ContractError("backward: invalid loss node");
  }
  if (nodes_[static_cast<size_t>(loss)].out.size() != 1) {
    throw ContractError("backward: loss must be scalar-shaped, got " +
                        nodes_[static_cast<size_t>(loss)].out.shape_str());
  }

  // Parameters off the loss path keep zero grads.
  for (NodeId id : param_leaves_) {
    Tensor* p = nodes_[static_cast<size_t>(id)].bound;
    if (p->requires_grad()) p->ensure_grad();
  }

  std::vector<std::vector<double>> grads(nodes_.size());
  grads[static_cast<size_t>(loss)] = {1.0};

  for (NodeId id = loss; id >= 0; --id) {
    Node& node = nodes_[static_cast<size_t>(id)];
    auto& gy = grads[static_cast<size_t>(id)];
    if (gy.empty() || !node.needs_grad) continue;

    if (node.is_leaf) {
      if (node.bound && node.bound->requires_grad()) {
        auto& pg = node.bound->ensure_grad();
        for (size_t i = 0; i < pg.size(); ++i) pg[i] += gy[i];
      }
      continue;
    }

    auto in_t = [&](size_t i) -> const Tensor& {
      return nodes_[static_cast<size_t>(node.inputs[i])].out;
    };
    auto in_g = [&](size_t i) -> std::vector<double>& {
      auto& g = grads[static_cast<size_t>(node.inputs[i])];
      if (g.empty()) g.assign(static_cast<size_t>(in_t(i).size()), 0.0);
      return g;
    };
    auto wants = [&](size_t i) {
      return nodes_[static_cast<size_t>(node.inputs[i])].needs_grad;
    };

    switch (node.tag) {
      case OpTag::kMatmul: {
        const Tensor& A = in_t(0);
        const Tensor& B = in_t(1);
        if (A.rank() == 2) {
          int m = A.dim(0), k = A.dim(1), p = B.dim(1);
          MapC dC(gy.data(), m, p);
          if (wants(0)) {
            MapM(in_g(0).data(), m, k).noalias() += dC * MapC(B.values().data(), k, p).transpose();
          }
          if (wants(1)) {
            MapM(in_g(1).data(), k, p).noalias() += MapC(A.values().data(), m, k).transpose() * dC;
          }
        } else {
          int bs = A.dim(0), m = A.dim(1), k = A.dim(2), p = B.dim(2);
          for (int b = 0; b < bs; ++b) {
            MapC dC(gy.data() + static_cast<std::int64_t>(b) * m * p, m, p);
            MapC Ab(A.values().data() + static_cast<std::int64_t>(b) * m * k, m, k);
            MapC Bb(B.values().data() + static_cast<std::int64_t>(b) * k * p, k, p);
            if (wants(0)) {
              MapM(in_g(0).data() + static_cast<std::int64_t>(b) * m * k, m, k).noalias() +=
                  dC * Bb.transpose();
            }
            if (wants(1)) {
              MapM(in_g(1).data() + static_cast<std::int64_t>(b) * k * p, k, p).noalias() +=
                  Ab.transpose() * dC;
            }
          }
        }
        break;
      }

      case OpTag::kConv1d: {
        const Tensor& X = in_t(0);
        const Tensor& W = in_t(1);
        int B = X.dim(0), L = X.dim(1), Ci = X.dim(2), K = W.dim(0), Co = W.dim(2);
        int pad = conv_pad_left(K);
        const double* x = X.values().data();
        const double* w = W.values().data();
        double* dx = wants(0) ? in_g(0).data() : nullptr;
        double* dw = wants(1) ? in_g(1).data() : nullptr;
        for (int b = 0; b < B; ++b) {
          for (int t = 0; t < L; ++t) {
            const double* gyrow = gy.data() + (static_cast<std::int64_t>(b) * L + t) * Co;
            for (int j = 0; j < K; ++j) {
              int s = t + j - pad;
              if (s < 0 || s >= L) continue;
              const double* xrow = x + (static_cast<std::int64_t>(b) * L + s) * Ci;
              const double* wrow = w + static_cast<std::int64_t>(j) * Ci * Co;
              for (int ci = 0; ci < Ci; ++ci) {
                double acc = 0;
                const double* wr = wrow + static_cast<std::int64_t>(ci) * Co;
                for (int co = 0; co < Co; ++co) acc += wr[co] * gyrow[co];
                if (dx) dx[(static_cast<std::int64_t>(b) * L + s) * Ci + ci] += acc;
                if (dw) {
                  double xv = xrow[ci];
                  double* dwr = dw + (static_cast<std::int64_t>(j) * Ci + ci) * Co;
                  for (int co = 0; co < Co; ++co) dwr[co] += xv * gyrow[co];
                }
              }
            }
          }
        }
        break;
      }

      case OpTag::kAdd:
      case OpTag::kMul: {
        const Tensor& A = in_t(0);
        const Tensor& B = in_t(1);
        const auto& os = node.out.shape();
        if (A.shape() == B.shape()) {
          const auto& av = A.values();
          const auto& bv = B.values();
          if (wants(0)) {
            auto& ga = in_g(0);
            if (node.tag == OpTag::kAdd) {
              for (size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
            } else {
              for (size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
            }
          }
          if (wants(1)) {
            auto& gb = in_g(1);
            if (node.tag == OpTag::kAdd) {
              for (size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
            } else {
              for (size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
            }
          }
        } else {
          auto dims = padded_dims(os);
          auto sa = padded_strides(A.shape(), os);
          auto sb = padded_strides(B.shape(), os);
          const double* a = A.values().data();
          const double* b = B.values().data();
          double* ga = wants(0) ? in_g(0).data() : nullptr;
          double* gb = wants(1) ? in_g(1).data() : nullptr;
          std::int64_t o = 0;
          for (int i0 = 0; i0 < dims[0]; ++i0)
            for (int i1 = 0; i1 < dims[1]; ++i1)
              for (int i2 = 0; i2 < dims[2]; ++i2)
                for (int i3 = 0; i3 < dims[3]; ++i3) {
                  std::int64_t ia = i0 * sa[0] + i1 * sa[1] + i2 * sa[2] + i3 * sa[3];
                  std::int64_t ib = i0 * sb[0] + i1 * sb[1] + i2 * sb[2] + i3 * sb[3];
                  if (node.tag == OpTag::kAdd) {
                    if (ga) ga[ia] += gy[o];
                    if (gb) gb[ib] += gy[o];
                  } else {
                    if (ga) ga[ia] += gy[o] * b[ib];
                    if (gb) gb[ib] += gy[o] * a[ia];
                  }
                  ++o;
                }
        }
        break;
      }

      case OpTag::kConcat: {
        int axis = node.attrs.axis;
        auto ov = axis_view(node.out.shape(), axis);
        std::int64_t posn = 0;
        for (size_t i = 0; i < node.inputs.size(); ++i) {
          const Tensor& T = in_t(i);
          auto tv = axis_view(T.shape(), axis);
          if (wants(i)) {
            auto& g = in_g(i);
            for (std::int64_t outr = 0; outr < tv.outer; ++outr) {
              const double* src = gy.data() + (outr * ov.n + posn) * ov.inner;
              double* dst = g.data() + outr * tv.n * tv.inner;
              for (std::int64_t q = 0; q < tv.n * tv.inner; ++q) dst[q] += src[q];
            }
          }
          posn += tv.n;
        }
        break;
      }

      case OpTag::kSlice: {
        if (!wants(0)) break;
        const Tensor& X = in_t(0);
        int axis = node.attrs.axis, start = node.attrs.start, len = node.attrs.length;
        auto xv = axis_view(X.shape(), axis);
        auto& g = in_g(0);
        for (std::int64_t outr = 0; outr < xv.outer; ++outr) {
          double* dst = g.data() + (outr * xv.n + start) * xv.inner;
          const double* src = gy.data() + outr * len * xv.inner;
          for (std::int64_t q = 0; q < static_cast<std::int64_t>(len) * xv.inner; ++q) dst[q] += src[q];
        }
        break;
      }

      case OpTag::kSigmoid: {
        if (!wants(0)) break;
        auto& g = in_g(0);
        const auto& y = node.out.values();
        for (size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * y[i] * (1.0 - y[i]);
        break;
      }
      case OpTag::kTanh: {
        if (!wants(0)) break;
        auto& g = in_g(0);
        const auto& y = node.out.values();
        for (size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case OpTag::kRelu: {
        if (!wants(0)) break;
        auto& g = in_g(0);
        const auto& x = in_t(0).values();
        for (size_t i = 0; i < gy.size(); ++i) g[i] += x[i] > 0 ? gy[i] : 0.0;
        break;
      }
      case OpTag::kLeakyRelu: {
        if (!wants(0)) break;
        auto& g = in_g(0);
        const auto& x = in_t(0).values();
        for (size_t i = 0; i < gy.size(); ++i) g[i] += x[i] > 0 ? gy[i] : node.attrs.slope * gy[i];
        break;
      }
      case OpTag::kSquare: {
        if (!wants(0)) break;
        auto& g = in_g(0);
        const auto& x = in_t(0).values();
        for (size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * 2.0 * x[i];
        break;
      }
      case OpTag::kSqrt: {
        // d/dx sqrt = 0.5/sqrt(x); the denominator is clamped so a loss that
        // reaches exactly zero does not produce Inf.
        if (!wants(0)) break;
        auto& g = in_g(0);
        const auto& y = node.out.values();
        for (size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * 0.5 / std::max(y[i], 1e-12);
        break;
      }

      case OpTag::kSoftmax: {
        if (!wants(0)) break;
        auto v = axis_view(node.out.shape(), node.attrs.axis);
        const auto& y = node.out.values();
        auto& g = in_g(0);
        for (std::int64_t o = 0; o < v.outer; ++o) {
          for (std::int64_t i = 0; i < v.inner; ++i) {
            std::int64_t base = o * v.n * v.inner + i;
            double dot = 0;
            for (std::int64_t j = 0; j < v.n; ++j) {
              dot += gy[static_cast<size_t>(base + j * v.inner)] * y[static_cast<size_t>(base + j * v.inner)];
            }
            for (std::int64_t j = 0; j < v.n; ++j) {
              auto ix = static_cast<size_t>(base + j * v.inner);
              g[ix] += y[ix] * (gy[ix] - dot);
            }
          }
        }
        break;
      }

      case OpTag::kMean: {
        if (!wants(0)) break;
        const Tensor& X = in_t(0);
        auto& g = in_g(0);
        if (node.attrs.axis == -1) {
          double s = gy[0] / static_cast<double>(X.size());
          for (auto& q : g) q += s;
        } else {
          auto v = axis_view(X.shape(), node.attrs.axis);
          double inv = 1.0 / static_cast<double>(v.n);
          for (std::int64_t o = 0; o < v.outer; ++o) {
            for (std::int64_t i = 0; i < v.inner; ++i) {
              double s = gy[static_cast<size_t>(o * v.inner + i)] * inv;
              for (std::int64_t j = 0; j < v.n; ++j) g[static_cast<size_t>((o * v.n + j) * v.inner + i)] += s;
            }
          }
        }
        break;
      }

      case OpTag::kAffineModulate: {
        const Tensor& X = in_t(0);
        const Tensor& G = in_t(1);
        const Tensor& Bt = in_t(2);
        auto dims = padded_dims(X.shape());
        auto sg = padded_strides(G.shape(), X.shape());
        auto sb = padded_strides(Bt.shape(), X.shape());
        const double* x = X.values().data();
        const double* gm = G.values().data();
        double* dx = wants(0) ? in_g(0).data() : nullptr;
        double* dg = wants(1) ? in_g(1).data() : nullptr;
        double* db = wants(2) ? in_g(2).data() : nullptr;
        std::int64_t o = 0;
        for (int i0 = 0; i0 < dims[0]; ++i0)
          for (int i1 = 0; i1 < dims[1]; ++i1)
            for (int i2 = 0; i2 < dims[2]; ++i2)
              for (int i3 = 0; i3 < dims[3]; ++i3) {
                std::int64_t ig = i0 * sg[0] + i1 * sg[1] + i2 * sg[2] + i3 * sg[3];
                std::int64_t ib = i0 * sb[0] + i1 * sb[1] + i2 * sb[2] + i3 * sb[3];
                if (dx) dx[o] += gy[static_cast<size_t>(o)] * (1.0 + gm[ig]);
                if (dg) dg[ig] += gy[static_cast<size_t>(o)] * x[o];
                if (db) db[ib] += gy[static_cast<size_t>(o)];
                ++o;
              }
        break;
      }

      case OpTag::kReshape: {
        if (!wants(0)) break;
        auto& g = in_g(0);
        for (size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
        break;
      }

      case OpTag::kTranspose: {
        if (!wants(0)) break;
        const Tensor& X = in_t(0);
        int m = X.shape()[X.shape().size() - 2];
        int p = X.shape()[X.shape().size() - 1];
        std::int64_t batch = X.size() / (static_cast<std::int64_t>(m) * p);
        auto& g = in_g(0);
        for (std::int64_t b = 0; b < batch; ++b) {
          const double* src = gy.data() + b * m * p;  // [p,m]
          double* dst = g.data() + b * m * p;         // [m,p]
          for (int j = 0; j < p; ++j)
            for (int i = 0; i < m; ++i) dst[static_cast<std::int64_t>(i) * p + j] += src[static_cast<std::int64_t>(j) * m + i];
        }
        break;
      }

      case OpTag::kGather: {
        if (!wants(0)) break;
        const Tensor& T = in_t(0);
        int E = T.dim(1);
        auto& g = in_g(0);
        for (size_t i = 0; i < node.attrs.indices.size(); ++i) {
          std::int64_t r = node.attrs.indices[i];
          const double* src = gy.data() + static_cast<std::int64_t>(i) * E;
          double* dst = g.data() + r * E;
          for (int e = 0; e < E; ++e) dst[e] += src[e];
        }
        break;
      }
    }

    // Free this node's gradient buffer early; inputs own theirs now.
    gy.clear();
    gy.shrink_to_fit();
  }
}

}  // namespace tadkit
