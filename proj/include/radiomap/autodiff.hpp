#pragma once

// Reverse-mode automatic differentiation over small dense tensors.
//
// Every operation evaluates eagerly and records itself on an implicit tape
// (the DAG of shared nodes). Backward rules are expressed with the same
// recorded operations, so the tensors returned by grad() are themselves
// differentiable graph values. That is what makes expressions containing
// gradients (the critic's gradient penalty) trainable.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace radiomap::ad {

using Shape = std::vector<int>;

inline int numel(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Node;

/// Value handle. Copies share the underlying node; a Tensor without a
/// recorded operation is a leaf (constant or parameter).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor leaf(Shape shape, std::vector<double> values);
  static Tensor scalar(double v) { return leaf({1}, {v}); }
  static Tensor zeros(Shape shape) { return leaf(shape, std::vector<double>(numel(shape), 0.0)); }
  static Tensor ones(Shape shape) { return leaf(shape, std::vector<double>(numel(shape), 1.0)); }
  static Tensor full(Shape shape, double v) { return leaf(shape, std::vector<double>(numel(shape), v)); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  const std::vector<double>& values() const;
  int size() const { return numel(shape()); }
  double item() const;
  bool is_leaf() const;

  /// Overwrite a leaf's values in place (optimizer updates between graph
  /// builds). Derived nodes keep whatever they computed earlier. Const
  /// because a Tensor is a handle; the node is the mutable entity.
  void set_values(const std::vector<double>& v) const;

  Node* node() const { return node_.get(); }
  std::shared_ptr<Node> node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Fills grads[i] with the adjoint contribution for parent i when needs[i]
/// is set. Contributions must be built from recorded operations.
using BackwardFn =
    std::function<void(const Tensor& adjoint, const std::vector<char>& needs, std::vector<Tensor>& grads)>;

struct Node {
  std::uint64_t id = 0;
  const char* op = "leaf";
  Shape shape;
  std::vector<double> values;
  std::vector<Tensor> parents;
  BackwardFn backward;  // empty for leaves
};

namespace detail {
inline std::uint64_t next_node_id() {
  static std::atomic<std::uint64_t> counter{0};
  return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

inline Tensor Tensor::leaf(Shape shape, std::vector<double> values) {
  if (static_cast<int>(values.size()) != numel(shape))
    throw ShapeError("leaf: value count " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  auto n = std::make_shared<Node>();
  n->id = detail::next_node_id();
  n->shape = std::move(shape);
  n->values = std::move(values);
  return Tensor(std::move(n));
}

inline const Shape& Tensor::shape() const { return node_->shape; }
inline const std::vector<double>& Tensor::values() const { return node_->values; }
inline bool Tensor::is_leaf() const { return !node_->backward; }

inline double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor " + shape_str(shape()) + " is not scalar");
  return node_->values[0];
}

inline void Tensor::set_values(const std::vector<double>& v) const {
  if (!is_leaf()) throw std::logic_error("set_values: only leaf tensors may be mutated");
  if (v.size() != node_->values.size())
    throw ShapeError("set_values: size mismatch for shape " + shape_str(shape()));
  node_->values = v;
}

inline Tensor make_op(const char* op, Shape shape, std::vector<double> values,
                      std::vector<Tensor> parents, BackwardFn backward) {
  auto n = std::make_shared<Node>();
  n->id = detail::next_node_id();
  n->op = op;
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->parents = std::move(parents);
  n->backward = std::move(backward);
  return Tensor(std::move(n));
}

/// Cuts the tensor out of the graph: same values, no history.
inline Tensor detach(const Tensor& x) { return Tensor::leaf(x.shape(), x.values()); }

// ---------------------------------------------------------------------------
// elementwise primitives
// ---------------------------------------------------------------------------

namespace detail {
inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}
}  // namespace detail

inline Tensor add_same(const Tensor& a, const Tensor& b) {
  detail::check_same_shape("add", a, b);
  std::vector<double> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op("add", a.shape(), std::move(out), {a, b},
                 [](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (needs[0]) grads[0] = adj;
                   if (needs[1]) grads[1] = adj;
                 });
}

inline Tensor mul_same(const Tensor& a, const Tensor& b) {
  detail::check_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op("mul", a.shape(), std::move(out), {a, b},
                 [a, b](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (needs[0]) grads[0] = mul_same(adj, b);
                   if (needs[1]) grads[1] = mul_same(adj, a);
                 });
}

inline Tensor scale(const Tensor& x, double c) {
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * xv[i];
  return make_op("scale", x.shape(), std::move(out), {x},
                 [c](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (needs[0]) grads[0] = scale(adj, c);
                 });
}

inline Tensor add_const(const Tensor& x, double c) {
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + c;
  return make_op("add_const", x.shape(), std::move(out), {x},
                 [](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (needs[0]) grads[0] = adj;
                 });
}

inline Tensor neg(const Tensor& x) { return scale(x, -1.0); }

inline Tensor pow_const(const Tensor& x, double p) {
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(xv[i], p);
  return make_op("pow_const", x.shape(), std::move(out), {x},
                 [x, p](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (!needs[0]) return;
                   if (p == 1.0) {
                     grads[0] = adj;
                     return;
                   }
                   const Tensor xp = (p == 2.0) ? x : pow_const(x, p - 1.0);
                   grads[0] = scale(mul_same(adj, xp), p);
                 });
}

inline Tensor square(const Tensor& x) { return mul_same(x, x); }
inline Tensor sqrt(const Tensor& x) { return pow_const(x, 0.5); }

inline Tensor abs(const Tensor& x) {
  const auto& xv = x.values();
  std::vector<double> out(x.size()), sign(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::abs(xv[i]);
    sign[i] = (xv[i] > 0.0) ? 1.0 : (xv[i] < 0.0 ? -1.0 : 0.0);
  }
  // The sign gate is a constant of the forward point, so the second
  // derivative of |x| is zero almost everywhere, as it should be.
  const Tensor gate = Tensor::leaf(x.shape(), std::move(sign));
  return make_op("abs", x.shape(), std::move(out), {x},
                 [gate](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (needs[0]) grads[0] = mul_same(adj, gate);
                 });
}

inline Tensor leaky_relu(const Tensor& x, double slope = 0.2) {
  const auto& xv = x.values();
  std::vector<double> out(x.size()), gate(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool pos = xv[i] >= 0.0;
    out[i] = pos ? xv[i] : slope * xv[i];
    gate[i] = pos ? 1.0 : slope;
  }
  const Tensor g = Tensor::leaf(x.shape(), std::move(gate));
  return make_op("leaky_relu", x.shape(), std::move(out), {x},
                 [g](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (needs[0]) grads[0] = mul_same(adj, g);
                 });
}

// ---------------------------------------------------------------------------
// index-map primitives: gather / scatter_add
//
// A single pair of adjoint linear maps covers reshape-free data movement
// (broadcast, transpose, slice, padding, im2col). map[i] < 0 reads as zero.
// ---------------------------------------------------------------------------

using IndexMap = std::shared_ptr<const std::vector<std::int64_t>>;

inline Tensor scatter_add(const Tensor& x, const IndexMap& map, const Shape& out_shape);

inline Tensor gather(const Tensor& x, const IndexMap& map, const Shape& out_shape) {
  if (static_cast<int>(map->size()) != numel(out_shape))
    throw ShapeError("gather: map size does not match output shape " + shape_str(out_shape));
  std::vector<double> out(map->size());
  const auto& xv = x.values();
  const auto& m = *map;
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = (m[i] >= 0) ? xv[m[i]] : 0.0;
  const Shape in_shape = x.shape();
  return make_op("gather", out_shape, std::move(out), {x},
                 [map, in_shape](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (needs[0]) grads[0] = scatter_add(adj, map, in_shape);
                 });
}

inline Tensor scatter_add(const Tensor& x, const IndexMap& map, const Shape& out_shape) {
  if (static_cast<int>(map->size()) != x.size())
    throw ShapeError("scatter_add: map size does not match input shape " + shape_str(x.shape()));
  std::vector<double> out(numel(out_shape), 0.0);
  const auto& xv = x.values();
  const auto& m = *map;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] >= 0) out[m[i]] += xv[i];
  const Shape in_shape = x.shape();
  return make_op("scatter_add", out_shape, std::move(out), {x},
                 [map, in_shape](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (needs[0]) grads[0] = gather(adj, map, in_shape);
                 });
}

namespace detail {

// Index maps are pure functions of their dimensions; cache per thread.
template <typename Key>
IndexMap cached_map(std::map<Key, IndexMap>& cache, const Key& key,
                    const std::function<std::vector<std::int64_t>()>& build) {
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto m = std::make_shared<const std::vector<std::int64_t>>(build());
  cache.emplace(key, m);
  return m;
}

inline IndexMap broadcast0_map(int batch, int rest) {
  thread_local std::map<std::pair<int, int>, IndexMap> cache;
  return cached_map(cache, std::make_pair(batch, rest), [&] {
    std::vector<std::int64_t> m(static_cast<std::size_t>(batch) * rest);
    for (int b = 0; b < batch; ++b)
      for (int r = 0; r < rest; ++r) m[static_cast<std::size_t>(b) * rest + r] = r;
    return m;
  });
}

inline IndexMap transpose_map(int rows, int cols) {
  thread_local std::map<std::pair<int, int>, IndexMap> cache;
  return cached_map(cache, std::make_pair(rows, cols), [&] {
    std::vector<std::int64_t> m(static_cast<std::size_t>(rows) * cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i)
        m[static_cast<std::size_t>(j) * rows + i] = static_cast<std::int64_t>(i) * cols + j;
    return m;
  });
}

inline IndexMap fill_map(int n) {
  thread_local std::map<int, IndexMap> cache;
  return cached_map(cache, n, [&] { return std::vector<std::int64_t>(n, 0); });
}

}  // namespace detail

/// Repeats x along a new leading dimension of extent `batch`.
inline Tensor broadcast0(const Tensor& x, int batch) {
  Shape out_shape;
  out_shape.push_back(batch);
  for (int d : x.shape()) out_shape.push_back(d);
  return gather(x, detail::broadcast0_map(batch, x.size()), out_shape);
}

inline Tensor transpose(const Tensor& x) {
  if (x.shape().size() != 2) throw ShapeError("transpose: expected rank-2, got " + shape_str(x.shape()));
  const int r = x.shape()[0], c = x.shape()[1];
  return gather(x, detail::transpose_map(r, c), {c, r});
}

inline Tensor reshape(const Tensor& x, Shape new_shape) {
  if (numel(new_shape) != x.size())
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(new_shape));
  const Shape old_shape = x.shape();
  return make_op("reshape", std::move(new_shape), x.values(), {x},
                 [old_shape](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (needs[0]) grads[0] = reshape(adj, old_shape);
                 });
}

// ---------------------------------------------------------------------------
// broadcast-aware elementwise API (leading batch dimension only)
// ---------------------------------------------------------------------------

namespace detail {
enum class Bcast { none, left, right };

inline Bcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Bcast::none;
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() == sb.size() + 1 && std::equal(sb.begin(), sb.end(), sa.begin() + 1)) return Bcast::right;
  if (sb.size() == sa.size() + 1 && std::equal(sa.begin(), sa.end(), sb.begin() + 1)) return Bcast::left;
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(sa) + " vs " + shape_str(sb) +
                   " (only leading-dimension broadcast is supported)");
}
}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  switch (detail::broadcast_kind("add", a, b)) {
    case detail::Bcast::none: return add_same(a, b);
    case detail::Bcast::right: return add_same(a, broadcast0(b, a.shape()[0]));
    default: return add_same(broadcast0(a, b.shape()[0]), b);
  }
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  switch (detail::broadcast_kind("mul", a, b)) {
    case detail::Bcast::none: return mul_same(a, b);
    case detail::Bcast::right: return mul_same(a, broadcast0(b, a.shape()[0]));
    default: return mul_same(broadcast0(a, b.shape()[0]), b);
  }
}

inline Tensor sub(const Tensor& a, const Tensor& b) { return add(a, neg(b)); }

// ---------------------------------------------------------------------------
// reductions and matmul
// ---------------------------------------------------------------------------

inline Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  const Shape in_shape = x.shape();
  const int n = x.size();
  return make_op("sum", {1}, {s}, {x},
                 [in_shape, n](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (needs[0]) grads[0] = gather(adj, detail::fill_map(n), in_shape);
                 });
}

inline Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(x), 1.0 / x.size());
}

namespace detail {
inline void matmul_values(const double* a, const double* b, double* c, int m, int k, int n) {
  std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = b + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}
}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  detail::matmul_values(a.values().data(), b.values().data(), out.data(), m, k, n);
  return make_op("matmul", {m, n}, std::move(out), {a, b},
                 [a, b](const Tensor& adj, const std::vector<char>& needs, std::vector<Tensor>& grads) {
                   if (needs[0]) grads[0] = matmul(adj, transpose(b));
                   if (needs[1]) grads[1] = matmul(transpose(a), adj);
                 });
}

/// Row-wise sum of a [m, n] tensor, as [m, 1].
inline Tensor sum_rows(const Tensor& x) {
  if (x.shape().size() != 2) throw ShapeError("sum_rows: expected rank-2, got " + shape_str(x.shape()));
  return matmul(x, Tensor::ones({x.shape()[1], 1}));
}

inline Tensor l2_norm(const Tensor& x) { return sqrt(sum(square(x))); }

/// Row-wise Euclidean norm with an epsilon inside the root so the derivative
/// stays finite at zero rows.
inline Tensor l2_norm_rows(const Tensor& x, double eps = 1e-12) {
  return sqrt(add_const(sum_rows(square(x)), eps));
}

/// Concatenates two rank-2 tensors along columns.
inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[0] != b.shape()[0])
    throw ShapeError("concat_cols: incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  const int m = a.shape()[0], p = a.shape()[1], q = b.shape()[1];
  thread_local std::map<std::tuple<int, int, int, int>, IndexMap> cache;
  const auto build = [&](bool left) {
    return detail::cached_map(cache, std::make_tuple(m, p, q, static_cast<int>(left)), [&] {
      std::vector<std::int64_t> mp(static_cast<std::size_t>(m) * (p + q), -1);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < p + q; ++j) {
          auto& slot = mp[static_cast<std::size_t>(i) * (p + q) + j];
          if (left && j < p) slot = static_cast<std::int64_t>(i) * p + j;
          if (!left && j >= p) slot = static_cast<std::int64_t>(i) * q + (j - p);
        }
      return mp;
    });
  };
  const Shape out{m, p + q};
  return add_same(gather(a, build(true), out), gather(b, build(false), out));
}

inline Tensor mse(const Tensor& a, const Tensor& b) { return mean(square(sub(a, b))); }
inline Tensor mae(const Tensor& a, const Tensor& b) { return mean(abs(sub(a, b))); }

// ---------------------------------------------------------------------------
// grad
// ---------------------------------------------------------------------------

/// d(output)/d(input) for each input. `output` must be scalar. Inputs not
/// reachable from the output get a zero gradient. The returned tensors are
/// graph values, so grad() may be applied again to expressions built from
/// them (second order).
inline std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& inputs) {
  if (!output.defined()) throw std::invalid_argument("grad: undefined output");
  if (output.size() != 1)
    throw std::invalid_argument("grad: output must be scalar, got " + shape_str(output.shape()));

  // Reachable subgraph; node ids increase from operands to results, so
  // sorting by id yields a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{output.node()};
  seen.insert(output.node());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const Tensor& p : n->parents)
      if (seen.insert(p.node()).second) stack.push_back(p.node());
  }
  std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->id < b->id; });

  std::unordered_set<Node*> input_set;
  for (const Tensor& t : inputs) {
    if (!t.defined()) throw std::invalid_argument("grad: undefined input");
    input_set.insert(t.node());
  }

  // A node is active when some differentiation input can be reached from it.
  std::unordered_map<Node*, char> active;
  active.reserve(order.size());
  for (Node* n : order) {
    char a = input_set.count(n) ? 1 : 0;
    if (!a)
      for (const Tensor& p : n->parents)
        if (active[p.node()]) {
          a = 1;
          break;
        }
    active[n] = a;
  }

  std::unordered_map<Node*, Tensor> adjoint;
  adjoint.reserve(order.size());
  adjoint[output.node()] = Tensor::ones({1});

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward || !active[n]) continue;
    auto adj_it = adjoint.find(n);
    if (adj_it == adjoint.end()) continue;  // not on a path from the output

    std::vector<char> needs(n->parents.size(), 0);
    bool any = false;
    for (std::size_t i = 0; i < n->parents.size(); ++i) {
      needs[i] = active[n->parents[i].node()];
      any = any || needs[i];
    }
    if (!any) continue;

    std::vector<Tensor> contrib(n->parents.size());
    n->backward(adj_it->second, needs, contrib);
    for (std::size_t i = 0; i < n->parents.size(); ++i) {
      if (!needs[i] || !contrib[i].defined()) continue;
      Node* pn = n->parents[i].node();
      auto found = adjoint.find(pn);
      if (found == adjoint.end())
        adjoint.emplace(pn, contrib[i]);
      else
        found->second = add_same(found->second, contrib[i]);
    }
  }

  std::vector<Tensor> result;
  result.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    auto found = adjoint.find(t.node());
    result.push_back(found != adjoint.end() ? found->second : Tensor::zeros(t.shape()));
  }
  return result;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct GradcheckResult {
  bool pass = false;
  double max_rel_err = 0.0;
  int checked = 0;
  int excluded = 0;  // elements skipped because the point straddles a kink
  std::string worst;
};

/// Compares grad() against central finite differences at `point`. Elements
/// where forward and backward one-sided differences disagree (a kink of a
/// piecewise-linear activation) are reported as excluded rather than failed.
inline GradcheckResult gradcheck(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                                 const std::vector<Tensor>& point, double tol, double step = 1e-5) {
  GradcheckResult res;

  const Tensor out = f(point);
  if (out.size() != 1) throw std::invalid_argument("gradcheck: f must return a scalar");
  const double f0 = out.item();
  if (!std::isfinite(f0)) throw NumericError("gradcheck: non-finite function value");
  const std::vector<Tensor> analytic = grad(out, point);

  const auto eval_perturbed = [&](std::size_t which, std::size_t elem, double delta) {
    std::vector<Tensor> moved = point;
    std::vector<double> vals = point[which].values();
    vals[elem] += delta;
    moved[which] = Tensor::leaf(point[which].shape(), std::move(vals));
    const double v = f(moved).item();
    if (!std::isfinite(v)) throw NumericError("gradcheck: non-finite function value at perturbed point");
    return v;
  };

  for (std::size_t which = 0; which < point.size(); ++which) {
    const auto& avals = analytic[which].values();
    for (std::size_t e = 0; e < avals.size(); ++e) {
      const double fp = eval_perturbed(which, e, step);
      const double fm = eval_perturbed(which, e, -step);
      const double central = (fp - fm) / (2.0 * step);
      const double a = avals[e];
      const double rel = std::abs(a - central) / std::max({1.0, std::abs(a), std::abs(central)});
      if (rel > tol) {
        // one-sided slopes disagreeing means the step straddles a kink
        const double fwd = (fp - f0) / step;
        const double bwd = (f0 - fm) / step;
        if (std::abs(fwd - bwd) > 0.03 * std::max({1.0, std::abs(fwd), std::abs(bwd)})) {
          ++res.excluded;
          continue;
        }
      }
      ++res.checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        std::ostringstream os;
        os << "input " << which << " elem " << e << ": analytic=" << a << " numeric=" << central;
        res.worst = os.str();
      }
    }
  }
  res.pass = res.max_rel_err <= tol;
  return res;
}

// ---------------------------------------------------------------------------
// debug dump
// ---------------------------------------------------------------------------

/// Renders the subgraph below `root` as DOT text.
inline std::string dump_dot(const Tensor& root) {
  std::ostringstream os;
  os << "digraph g {\n";
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.node()};
  seen.insert(root.node());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    os << "  n" << n->id << " [label=\"" << n->op << ' ' << shape_str(n->shape) << "\"];\n";
    for (const Tensor& p : n->parents) {
      os << "  n" << p.node()->id << " -> n" << n->id << ";\n";
      if (seen.insert(p.node()).second) stack.push_back(p.node());
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace radiomap::ad
