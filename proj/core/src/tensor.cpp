#include "xgen/tensor.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <cblas.h>

#include "xgen/error.hpp"

namespace xgen {

using detail::Node;

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

thread_local bool g_grad_enabled = true;

void validate_shape(const Shape& shape, std::size_t n) {
  if (shape.empty()) throw DimensionError("tensor: empty shape");
  for (auto d : shape)
    if (d == 0) throw DimensionError("tensor: zero-sized dimension in " + shape_str(shape));
  if (shape_numel(shape) != n)
    throw DimensionError("tensor: shape " + shape_str(shape) + " does not hold " + std::to_string(n) +
                         " values");
}

void check_finite(std::string_view op, const std::vector<double>& values) {
  constexpr std::uint64_t kExp = 0x7ff0000000000000ULL;
  bool bad = false;
  for (double v : values) bad |= (std::bit_cast<std::uint64_t>(v) & kExp) == kExp;
  if (bad) throw NumericError("numeric overflow in " + std::string(op) + ": non-finite output");
}

int blas_int(std::size_t v) {
  if (v > static_cast<std::size_t>(std::numeric_limits<int>::max())) throw DimensionError("matmul: dimension too large");
  return static_cast<int>(v);
}

std::span<double> grad_of(Node& n) {
  n.touched = true;
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

std::size_t last_dim(const Shape& s) { return s.back(); }

// Creates the output node; records it when grad mode is on and an input is tracked.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> value,
                   std::vector<std::shared_ptr<Node>> inputs, std::function<void(Node&)> bw) {
  check_finite(op, value);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->leaf = false;
  const bool tracked = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(),
                                                     [](const auto& in) { return in->requires_grad; });
  if (tracked) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(bw);
    Tape::active().record(node);
  }
  return Tensor(std::move(node));
}

const std::shared_ptr<Node>& need(const Tensor& t, std::string_view op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor operand");
  return t.node();
}

// Index plan for a broadcast binary op.
struct Broadcast {
  Shape out;
  bool same = false;
  std::vector<std::uint32_t> ia, ib;
};

Broadcast plan_broadcast(std::string_view op, const Shape& a, const Shape& b) {
  Broadcast p;
  if (a == b) {
    p.out = a;
    p.same = true;
    return p;
  }
  const std::size_t nd = std::max(a.size(), b.size());
  p.out.assign(nd, 1);
  std::vector<std::size_t> sa(nd, 1), sb(nd, 1);
  for (std::size_t i = 0; i < nd; ++i) {
    const std::size_t da = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
    const std::size_t db = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
    if (da != db && da != 1 && db != 1)
      throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    p.out[i] = std::max(da, db);
    sa[i] = da;
    sb[i] = db;
  }
  // Row-major strides, zeroed on broadcast axes.
  std::vector<std::size_t> stride_a(nd, 0), stride_b(nd, 0);
  std::size_t acc_a = 1, acc_b = 1;
  for (std::size_t i = nd; i-- > 0;) {
    stride_a[i] = sa[i] == 1 ? 0 : acc_a;
    stride_b[i] = sb[i] == 1 ? 0 : acc_b;
    acc_a *= sa[i];
    acc_b *= sb[i];
  }
  const std::size_t n = shape_numel(p.out);
  p.ia.resize(n);
  p.ib.resize(n);
  std::vector<std::size_t> idx(nd, 0);
  std::size_t off_a = 0, off_b = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    p.ia[flat] = static_cast<std::uint32_t>(off_a);
    p.ib[flat] = static_cast<std::uint32_t>(off_b);
    for (std::size_t d = nd; d-- > 0;) {
      if (++idx[d] < p.out[d]) {
        off_a += stride_a[d];
        off_b += stride_b[d];
        break;
      }
      off_a -= stride_a[d] * (p.out[d] - 1);
      off_b -= stride_b[d] * (p.out[d] - 1);
      idx[d] = 0;
    }
  }
  return p;
}

enum class BinKind { Add, Sub, Mul };

// Operand layouts that avoid a per-element index plan.
enum class Layout { Same, BRow, ARow, BCol, ACol, General };

Layout classify(const Shape& a, const Shape& b) {
  if (a == b) return Layout::Same;
  auto trailing = [](const Shape& big, const Shape& small) {
    if (small.size() > big.size()) return false;
    return std::equal(small.begin(), small.end(), big.end() - static_cast<std::ptrdiff_t>(small.size()));
  };
  if (trailing(a, b) && shape_numel(a) % shape_numel(b) == 0) return Layout::BRow;
  if (trailing(b, a) && shape_numel(b) % shape_numel(a) == 0) return Layout::ARow;
  if (a.size() == 2 && b.size() == 2 && a[0] == b[0] && b[1] == 1) return Layout::BCol;
  if (a.size() == 2 && b.size() == 2 && a[0] == b[0] && a[1] == 1) return Layout::ACol;
  return Layout::General;
}

template <typename Fn>
void with_indexer(Layout layout, std::size_t na, std::size_t nb, std::size_t cols, const Broadcast* plan, Fn&& fn) {
  switch (layout) {
    case Layout::Same:
      return fn([](std::size_t i) { return i; }, [](std::size_t i) { return i; });
    case Layout::BRow:
      return fn([](std::size_t i) { return i; }, [nb](std::size_t i) { return i % nb; });
    case Layout::ARow:
      return fn([na](std::size_t i) { return i % na; }, [](std::size_t i) { return i; });
    case Layout::BCol:
      return fn([](std::size_t i) { return i; }, [cols](std::size_t i) { return i / cols; });
    case Layout::ACol:
      return fn([cols](std::size_t i) { return i / cols; }, [](std::size_t i) { return i; });
    case Layout::General:
      return fn([plan](std::size_t i) -> std::size_t { return plan->ia[i]; },
                [plan](std::size_t i) -> std::size_t { return plan->ib[i]; });
  }
}

template <BinKind K>
double apply(double x, double y) {
  if constexpr (K == BinKind::Add) return x + y;
  if constexpr (K == BinKind::Sub) return x - y;
  return x * y;
}

template <BinKind K>
Tensor binary_impl(std::string_view op, const Tensor& ta, const Tensor& tb) {
  const auto& a = need(ta, op);
  const auto& b = need(tb, op);
  const Layout layout = classify(a->shape, b->shape);
  std::shared_ptr<Broadcast> plan;
  Shape shape;
  if (layout == Layout::General) {
    plan = std::make_shared<Broadcast>(plan_broadcast(op, a->shape, b->shape));
    shape = plan->out;
  } else {
    shape = (layout == Layout::ARow || layout == Layout::ACol) ? b->shape : a->shape;
  }
  const std::size_t n = shape_numel(shape);
  const std::size_t na = a->value.size(), nb = b->value.size(), cols = shape.back();
  std::vector<double> out(n);
  with_indexer(layout, na, nb, cols, plan.get(), [&](auto ia, auto ib) {
    const double* A = a->value.data();
    const double* B = b->value.data();
    for (std::size_t i = 0; i < n; ++i) out[i] = apply<K>(A[ia(i)], B[ib(i)]);
  });
  return make_result(op, std::move(shape), std::move(out), {a, b}, [layout, plan, na, nb, cols](Node& self) {
    Node& a = *self.inputs[0];
    Node& b = *self.inputs[1];
    const double* G = self.grad.data();
    const std::size_t n = self.grad.size();
    with_indexer(layout, na, nb, cols, plan.get(), [&](auto ia, auto ib) {
      if (a.requires_grad) {
        double* ga = grad_of(a).data();
        if constexpr (K == BinKind::Mul) {
          const double* B = b.value.data();
          for (std::size_t i = 0; i < n; ++i) ga[ia(i)] += G[i] * B[ib(i)];
        } else {
          for (std::size_t i = 0; i < n; ++i) ga[ia(i)] += G[i];
        }
      }
      if (b.requires_grad) {
        double* gb = grad_of(b).data();
        if constexpr (K == BinKind::Mul) {
          const double* A = a.value.data();
          for (std::size_t i = 0; i < n; ++i) gb[ib(i)] += G[i] * A[ia(i)];
        } else if constexpr (K == BinKind::Sub) {
          for (std::size_t i = 0; i < n; ++i) gb[ib(i)] -= G[i];
        } else {
          for (std::size_t i = 0; i < n; ++i) gb[ib(i)] += G[i];
        }
      }
    });
  });
}

Tensor binary(std::string_view op, BinKind kind, const Tensor& a, const Tensor& b) {
  switch (kind) {
    case BinKind::Add: return binary_impl<BinKind::Add>(op, a, b);
    case BinKind::Sub: return binary_impl<BinKind::Sub>(op, a, b);
    case BinKind::Mul: return binary_impl<BinKind::Mul>(op, a, b);
  }
  throw ContractError("binary: unknown kind");
}

template <typename Fwd, typename Deriv>
Tensor unary(std::string_view op, const Tensor& ta, Fwd fwd, Deriv deriv) {
  const auto& a = need(ta, op);
  std::vector<double> out(a->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a->value[i]);
  Shape shape = a->shape;
  return make_result(op, std::move(shape), std::move(out), {a}, [deriv](Node& self) {
    Node& a = *self.inputs[0];
    if (!a.requires_grad) return;
    auto ga = grad_of(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * deriv(a.value[i], self.value[i]);
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  validate_shape(shape, values.size());
  check_finite("constant", values);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return constant(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return constant({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  t.node_->grad.assign(t.node_->value.size(), 0.0);
  return t;
}

const Shape& Tensor::shape() const { return need(*this, "shape")->shape; }
std::size_t Tensor::numel() const { return need(*this, "numel")->value.size(); }
std::size_t Tensor::cols() const { return shape().back(); }
std::size_t Tensor::rows() const { return numel() / cols(); }
std::span<const double> Tensor::data() const { return need(*this, "data")->value; }
std::span<double> Tensor::mutable_data() { return need(*this, "mutable_data")->value; }

double Tensor::item() const {
  if (numel() != 1) throw ContractError("item(): tensor of shape " + shape_str(shape()) + " is not scalar");
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }
std::span<const double> Tensor::grad() const { return need(*this, "grad")->grad; }
std::span<double> Tensor::mutable_grad() { return need(*this, "grad")->grad; }

void Tensor::zero_grad() {
  if (node_) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

std::optional<std::size_t> Tensor::node_id() const {
  if (!node_ || node_->leaf) return std::nullopt;
  const Tape& tape = Tape::active();
  if (node_->tape_generation != tape.generation()) return std::nullopt;
  return node_->tape_index;
}

Tensor Tensor::detach() const {
  const auto& n = need(*this, "detach");
  return constant(n->shape, n->value);
}

// ---------------------------------------------------------------------------
// Tape

Tape& Tape::active() {
  thread_local Tape tape;
  return tape;
}

std::size_t Tape::record(const std::shared_ptr<Node>& node) {
  node->tape_generation = generation_;
  node->tape_index = nodes_.size();
  nodes_.push_back(node);
  return node->tape_index;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined()) throw ContractError("backward: undefined loss");
  if (loss.numel() != 1)
    throw ContractError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  const auto& node = loss.node();
  if (node->leaf || node->tape_generation != generation_ || node->tape_index >= nodes_.size() ||
      nodes_[node->tape_index] != node)
    throw ContractError("backward: loss is not on the active tape");
  grad_of(*node)[0] += 1.0;
  for (std::size_t i = node->tape_index + 1; i-- > 0;) {
    Node& n = *nodes_[i];
    if (n.touched && n.backward) n.backward(n);
  }
  clear();
}

void Tape::clear() {
  for (auto& n : nodes_) {
    n->inputs.clear();
    n->backward = nullptr;
    n->requires_grad = false;
    n->grad.clear();
    n->grad.shrink_to_fit();
  }
  nodes_.clear();
  ++generation_;
}

void backward(const Tensor& loss) { Tape::active().backward(loss); }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

// ---------------------------------------------------------------------------
// Ops

Tensor add(const Tensor& a, const Tensor& b) { return binary("add", BinKind::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary("sub", BinKind::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary("mul", BinKind::Mul, a, b); }

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor matmul(const Tensor& ta, const Tensor& tb) {
  const auto& a = need(ta, "matmul");
  const auto& b = need(tb, "matmul");
  if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0])
    throw DimensionError("matmul: incompatible shapes " + shape_str(a->shape) + " and " + shape_str(b->shape));
  const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
  std::vector<double> out(m * n, 0.0);
  if (m > 0 && n > 0 && k > 0)
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, blas_int(m), blas_int(n), blas_int(k), 1.0,
                a->value.data(), blas_int(k), b->value.data(), blas_int(n), 0.0, out.data(), blas_int(n));
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& a = *self.inputs[0];
    Node& b = *self.inputs[1];
    if (m == 0 || n == 0 || k == 0) return;
    if (a.requires_grad)
      cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, blas_int(m), blas_int(k), blas_int(n), 1.0,
                  self.grad.data(), blas_int(n), b.value.data(), blas_int(n), 1.0, grad_of(a).data(), blas_int(k));
    if (b.requires_grad)
      cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, blas_int(k), blas_int(n), blas_int(m), 1.0,
                  a.value.data(), blas_int(k), self.grad.data(), blas_int(n), 1.0, grad_of(b).data(), blas_int(n));
  });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& a) {
  return unary(
      "softplus", a, [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x, double) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); });
}

Tensor square(const Tensor& a) {
  return unary(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor concat(std::initializer_list<Tensor> parts) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat: no operands");
  std::vector<std::shared_ptr<Node>> inputs;
  const Shape& first = need(parts[0], "concat")->shape;
  Shape lead(first.begin(), first.end() - 1);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& t : parts) {
    const auto& n = need(t, "concat");
    Shape l(n->shape.begin(), n->shape.end() - 1);
    if (l != lead)
      throw DimensionError("concat: leading dims differ, " + shape_str(first) + " vs " + shape_str(n->shape));
    widths.push_back(last_dim(n->shape));
    total += widths.back();
    inputs.push_back(n);
  }
  const std::size_t rows = shape_numel(first) / last_dim(first);
  std::vector<double> out(rows * total);
  std::size_t off = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& v = inputs[k]->value;
    const std::size_t w = widths[k];
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(v.data() + r * w, w, out.data() + r * total + off);
    off += w;
  }
  Shape shape = lead;
  shape.push_back(total);
  return make_result("concat", std::move(shape), std::move(out), std::move(inputs),
                     [rows, total, widths](Node& self) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                         Node& in = *self.inputs[k];
                         const std::size_t w = widths[k];
                         if (in.requires_grad) {
                           auto g = grad_of(in);
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < w; ++c) g[r * w + c] += self.grad[r * total + off + c];
                         }
                         off += w;
                       }
                     });
}

Tensor slice(const Tensor& ta, std::size_t begin, std::size_t end) {
  const auto& a = need(ta, "slice");
  const std::size_t width = last_dim(a->shape);
  if (begin >= end || end > width)
    throw DimensionError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for shape " + shape_str(a->shape));
  const std::size_t rows = a->value.size() / width, w = end - begin;
  std::vector<double> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(a->value.data() + r * width + begin, w, out.data() + r * w);
  Shape shape = a->shape;
  shape.back() = w;
  return make_result("slice", std::move(shape), std::move(out), {a}, [rows, width, begin, w](Node& self) {
    Node& a = *self.inputs[0];
    if (!a.requires_grad) return;
    auto g = grad_of(a);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) g[r * width + begin + c] += self.grad[r * w + c];
  });
}

Tensor embedding(const Tensor& ttable, std::span<const std::size_t> ids_in) {
  const auto& table = need(ttable, "embedding");
  if (table->shape.size() != 2) throw DimensionError("embedding: table must be 2-D, got " + shape_str(table->shape));
  if (ids_in.empty()) throw DimensionError("embedding: empty id list");
  const std::size_t vocab = table->shape[0], d = table->shape[1];
  for (auto id : ids_in)
    if (id >= vocab)
      throw DimensionError("embedding: id " + std::to_string(id) + " out of range for table " +
                           shape_str(table->shape));
  auto ids = std::make_shared<std::vector<std::size_t>>(ids_in.begin(), ids_in.end());
  std::vector<double> out(ids->size() * d);
  for (std::size_t i = 0; i < ids->size(); ++i)
    std::copy_n(table->value.data() + (*ids)[i] * d, d, out.data() + i * d);
  return make_result("embedding", {ids->size(), d}, std::move(out), {table}, [ids, d](Node& self) {
    Node& t = *self.inputs[0];
    if (!t.requires_grad) return;
    auto g = grad_of(t);
    for (std::size_t i = 0; i < ids->size(); ++i)
      for (std::size_t c = 0; c < d; ++c) g[(*ids)[i] * d + c] += self.grad[i * d + c];
  });
}

Tensor pick(const Tensor& ta, std::span<const std::size_t> ids_in) {
  const auto& a = need(ta, "pick");
  if (a->shape.size() != 2 || a->shape[0] != ids_in.size())
    throw DimensionError("pick: shape " + shape_str(a->shape) + " does not match " +
                         std::to_string(ids_in.size()) + " indices");
  const std::size_t n = a->shape[0], c = a->shape[1];
  for (auto id : ids_in)
    if (id >= c) throw DimensionError("pick: index " + std::to_string(id) + " out of range for " + shape_str(a->shape));
  auto ids = std::make_shared<std::vector<std::size_t>>(ids_in.begin(), ids_in.end());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a->value[i * c + (*ids)[i]];
  return make_result("pick", {n}, std::move(out), {a}, [ids, c](Node& self) {
    Node& a = *self.inputs[0];
    if (!a.requires_grad) return;
    auto g = grad_of(a);
    for (std::size_t i = 0; i < ids->size(); ++i) g[i * c + (*ids)[i]] += self.grad[i];
  });
}

Tensor softmax(const Tensor& ta) {
  const auto& a = need(ta, "softmax");
  const std::size_t c = last_dim(a->shape), rows = a->value.size() / c;
  std::vector<double> out(a->value.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a->value.data() + r * c;
    double* y = out.data() + r * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) y[j] /= z;
  }
  Shape shape = a->shape;
  return make_result("softmax", std::move(shape), std::move(out), {a}, [rows, c](Node& self) {
    Node& a = *self.inputs[0];
    if (!a.requires_grad) return;
    auto g = grad_of(a);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * c;
      const double* gy = self.grad.data() + r * c;
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < c; ++j) g[r * c + j] += y[j] * (gy[j] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& ta) {
  const auto& a = need(ta, "log_softmax");
  const std::size_t c = last_dim(a->shape), rows = a->value.size() / c;
  std::vector<double> out(a->value.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a->value.data() + r * c;
    double* y = out.data() + r * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(x[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) y[j] = x[j] - lse;
  }
  Shape shape = a->shape;
  return make_result("log_softmax", std::move(shape), std::move(out), {a}, [rows, c](Node& self) {
    Node& a = *self.inputs[0];
    if (!a.requires_grad) return;
    auto g = grad_of(a);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * c;
      const double* gy = self.grad.data() + r * c;
      double total = 0.0;
      for (std::size_t j = 0; j < c; ++j) total += gy[j];
      for (std::size_t j = 0; j < c; ++j) g[r * c + j] += gy[j] - std::exp(y[j]) * total;
    }
  });
}

Tensor sum(const Tensor& ta) {
  const auto& a = need(ta, "sum");
  double s = 0.0;
  for (double v : a->value) s += v;
  return make_result("sum", {1}, {s}, {a}, [](Node& self) {
    Node& a = *self.inputs[0];
    if (!a.requires_grad) return;
    auto g = grad_of(a);
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& ta) {
  const auto& a = need(ta, "mean");
  const double inv = 1.0 / static_cast<double>(a->value.size());
  double s = 0.0;
  for (double v : a->value) s += v;
  return make_result("mean", {1}, {s * inv}, {a}, [inv](Node& self) {
    Node& a = *self.inputs[0];
    if (!a.requires_grad) return;
    auto g = grad_of(a);
    for (auto& v : g) v += self.grad[0] * inv;
  });
}

Tensor row_sum(const Tensor& ta) {
  const auto& a = need(ta, "row_sum");
  const std::size_t c = last_dim(a->shape), rows = a->value.size() / c;
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r] += a->value[r * c + j];
  return make_result("row_sum", {rows, 1}, std::move(out), {a}, [rows, c](Node& self) {
    Node& a = *self.inputs[0];
    if (!a.requires_grad) return;
    auto g = grad_of(a);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) g[r * c + j] += self.grad[r];
  });
}

Tensor l2_normalize(const Tensor& ta) {
  const auto& a = need(ta, "l2_normalize");
  const std::size_t c = last_dim(a->shape), rows = a->value.size() / c;
  auto norms = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(a->value.size());
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (std::size_t j = 0; j < c; ++j) ss += a->value[r * c + j] * a->value[r * c + j];
    const double nrm = std::sqrt(ss);
    if (!(nrm > 0.0)) throw NumericError("numeric overflow in l2_normalize: zero-norm row");
    (*norms)[r] = nrm;
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = a->value[r * c + j] / nrm;
  }
  Shape shape = a->shape;
  return make_result("l2_normalize", std::move(shape), std::move(out), {a}, [rows, c, norms](Node& self) {
    Node& a = *self.inputs[0];
    if (!a.requires_grad) return;
    auto g = grad_of(a);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * c;
      const double* gy = self.grad.data() + r * c;
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += y[j] * gy[j];
      for (std::size_t j = 0; j < c; ++j) g[r * c + j] += (gy[j] - y[j] * dot) / (*norms)[r];
    }
  });
}

// ---------------------------------------------------------------------------
// Dispatcher

namespace {
constexpr std::array kAllKinds{OpKind::MatMul,  OpKind::Add,       OpKind::Sub,        OpKind::Mul,
                               OpKind::Tanh,    OpKind::Sigmoid,   OpKind::Relu,       OpKind::Softplus,
                               OpKind::Square,  OpKind::Concat,    OpKind::Slice,      OpKind::Embedding,
                               OpKind::Pick,    OpKind::Softmax,   OpKind::LogSoftmax, OpKind::Sum,
                               OpKind::Mean,    OpKind::RowSum,    OpKind::L2Normalize};

void arity(OpKind kind, std::span<const Tensor> in, std::size_t n) {
  if (in.size() != n)
    throw ContractError(std::string(op_name(kind)) + ": expected " + std::to_string(n) + " inputs, got " +
                        std::to_string(in.size()));
}
}  // namespace

std::span<const OpKind> all_op_kinds() { return kAllKinds; }

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Relu: return "relu";
    case OpKind::Softplus: return "softplus";
    case OpKind::Square: return "square";
    case OpKind::Concat: return "concat";
    case OpKind::Slice: return "slice";
    case OpKind::Embedding: return "embedding";
    case OpKind::Pick: return "pick";
    case OpKind::Softmax: return "softmax";
    case OpKind::LogSoftmax: return "log_softmax";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::RowSum: return "row_sum";
    case OpKind::L2Normalize: return "l2_normalize";
  }
  return "unknown";
}

Tensor forward_op(OpKind kind, std::span<const Tensor> in, const OpArgs& args) {
  switch (kind) {
    case OpKind::MatMul: arity(kind, in, 2); return matmul(in[0], in[1]);
    case OpKind::Add: arity(kind, in, 2); return add(in[0], in[1]);
    case OpKind::Sub: arity(kind, in, 2); return sub(in[0], in[1]);
    case OpKind::Mul: arity(kind, in, 2); return mul(in[0], in[1]);
    case OpKind::Tanh: arity(kind, in, 1); return tanh(in[0]);
    case OpKind::Sigmoid: arity(kind, in, 1); return sigmoid(in[0]);
    case OpKind::Relu: arity(kind, in, 1); return relu(in[0]);
    case OpKind::Softplus: arity(kind, in, 1); return softplus(in[0]);
    case OpKind::Square: arity(kind, in, 1); return square(in[0]);
    case OpKind::Concat: return concat(in);
    case OpKind::Slice: arity(kind, in, 1); return slice(in[0], args.begin, args.end);
    case OpKind::Embedding: arity(kind, in, 1); return embedding(in[0], args.ids);
    case OpKind::Pick: arity(kind, in, 1); return pick(in[0], args.ids);
    case OpKind::Softmax: arity(kind, in, 1); return softmax(in[0]);
    case OpKind::LogSoftmax: arity(kind, in, 1); return log_softmax(in[0]);
    case OpKind::Sum: arity(kind, in, 1); return sum(in[0]);
    case OpKind::Mean: arity(kind, in, 1); return mean(in[0]);
    case OpKind::RowSum: arity(kind, in, 1); return row_sum(in[0]);
    case OpKind::L2Normalize: arity(kind, in, 1); return l2_normalize(in[0]);
  }
  throw ContractError("forward_op: unknown kind");
}

}  // namespace xgen
