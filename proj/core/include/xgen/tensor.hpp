#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xgen {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty unless requires_grad
  bool requires_grad = false;
  bool leaf = true;
  bool touched = false;
  std::uint64_t tape_generation = 0;
  std::size_t tape_index = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
};

}  // namespace detail

/// Dense row-major tensor of doubles with an optional gradient buffer.
///
/// Tensor is a cheap handle: copies alias the same storage. Leaves created
/// through parameter() own a gradient; every op whose inputs include a
/// tracked tensor is recorded on the calling thread's Tape.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  /// Trainable leaf with a zeroed gradient buffer.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const;
  std::size_t ndim() const { return shape().size(); }
  /// Size of the last dimension.
  std::size_t cols() const;
  /// numel() / cols().
  std::size_t rows() const;

  std::span<const double> data() const;
  /// Direct write access; intended for leaves (initialization, optimizers, clipping).
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const { return data()[i]; }
  double at(std::size_t r, std::size_t c) const { return data()[r * cols() + c]; }

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Position on the active tape, or nullopt for constants and leaves.
  std::optional<std::size_t> node_id() const;

  /// Untracked copy of the current values.
  Tensor detach() const;

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Dynamic reverse-mode tape, one per thread.
///
/// Ops append their output node in execution order, so the list is
/// topologically sorted by construction. backward() walks it once in
/// reverse and then clears it; tensors produced on a cleared tape become
/// plain constants.
class Tape {
 public:
  static Tape& active();

  std::size_t size() const { return nodes_.size(); }
  std::uint64_t generation() const { return generation_; }
  std::size_t record(const std::shared_ptr<detail::Node>& node);
  void backward(const Tensor& loss);
  void clear();

 private:
  std::vector<std::shared_ptr<detail::Node>> nodes_;
  std::uint64_t generation_ = 1;
};

/// Accumulates d(loss)/d(t) into every tracked tensor reachable from loss.
void backward(const Tensor& loss);

bool grad_enabled();

/// Disables recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Elementwise binary ops broadcast with the trailing-dimension rule: shapes
// are right-aligned and each aligned pair must be equal or contain a 1.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

/// [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
/// log(1 + exp(x)), computed without overflow.
Tensor softplus(const Tensor& a);
Tensor square(const Tensor& a);

/// Concatenates along the last dimension; leading dimensions must agree.
Tensor concat(std::span<const Tensor> parts);
Tensor concat(std::initializer_list<Tensor> parts);
/// Columns [begin, end) of the last dimension.
Tensor slice(const Tensor& a, std::size_t begin, std::size_t end);
/// Rows of a [V, d] table -> [ids.size(), d].
Tensor embedding(const Tensor& table, std::span<const std::size_t> ids);
/// Element [i, ids[i]] of each row of a [n, c] tensor -> [n].
Tensor pick(const Tensor& a, std::span<const std::size_t> ids);

Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);

/// Full reductions to shape {1}.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Sum over the last dimension -> [rows, 1].
Tensor row_sum(const Tensor& a);
/// Each row divided by its L2 norm.
Tensor l2_normalize(const Tensor& a);

enum class OpKind {
  MatMul,
  Add,
  Sub,
  Mul,
  Tanh,
  Sigmoid,
  Relu,
  Softplus,
  Square,
  Concat,
  Slice,
  Embedding,
  Pick,
  Softmax,
  LogSoftmax,
  Sum,
  Mean,
  RowSum,
  L2Normalize,
};

std::string_view op_name(OpKind kind);
std::span<const OpKind> all_op_kinds();

/// Extra arguments for kinds that take non-tensor operands.
struct OpArgs {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<std::size_t> ids;
};

/// Uniform dispatcher over every op kind.
Tensor forward_op(OpKind kind, std::span<const Tensor> inputs, const OpArgs& args = {});

}  // namespace xgen
