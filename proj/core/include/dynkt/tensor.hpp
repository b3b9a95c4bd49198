#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynkt {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Raised when operand shapes do not conform for an op.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised on misuse of the recording tape (stale graph, double backward).
class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a computation produces non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Graph;

namespace detail {

struct TensorData {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool leaf = true;
  std::uint64_t graph_id = 0;
  std::uint64_t graph_generation = 0;

  void accumulate(std::span<const double> g);
  std::vector<double>& grad_buffer();
};

}  // namespace detail

/// Dense row-major float64 array with an optional gradient buffer.
///
/// A Tensor is a shared handle: copies alias the same storage. Values are
/// treated as immutable once an op has produced them; parameters are mutated
/// only through `mutable_values()` between forward passes.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool is_leaf() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Copy of the values with no autograd history.
  Tensor detach() const;

  bool same_storage(const Tensor& other) const { return data_ == other.data_; }

  // Internal plumbing for op implementations.
  explicit Tensor(std::shared_ptr<detail::TensorData> data) : data_(std::move(data)) {}
  const std::shared_ptr<detail::TensorData>& data() const { return data_; }

 private:
  std::shared_ptr<detail::TensorData> data_;
};

/// Tape of recorded operations for one forward pass.
///
/// Ops record onto the graph installed by the innermost live `GraphScope` on
/// the current thread, and only when at least one operand requires grad.
/// Recording order is a topological order, so backward walks it in reverse.
class Graph {
 public:
  using BackwardFn = std::function<void(std::span<const double> output_grad)>;

  Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Propagates d(loss)/d(x) into every reachable tensor that requires grad.
  /// Leaf gradients accumulate; call `Tensor::zero_grad` between steps.
  void backward(const Tensor& loss);

  /// Drops recorded nodes and starts a new generation; tensors recorded
  /// before the reset become stale.
  void reset();

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  void record(const Tensor& output, BackwardFn fn);
  std::uint64_t id() const { return id_; }
  std::uint64_t generation() const { return generation_; }

  static Graph* active();

 private:
  friend class GraphScope;

  struct Node {
    std::shared_ptr<detail::TensorData> output;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::uint64_t id_;
  std::uint64_t generation_ = 1;
  bool consumed_ = false;
};

/// Installs a graph as the active recording target for the current thread.
class GraphScope {
 public:
  explicit GraphScope(Graph& graph);
  ~GraphScope();
  GraphScope(const GraphScope&) = delete;
  GraphScope& operator=(const GraphScope&) = delete;

 private:
  Graph* previous_;
};

/// Suspends recording on the current thread for its lifetime.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Graph* previous_;
};

}  // namespace dynkt
