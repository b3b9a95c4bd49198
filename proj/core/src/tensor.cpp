#include "dynkt/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>

namespace dynkt {

namespace {

thread_local Graph* g_active_graph = nullptr;
std::atomic<std::uint64_t> g_next_graph_id{1};

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {

std::vector<double>& TensorData::grad_buffer() {
  if (grad.empty()) grad.assign(values.size(), 0.0);
  return grad;
}

void TensorData::accumulate(std::span<const double> g) {
  auto& buf = grad_buffer();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_to_string(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_to_string(shape) + " does not match " + std::to_string(values.size()) +
                     " values");
  }
  auto data = std::make_shared<detail::TensorData>();
  data->shape = std::move(shape);
  data->values = std::move(values);
  data->requires_grad = requires_grad;
  return Tensor(std::move(data));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return data_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= data_->shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(data_->shape));
  }
  return data_->shape[axis];
}

std::size_t Tensor::numel() const { return data_->values.size(); }

std::span<const double> Tensor::values() const { return data_->values; }

std::span<double> Tensor::mutable_values() { return data_->values; }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_to_string(shape()));
  return data_->values[0];
}

bool Tensor::requires_grad() const { return data_->requires_grad; }

void Tensor::set_requires_grad(bool flag) { data_->requires_grad = flag; }

bool Tensor::is_leaf() const { return data_->leaf; }

bool Tensor::has_grad() const { return !data_->grad.empty(); }

std::span<const double> Tensor::grad() const { return data_->grad; }

std::span<double> Tensor::mutable_grad() { return data_->grad_buffer(); }

void Tensor::zero_grad() {
  if (!data_->grad.empty()) std::fill(data_->grad.begin(), data_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from(data_->shape, data_->values, false); }

Graph::Graph() : id_(g_next_graph_id.fetch_add(1)) {}

Graph* Graph::active() { return g_active_graph; }

void Graph::record(const Tensor& output, BackwardFn fn) {
  if (consumed_) throw GraphError("recording onto a graph that already ran backward; call reset() first");
  auto& data = *output.data();
  data.requires_grad = true;
  data.leaf = false;
  data.graph_id = id_;
  data.graph_generation = generation_;
  nodes_.push_back(Node{output.data(), std::move(fn)});
}

void Graph::reset() {
  nodes_.clear();
  ++generation_;
  consumed_ = false;
}

void Graph::backward(const Tensor& loss) {
  if (!loss.defined()) throw GraphError("backward on an undefined tensor");
  if (loss.rank() != 0) throw ShapeError("backward requires a scalar loss, got shape " + shape_to_string(loss.shape()));
  const auto& data = *loss.data();
  if (data.leaf || data.graph_id != id_) throw GraphError("loss was not produced on this graph");
  if (data.graph_generation != generation_) throw GraphError("stale graph: loss was recorded before the last reset");
  if (consumed_) throw GraphError("backward already ran on this graph; re-record the forward pass");
  consumed_ = true;

  loss.data()->grad.assign(1, 1.0);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    const auto& g = it->output->grad;
    if (g.empty()) continue;  // not reachable from the loss
    it->backward(g);
  }
}

GraphScope::GraphScope(Graph& graph) : previous_(g_active_graph) { g_active_graph = &graph; }

GraphScope::~GraphScope() { g_active_graph = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_graph) { g_active_graph = nullptr; }

NoGradScope::~NoGradScope() { g_active_graph = previous_; }

}  // namespace dynkt
