#include "dynkt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dynkt::ops {

namespace {

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (Graph::active() == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

void check_finite([[maybe_unused]] const char* op, [[maybe_unused]] const Tensor& out) {
#ifndef NDEBUG
  for (double v : out.values()) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + " produced a non-finite value");
  }
#endif
}

void require_defined(const char* op, const Tensor& t) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined operand");
}

std::vector<double>& grad_of(const Tensor& t) { return t.data()->grad_buffer(); }

// Number of elements of `b` broadcast against `a`, or throws.
std::size_t broadcast_inner(const char* op, const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  bool ok = sb.size() <= sa.size() && std::equal(sb.begin(), sb.end(), sa.end() - static_cast<std::ptrdiff_t>(sb.size()));
  if (!ok) {
    throw ShapeError(std::string(op) + ": shapes " + shape_to_string(sa) + " and " + shape_to_string(sb) +
                     " do not conform");
  }
  return b.numel();
}

template <typename Forward, typename GradA, typename GradB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Forward f, GradA da, GradB db) {
  require_defined(op, a);
  require_defined(op, b);
  const std::size_t inner = broadcast_inner(op, a, b);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i % inner]);
  Tensor result = Tensor::from(a.shape(), std::move(out));
  check_finite(op, result);
  if (should_record({&a, &b})) {
    Graph::active()->record(result, [a, b, inner, da, db](std::span<const double> g) {
      const auto av = a.values();
      const auto bv = b.values();
      if (a.requires_grad()) {
        auto& ga = grad_of(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * da(av[i], bv[i % inner]);
      }
      if (b.requires_grad()) {
        auto& gb = grad_of(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % inner] += g[i] * db(av[i], bv[i % inner]);
      }
    });
  }
  return result;
}

// `deriv` receives (input, output) so activations can reuse their result.
template <typename Forward, typename Deriv>
Tensor unary(const char* op, const Tensor& a, Forward f, Deriv deriv) {
  require_defined(op, a);
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  Tensor result = Tensor::from(a.shape(), std::move(out));
  check_finite(op, result);
  if (should_record({&a})) {
    std::weak_ptr<detail::TensorData> self = result.data();
    Graph::active()->record(result, [a, self, deriv](std::span<const double> g) {
      if (!a.requires_grad()) return;
      const auto av = a.values();
      const auto out = self.lock();
      auto& ga = grad_of(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * deriv(av[i], out->values[i]);
    });
  }
  return result;
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const char* op, const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                     shape_to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: shapes " + shape_to_string(a.shape()) + " and " + shape_to_string(b.shape()) +
                     " do not conform");
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  Tensor result = Tensor::from({m, n}, std::move(out));
  check_finite("matmul", result);
  if (should_record({&a, &b})) {
    Graph::active()->record(result, [a, b, m, k, n](std::span<const double> g) {
      const auto av = a.values();
      const auto bv = b.values();
      if (a.requires_grad()) {
        auto& ga = grad_of(a);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            const double* brow = bv.data() + p * n;
            const double* grow = g.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            ga[i * k + p] += acc;
          }
        }
      }
      if (b.requires_grad()) {
        auto& gb = grad_of(b);
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = g.data() + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            double* gbrow = gb.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
          }
        }
      }
    });
  }
  return result;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  for (const auto& p : parts) require_defined("concat", p);
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) {
    throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) {
      throw ShapeError("concat: shapes " + shape_to_string(first) + " and " + shape_to_string(s) +
                       " differ off axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit split = split_axis("concat", out_shape, axis);
  std::vector<std::size_t> chunk(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) chunk[i] = parts[i].dim(axis) * split.inner;
  const std::size_t row = split.extent * split.inner;

  std::vector<double> out(shape_numel(out_shape));
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::size_t offset = o * row;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto v = parts[i].values();
      std::copy_n(v.data() + o * chunk[i], chunk[i], out.data() + offset);
      offset += chunk[i];
    }
  }
  Tensor result = Tensor::from(out_shape, std::move(out));

  bool record = false;
  if (Graph::active() != nullptr) {
    record = std::any_of(parts.begin(), parts.end(), [](const Tensor& t) { return t.requires_grad(); });
  }
  if (record) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    Graph::active()->record(result, [inputs, chunk, row, outer = split.outer](std::span<const double> g) {
      std::size_t base = 0;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].requires_grad()) {
          auto& gi = grad_of(inputs[i]);
          for (std::size_t o = 0; o < outer; ++o) {
            const double* src = g.data() + o * row + base;
            double* dst = gi.data() + o * chunk[i];
            for (std::size_t j = 0; j < chunk[i]; ++j) dst[j] += src[j];
          }
        }
        base += chunk[i];
      }
    });
  }
  return result;
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
  require_defined("slice", a);
  const AxisSplit split = split_axis("slice", a.shape(), axis);
  if (length == 0 || start + length > split.extent) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") out of bounds for axis " + std::to_string(axis) + " of shape " + shape_to_string(a.shape()));
  }
  Shape out_shape = a.shape();
  out_shape[axis] = length;
  const std::size_t src_row = split.extent * split.inner;
  const std::size_t dst_row = length * split.inner;
  const std::size_t src_off = start * split.inner;
  const auto av = a.values();
  std::vector<double> out(split.outer * dst_row);
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::copy_n(av.data() + o * src_row + src_off, dst_row, out.data() + o * dst_row);
  }
  Tensor result = Tensor::from(out_shape, std::move(out));
  if (should_record({&a})) {
    Graph::active()->record(result, [a, outer = split.outer, src_row, dst_row, src_off](std::span<const double> g) {
      auto& ga = grad_of(a);
      for (std::size_t o = 0; o < outer; ++o) {
        double* dst = ga.data() + o * src_row + src_off;
        const double* src = g.data() + o * dst_row;
        for (std::size_t j = 0; j < dst_row; ++j) dst[j] += src[j];
      }
    });
  }
  return result;
}

Tensor reshape(const Tensor& a, Shape shape) {
  require_defined("reshape", a);
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + shape_to_string(a.shape()) + " as " + shape_to_string(shape));
  }
  Tensor result = Tensor::from(std::move(shape), std::vector<double>(a.values().begin(), a.values().end()));
  if (should_record({&a})) {
    Graph::active()->record(result, [a](std::span<const double> g) {
      auto& ga = grad_of(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    });
  }
  return result;
}

Tensor sum(const Tensor& a) {
  require_defined("sum", a);
  double total = 0.0;
  for (double v : a.values()) total += v;
  Tensor result = Tensor::scalar(total);
  check_finite("sum", result);
  if (should_record({&a})) {
    Graph::active()->record(result, [a](std::span<const double> g) {
      auto& ga = grad_of(a);
      for (double& v : ga) v += g[0];
    });
  }
  return result;
}

Tensor mean(const Tensor& a) {
  require_defined("mean", a);
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor sum(const Tensor& a, std::size_t axis) {
  require_defined("sum", a);
  const AxisSplit split = split_axis("sum", a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  const auto av = a.values();
  std::vector<double> out(split.outer * split.inner, 0.0);
  for (std::size_t o = 0; o < split.outer; ++o) {
    for (std::size_t e = 0; e < split.extent; ++e) {
      const double* src = av.data() + (o * split.extent + e) * split.inner;
      double* dst = out.data() + o * split.inner;
      for (std::size_t i = 0; i < split.inner; ++i) dst[i] += src[i];
    }
  }
  Tensor result = Tensor::from(out_shape, std::move(out));
  check_finite("sum", result);
  if (should_record({&a})) {
    Graph::active()->record(result, [a, split](std::span<const double> g) {
      auto& ga = grad_of(a);
      for (std::size_t o = 0; o < split.outer; ++o) {
        for (std::size_t e = 0; e < split.extent; ++e) {
          double* dst = ga.data() + (o * split.extent + e) * split.inner;
          const double* src = g.data() + o * split.inner;
          for (std::size_t i = 0; i < split.inner; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return result;
}

Tensor mean(const Tensor& a, std::size_t axis) {
  require_defined("mean", a);
  const std::size_t extent = split_axis("mean", a.shape(), axis).extent;
  return scale(sum(a, axis), 1.0 / static_cast<double>(extent));
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

}  // namespace dynkt::ops
