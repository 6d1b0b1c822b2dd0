#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ggcn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

struct TensorData {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // same length as values when requires_grad
  bool requires_grad = false;
};

// Shared-storage handle. Copies alias the same values/grad buffers, so a
// parameter can appear in many recorded operations and accumulate gradient
// in one place.
class Tensor {
 public:
  Tensor() : data_(std::make_shared<TensorData>()) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return from_values(std::move(shape), {}, requires_grad, true);
  }

  static Tensor full(Shape shape, double value, bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.values().begin(), t.values().end(), value);
    return t;
  }

  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false, bool allow_empty = false) {
    std::size_t n = shape_numel(shape);
    if (!allow_empty && values.size() != n) {
      throw std::runtime_error("tensor: " + std::to_string(values.size()) +
                               " values do not fill shape " + shape_str(shape));
    }
    Tensor t;
    t.data_->shape = std::move(shape);
    t.data_->values = allow_empty ? std::vector<double>(n, 0.0) : std::move(values);
    t.data_->requires_grad = requires_grad;
    if (requires_grad) t.data_->grad.assign(n, 0.0);
    return t;
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return from_values({1}, {v}, requires_grad);
  }

  static Tensor vector(std::vector<double> v, bool requires_grad = false) {
    Shape s{v.size()};
    return from_values(std::move(s), std::move(v), requires_grad);
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v,
                       bool requires_grad = false) {
    return from_values({rows, cols}, std::move(v), requires_grad);
  }

  const Shape& shape() const { return data_->shape; }
  std::size_t rank() const { return data_->shape.size(); }
  std::size_t dim(std::size_t i) const { return data_->shape[i]; }
  std::size_t numel() const { return data_->values.size(); }

  // Accessors are const because the handle shares storage; mutating the
  // buffer through any copy of the handle is intended.
  std::vector<double>& values() const { return data_->values; }
  double value(std::size_t i = 0) const { return data_->values[i]; }
  double at(std::size_t r, std::size_t c) const {
    return data_->values[r * data_->shape[1] + c];
  }

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool rg) const {
    data_->requires_grad = rg;
    if (rg) {
      data_->grad.assign(data_->values.size(), 0.0);
    } else {
      data_->grad.clear();
    }
  }

  std::vector<double>& grad() const {
    if (!data_->requires_grad) throw std::runtime_error("tensor: no gradient slot");
    return data_->grad;
  }
  void zero_grad() const {
    if (data_->requires_grad) std::fill(data_->grad.begin(), data_->grad.end(), 0.0);
  }

  const TensorData* id() const { return data_.get(); }

 private:
  std::shared_ptr<TensorData> data_;
};

// Recorded forward computation. Nodes are appended in execution order, so
// iterating in reverse visits every node after all of its consumers.
class Tape {
 public:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() { return active_slot(); }

  void record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward) {
    outputs_.insert(output.id());
    nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward)});
  }

  // Runs every recorded backward rule in reverse order, seeding the loss
  // gradient with 1. A tape can be consumed exactly once.
  void backward(const Tensor& loss) {
    if (consumed_) {
      throw std::runtime_error("tape: backward already ran; record a new tape");
    }
    if (loss.numel() != 1) {
      throw std::runtime_error("tape: backward requires a scalar loss, got shape " +
                               shape_str(loss.shape()));
    }
    if (outputs_.find(loss.id()) == outputs_.end()) {
      throw std::runtime_error("tape: loss was not recorded on this tape");
    }
    consumed_ = true;
    loss.grad()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      it->backward();
    }
  }

  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

  // Smallest distance to a ReLU/max-pool switching point seen while
  // recording. Gradient checks use it to detect perturbations that would
  // step across a kink.
  double kink_margin() const { return margin_; }
  void note_margin(double m) { margin_ = std::min(margin_, m); }

 private:
  friend class TapeScope;
  static Tape*& active_slot() {
    thread_local Tape* t = nullptr;
    return t;
  }

  std::vector<Node> nodes_;
  std::unordered_set<const TensorData*> outputs_;
  bool consumed_ = false;
  double margin_ = std::numeric_limits<double>::infinity();
};

class TapeScope {
 public:
  explicit TapeScope(Tape& t) : prev_(Tape::active_slot()) { Tape::active_slot() = &t; }
  ~TapeScope() { Tape::active_slot() = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

namespace detail {

inline bool tracked(std::initializer_list<const Tensor*> inputs) {
  if (Tape::active() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

inline void check_finite(const Tensor& t, const char* op) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string(op) + ": produced a non-finite value");
    }
  }
}

[[noreturn]] inline void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::runtime_error(std::string(op) + ": shape mismatch " + shape_str(a) +
                           " vs " + shape_str(b));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitive operations. Each computes its value eagerly and, when a tape is
// active and any input carries gradients, records a backward rule that
// accumulates into the inputs' grad buffers.
// ---------------------------------------------------------------------------

// matmul accepts [m,k]x[k,n] -> [m,n] and the vector forms [k]x[k,n] -> [n]
// and [m,k]x[k] -> [m].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  std::size_t m, k, n;
  Shape out_shape;
  if (a.rank() == 2 && b.rank() == 2) {
    m = a.dim(0); k = a.dim(1); n = b.dim(1);
    if (b.dim(0) != k) detail::shape_error("matmul", a.shape(), b.shape());
    out_shape = {m, n};
  } else if (a.rank() == 1 && b.rank() == 2) {
    m = 1; k = a.dim(0); n = b.dim(1);
    if (b.dim(0) != k) detail::shape_error("matmul", a.shape(), b.shape());
    out_shape = {n};
  } else if (a.rank() == 2 && b.rank() == 1) {
    m = a.dim(0); k = a.dim(1); n = 1;
    if (b.dim(0) != k) detail::shape_error("matmul", a.shape(), b.shape());
    out_shape = {m};
  } else {
    detail::shape_error("matmul", a.shape(), b.shape());
  }

  Tensor out = Tensor::zeros(out_shape, detail::tracked({&a, &b}));
  {
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t kk = 0; kk < k; ++kk) {
        double aik = av[i * k + kk];
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
          ov[i * n + j] += aik * bv[kk * n + j];
        }
      }
    }
  }
  detail::check_finite(out, "matmul");
  if (out.requires_grad()) {
    Tape::active()->record({a, b}, out, [a, b, out, m, k, n]() {
      const auto& og = out.grad();
      if (a.requires_grad()) {
        auto& ag = a.grad();
        const auto& bv = b.values();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t kk = 0; kk < k; ++kk) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += og[i * n + j] * bv[kk * n + j];
            ag[i * k + kk] += acc;
          }
      }
      if (b.requires_grad()) {
        auto& bg = b.grad();
        const auto& av = a.values();
        for (std::size_t kk = 0; kk < k; ++kk)
          for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += av[i * k + kk] * og[i * n + j];
            bg[kk * n + j] += acc;
          }
      }
    });
  }
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) detail::shape_error("add", a.shape(), b.shape());
  Tensor out = Tensor::zeros(a.shape(), detail::tracked({&a, &b}));
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  detail::check_finite(out, "add");
  if (out.requires_grad()) {
    Tape::active()->record({a, b}, out, [a, b, out]() {
      const auto& og = out.grad();
      if (a.requires_grad()) {
        auto& ag = a.grad();
        for (std::size_t i = 0; i < og.size(); ++i) ag[i] += og[i];
      }
      if (b.requires_grad()) {
        auto& bg = b.grad();
        for (std::size_t i = 0; i < og.size(); ++i) bg[i] += og[i];
      }
    });
  }
  return out;
}

inline Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) detail::shape_error("elementwise_mul", a.shape(), b.shape());
  Tensor out = Tensor::zeros(a.shape(), detail::tracked({&a, &b}));
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  detail::check_finite(out, "elementwise_mul");
  if (out.requires_grad()) {
    Tape::active()->record({a, b}, out, [a, b, out]() {
      const auto& og = out.grad();
      const auto& av2 = a.values();
      const auto& bv2 = b.values();
      if (a.requires_grad()) {
        auto& ag = a.grad();
        for (std::size_t i = 0; i < og.size(); ++i) ag[i] += og[i] * bv2[i];
      }
      if (b.requires_grad()) {
        auto& bg = b.grad();
        for (std::size_t i = 0; i < og.size(); ++i) bg[i] += og[i] * av2[i];
      }
    });
  }
  return out;
}

inline Tensor sigmoid(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape(), detail::tracked({&x}));
  const auto& xv = x.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    double v = xv[i];
    ov[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                     : std::exp(v) / (1.0 + std::exp(v));
  }
  detail::check_finite(out, "sigmoid");
  if (out.requires_grad()) {
    Tape::active()->record({x}, out, [x, out]() {
      if (!x.requires_grad()) return;
      auto& xg = x.grad();
      const auto& og = out.grad();
      const auto& ov2 = out.values();
      for (std::size_t i = 0; i < og.size(); ++i) xg[i] += og[i] * ov2[i] * (1.0 - ov2[i]);
    });
  }
  return out;
}

inline Tensor tanh(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape(), detail::tracked({&x}));
  const auto& xv = x.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::tanh(xv[i]);
  detail::check_finite(out, "tanh");
  if (out.requires_grad()) {
    Tape::active()->record({x}, out, [x, out]() {
      if (!x.requires_grad()) return;
      auto& xg = x.grad();
      const auto& og = out.grad();
      const auto& ov2 = out.values();
      for (std::size_t i = 0; i < og.size(); ++i) xg[i] += og[i] * (1.0 - ov2[i] * ov2[i]);
    });
  }
  return out;
}

inline Tensor relu(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape(), detail::tracked({&x}));
  const auto& xv = x.values();
  auto& ov = out.values();
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    ov[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    margin = std::min(margin, std::abs(xv[i]));
  }
  if (Tape::active()) Tape::active()->note_margin(margin);
  detail::check_finite(out, "relu");
  if (out.requires_grad()) {
    Tape::active()->record({x}, out, [x, out]() {
      if (!x.requires_grad()) return;
      auto& xg = x.grad();
      const auto& og = out.grad();
      const auto& xv2 = x.values();
      for (std::size_t i = 0; i < og.size(); ++i) {
        if (xv2[i] > 0.0) xg[i] += og[i];
      }
    });
  }
  return out;
}

inline Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::runtime_error("concat: no inputs");
  std::size_t total = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    if (p.rank() != 1) {
      throw std::runtime_error("concat: expects vectors, got shape " + shape_str(p.shape()));
    }
    total += p.numel();
    rg = rg || detail::tracked({&p});
  }
  Tensor out = Tensor::zeros({total}, rg);
  auto& ov = out.values();
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    std::copy(p.values().begin(), p.values().end(), ov.begin() + off);
    off += p.numel();
  }
  if (out.requires_grad()) {
    Tape::active()->record(parts, out, [parts, out]() {
      const auto& og = out.grad();
      std::size_t off2 = 0;
      for (const Tensor& p : parts) {
        if (p.requires_grad()) {
          auto& pg = p.grad();
          for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += og[off2 + i];
        }
        off2 += p.numel();
      }
    });
  }
  return out;
}

inline Tensor mean_rows(const Tensor& x) {
  if (x.rank() != 2) {
    throw std::runtime_error("mean_rows: expects a matrix, got shape " + shape_str(x.shape()));
  }
  std::size_t n = x.dim(0), d = x.dim(1);
  Tensor out = Tensor::zeros({d}, detail::tracked({&x}));
  const auto& xv = x.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) ov[j] += xv[i * d + j];
  for (std::size_t j = 0; j < d; ++j) ov[j] /= static_cast<double>(n);
  detail::check_finite(out, "mean_rows");
  if (out.requires_grad()) {
    Tape::active()->record({x}, out, [x, out, n, d]() {
      if (!x.requires_grad()) return;
      auto& xg = x.grad();
      const auto& og = out.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) xg[i * d + j] += og[j] / static_cast<double>(n);
    });
  }
  return out;
}

inline Tensor sum_rows(const Tensor& x) {
  if (x.rank() != 2) {
    throw std::runtime_error("sum_rows: expects a matrix, got shape " + shape_str(x.shape()));
  }
  std::size_t n = x.dim(0), d = x.dim(1);
  Tensor out = Tensor::zeros({d}, detail::tracked({&x}));
  const auto& xv = x.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) ov[j] += xv[i * d + j];
  detail::check_finite(out, "sum_rows");
  if (out.requires_grad()) {
    Tape::active()->record({x}, out, [x, out, n, d]() {
      if (!x.requires_grad()) return;
      auto& xg = x.grad();
      const auto& og = out.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) xg[i * d + j] += og[j];
    });
  }
  return out;
}

// Multiply by a scalar tensor (shape [1]); gradient flows to both sides.
inline Tensor scale(const Tensor& x, const Tensor& c) {
  if (c.numel() != 1) detail::shape_error("scale", x.shape(), c.shape());
  Tensor out = Tensor::zeros(x.shape(), detail::tracked({&x, &c}));
  const double cv = c.value();
  const auto& xv = x.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] * cv;
  detail::check_finite(out, "scale");
  if (out.requires_grad()) {
    Tape::active()->record({x, c}, out, [x, c, out, cv]() {
      const auto& og = out.grad();
      if (x.requires_grad()) {
        auto& xg = x.grad();
        for (std::size_t i = 0; i < og.size(); ++i) xg[i] += og[i] * cv;
      }
      if (c.requires_grad()) {
        const auto& xv2 = x.values();
        double acc = 0.0;
        for (std::size_t i = 0; i < og.size(); ++i) acc += og[i] * xv2[i];
        c.grad()[0] += acc;
      }
    });
  }
  return out;
}

inline Tensor scale(const Tensor& x, double c) { return scale(x, Tensor::scalar(c)); }

// Numerically safe softmax over a vector: subtracts the max before
// exponentiating so arbitrarily large inputs cannot overflow.
inline Tensor softmax(const Tensor& x) {
  if (x.rank() != 1 || x.numel() == 0) {
    throw std::runtime_error("softmax: expects a non-empty vector, got shape " +
                             shape_str(x.shape()));
  }
  Tensor out = Tensor::zeros(x.shape(), detail::tracked({&x}));
  const auto& xv = x.values();
  auto& ov = out.values();
  double mx = *std::max_element(xv.begin(), xv.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    ov[i] = std::exp(xv[i] - mx);
    sum += ov[i];
  }
  for (double& v : ov) v /= sum;
  detail::check_finite(out, "softmax");
  if (out.requires_grad()) {
    Tape::active()->record({x}, out, [x, out]() {
      if (!x.requires_grad()) return;
      auto& xg = x.grad();
      const auto& og = out.grad();
      const auto& ov2 = out.values();
      double dot = 0.0;
      for (std::size_t i = 0; i < og.size(); ++i) dot += og[i] * ov2[i];
      for (std::size_t i = 0; i < og.size(); ++i) xg[i] += ov2[i] * (og[i] - dot);
    });
  }
  return out;
}

// Component-wise max over the unmasked rows. Gradient flows only to the
// first maximal row per component.
inline Tensor masked_max_pool(const Tensor& rows, const std::vector<bool>& mask) {
  if (rows.rank() != 2) {
    throw std::runtime_error("masked_max_pool: expects a matrix, got shape " +
                             shape_str(rows.shape()));
  }
  std::size_t n = rows.dim(0), d = rows.dim(1);
  if (mask.size() != n) {
    throw std::runtime_error("masked_max_pool: mask length " + std::to_string(mask.size()) +
                             " vs " + std::to_string(n) + " rows");
  }
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    throw std::runtime_error("masked_max_pool: all rows masked out");
  }
  Tensor out = Tensor::zeros({d}, detail::tracked({&rows}));
  const auto& rv = rows.values();
  auto& ov = out.values();
  std::vector<std::size_t> arg(d, 0);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < d; ++j) {
    double best = -std::numeric_limits<double>::infinity();
    double second = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      double v = rv[i * d + j];
      if (v > best) {
        second = best;
        best = v;
        best_i = i;
      } else {
        second = std::max(second, v);
      }
    }
    ov[j] = best;
    arg[j] = best_i;
    // A tie among exact zeros is a clamped-ReLU plateau, not a switching
    // point: the pooled value cannot move under a small perturbation.
    if (std::isfinite(second) && !(best == 0.0 && second == 0.0)) {
      margin = std::min(margin, best - second);
    }
  }
  if (Tape::active()) Tape::active()->note_margin(margin);
  detail::check_finite(out, "masked_max_pool");
  if (out.requires_grad()) {
    Tape::active()->record({rows}, out, [rows, out, arg, d]() {
      if (!rows.requires_grad()) return;
      auto& rg = rows.grad();
      const auto& og = out.grad();
      for (std::size_t j = 0; j < d; ++j) rg[arg[j] * d + j] += og[j];
    });
  }
  return out;
}

inline Tensor max_pool_rows(const Tensor& rows) {
  return masked_max_pool(rows, std::vector<bool>(rows.dim(0), true));
}

inline Tensor dot(const Tensor& u, const Tensor& v) {
  if (u.rank() != 1 || u.shape() != v.shape()) detail::shape_error("dot", u.shape(), v.shape());
  Tensor out = Tensor::zeros({1}, detail::tracked({&u, &v}));
  const auto& uv = u.values();
  const auto& vv = v.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < uv.size(); ++i) acc += uv[i] * vv[i];
  out.values()[0] = acc;
  detail::check_finite(out, "dot");
  if (out.requires_grad()) {
    Tape::active()->record({u, v}, out, [u, v, out]() {
      double g = out.grad()[0];
      if (u.requires_grad()) {
        auto& ug = u.grad();
        const auto& vv2 = v.values();
        for (std::size_t i = 0; i < ug.size(); ++i) ug[i] += g * vv2[i];
      }
      if (v.requires_grad()) {
        auto& vg = v.grad();
        const auto& uv2 = u.values();
        for (std::size_t i = 0; i < vg.size(); ++i) vg[i] += g * uv2[i];
      }
    });
  }
  return out;
}

// cosine(u, v) = dot(u, v) / (|u||v| + eps). The epsilon keeps the ratio
// defined when a pooled activation collapses to the zero vector.
inline constexpr double kCosineEps = 1e-8;

inline Tensor cosine(const Tensor& u, const Tensor& v) {
  if (u.rank() != 1 || u.shape() != v.shape() || u.numel() == 0) {
    detail::shape_error("cosine", u.shape(), v.shape());
  }
  Tensor out = Tensor::zeros({1}, detail::tracked({&u, &v}));
  const auto& uv = u.values();
  const auto& vv = v.values();
  double s = 0.0, nu2 = 0.0, nv2 = 0.0;
  for (std::size_t i = 0; i < uv.size(); ++i) {
    s += uv[i] * vv[i];
    nu2 += uv[i] * uv[i];
    nv2 += vv[i] * vv[i];
  }
  double nu = std::sqrt(nu2), nv = std::sqrt(nv2);
  double den = nu * nv + kCosineEps;
  double c = s / den;
  out.values()[0] = c;
  detail::check_finite(out, "cosine");
  if (out.requires_grad()) {
    Tape::active()->record({u, v}, out, [u, v, out, nu, nv, den, c]() {
      double g = out.grad()[0];
      double safe_nu = nu > 0.0 ? nu : 1.0;
      double safe_nv = nv > 0.0 ? nv : 1.0;
      if (u.requires_grad()) {
        auto& ug = u.grad();
        const auto& uv2 = u.values();
        const auto& vv2 = v.values();
        for (std::size_t i = 0; i < ug.size(); ++i) {
          ug[i] += g * (vv2[i] / den - c * nv * uv2[i] / (safe_nu * den));
        }
      }
      if (v.requires_grad()) {
        auto& vg = v.grad();
        const auto& uv2 = u.values();
        const auto& vv2 = v.values();
        for (std::size_t i = 0; i < vg.size(); ++i) {
          vg[i] += g * (uv2[i] / den - c * nu * vv2[i] / (safe_nv * den));
        }
      }
    });
  }
  return out;
}

inline Tensor select_row(const Tensor& rows, std::size_t i) {
  if (rows.rank() != 2 || i >= rows.dim(0)) {
    throw std::runtime_error("select_row: row " + std::to_string(i) + " out of range for " +
                             shape_str(rows.shape()));
  }
  std::size_t d = rows.dim(1);
  Tensor out = Tensor::zeros({d}, detail::tracked({&rows}));
  const auto& rv = rows.values();
  std::copy(rv.begin() + i * d, rv.begin() + (i + 1) * d, out.values().begin());
  if (out.requires_grad()) {
    Tape::active()->record({rows}, out, [rows, out, i, d]() {
      if (!rows.requires_grad()) return;
      auto& rg = rows.grad();
      const auto& og = out.grad();
      for (std::size_t j = 0; j < d; ++j) rg[i * d + j] += og[j];
    });
  }
  return out;
}

inline Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw std::runtime_error("stack_rows: no inputs");
  std::size_t d = rows[0].numel();
  bool rg = false;
  for (const Tensor& r : rows) {
    if (r.rank() != 1 || r.numel() != d) detail::shape_error("stack_rows", rows[0].shape(), r.shape());
    rg = rg || detail::tracked({&r});
  }
  Tensor out = Tensor::zeros({rows.size(), d}, rg);
  auto& ov = out.values();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].values().begin(), rows[i].values().end(), ov.begin() + i * d);
  }
  if (out.requires_grad()) {
    Tape::active()->record(rows, out, [rows, out, d]() {
      const auto& og = out.grad();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].requires_grad()) continue;
        auto& rg2 = rows[i].grad();
        for (std::size_t j = 0; j < d; ++j) rg2[j] += og[i * d + j];
      }
    });
  }
  return out;
}

// out[i,j] = rows[i,j] * weights[j]; broadcasts a vector across every row.
inline Tensor row_broadcast_mul(const Tensor& rows, const Tensor& weights) {
  if (rows.rank() != 2 || weights.rank() != 1 || rows.dim(1) != weights.dim(0)) {
    detail::shape_error("row_broadcast_mul", rows.shape(), weights.shape());
  }
  std::size_t n = rows.dim(0), d = rows.dim(1);
  Tensor out = Tensor::zeros({n, d}, detail::tracked({&rows, &weights}));
  const auto& rv = rows.values();
  const auto& wv = weights.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) ov[i * d + j] = rv[i * d + j] * wv[j];
  detail::check_finite(out, "row_broadcast_mul");
  if (out.requires_grad()) {
    Tape::active()->record({rows, weights}, out, [rows, weights, out, n, d]() {
      const auto& og = out.grad();
      if (rows.requires_grad()) {
        auto& rg = rows.grad();
        const auto& wv2 = weights.values();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) rg[i * d + j] += og[i * d + j] * wv2[j];
      }
      if (weights.requires_grad()) {
        auto& wg = weights.grad();
        const auto& rv2 = rows.values();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) wg[j] += og[i * d + j] * rv2[i * d + j];
      }
    });
  }
  return out;
}

// out row i = mean of x rows listed in groups[i]. Used for neighborhood
// averaging over a fixed graph; the graph itself carries no gradient.
inline Tensor group_mean(const Tensor& x, const std::vector<std::vector<int>>& groups) {
  if (x.rank() != 2) {
    throw std::runtime_error("group_mean: expects a matrix, got shape " + shape_str(x.shape()));
  }
  std::size_t n = groups.size(), d = x.dim(1);
  Tensor out = Tensor::zeros({n, d}, detail::tracked({&x}));
  const auto& xv = x.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < n; ++i) {
    if (groups[i].empty()) throw std::runtime_error("group_mean: empty group");
    for (int j : groups[i]) {
      if (j < 0 || static_cast<std::size_t>(j) >= x.dim(0)) {
        throw std::runtime_error("group_mean: index out of range");
      }
      for (std::size_t c = 0; c < d; ++c) ov[i * d + c] += xv[static_cast<std::size_t>(j) * d + c];
    }
    double inv = 1.0 / static_cast<double>(groups[i].size());
    for (std::size_t c = 0; c < d; ++c) ov[i * d + c] *= inv;
  }
  detail::check_finite(out, "group_mean");
  if (out.requires_grad()) {
    Tape::active()->record({x}, out, [x, out, groups, d]() {
      if (!x.requires_grad()) return;
      auto& xg = x.grad();
      const auto& og = out.grad();
      for (std::size_t i = 0; i < groups.size(); ++i) {
        double inv = 1.0 / static_cast<double>(groups[i].size());
        for (int j : groups[i])
          for (std::size_t c = 0; c < d; ++c)
            xg[static_cast<std::size_t>(j) * d + c] += og[i * d + c] * inv;
      }
    });
  }
  return out;
}

// Negative log-likelihood of class `target` under softmax(logits), computed
// through log-sum-exp so extreme logits stay finite.
inline Tensor cross_entropy(const Tensor& logits, std::size_t target) {
  if (logits.rank() != 1 || target >= logits.numel()) {
    throw std::runtime_error("cross_entropy: target " + std::to_string(target) +
                             " out of range for shape " + shape_str(logits.shape()));
  }
  const auto& lv = logits.values();
  double mx = *std::max_element(lv.begin(), lv.end());
  double sum = 0.0;
  std::vector<double> probs(lv.size());
  for (std::size_t i = 0; i < lv.size(); ++i) {
    probs[i] = std::exp(lv[i] - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  double loss = std::log(sum) + mx - lv[target];
  Tensor out = Tensor::zeros({1}, detail::tracked({&logits}));
  out.values()[0] = loss;
  detail::check_finite(out, "cross_entropy");
  if (out.requires_grad()) {
    Tape::active()->record({logits}, out, [logits, out, probs, target]() {
      if (!logits.requires_grad()) return;
      auto& lg = logits.grad();
      double g = out.grad()[0];
      for (std::size_t i = 0; i < lg.size(); ++i) {
        lg[i] += g * (probs[i] - (i == target ? 1.0 : 0.0));
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generic dispatch over the primitive kinds.
// ---------------------------------------------------------------------------

enum class OpKind {
  Matmul,
  Add,
  ElementwiseMul,
  Sigmoid,
  Tanh,
  Relu,
  Concat,
  MeanRows,
  SumRows,
  Scale,
};

inline const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::Matmul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::ElementwiseMul: return "elementwise_mul";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::Concat: return "concat";
    case OpKind::MeanRows: return "mean_rows";
    case OpKind::SumRows: return "sum_rows";
    case OpKind::Scale: return "scale";
  }
  return "?";
}

inline Tensor forward_op(OpKind kind, const std::vector<Tensor>& inputs) {
  auto want = [&](std::size_t n) {
    if (inputs.size() != n) {
      throw std::runtime_error(std::string(op_kind_name(kind)) + ": expected " +
                               std::to_string(n) + " inputs, got " +
                               std::to_string(inputs.size()));
    }
  };
  switch (kind) {
    case OpKind::Matmul: want(2); return matmul(inputs[0], inputs[1]);
    case OpKind::Add: want(2); return add(inputs[0], inputs[1]);
    case OpKind::ElementwiseMul: want(2); return elementwise_mul(inputs[0], inputs[1]);
    case OpKind::Sigmoid: want(1); return sigmoid(inputs[0]);
    case OpKind::Tanh: want(1); return tanh(inputs[0]);
    case OpKind::Relu: want(1); return relu(inputs[0]);
    case OpKind::Concat: return concat(inputs);
    case OpKind::MeanRows: want(1); return mean_rows(inputs[0]);
    case OpKind::SumRows: want(1); return sum_rows(inputs[0]);
    case OpKind::Scale: want(2); return scale(inputs[0], inputs[1]);
  }
  throw std::runtime_error("forward_op: unknown kind");
}

}  // namespace ggcn
