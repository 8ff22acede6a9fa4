// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense tensors and a dynamic reverse-mode tape.
//
// Learnable parameters live in `Tensor`s owned by a ParamStore; everything
// computed from them inside one forward pass lives on a `Tape` as vector
// nodes addressed by `Var` handles. The tape is rebuilt for every forward
// pass. Backward accumulates into each parameter's `grad` buffer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "motif/errors.hpp"

namespace motif {

struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<double> data;
  std::vector<double> grad;  // empty when absent

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0) : dims(std::move(shape)) {
    std::size_t n = 1;
    for (auto d : dims) {
      if (d == 0) throw ShapeError("tensor dimensions must be positive");
      n *= d;
    }
    data.assign(n, fill);
  }

  static Tensor from_vector(std::vector<double> v) {
    Tensor t;
    t.dims = {v.size()};
    t.data = std::move(v);
    return t;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return dims.size(); }
  std::size_t rows() const { return dims.empty() ? 0 : dims[0]; }
  std::size_t cols() const { return dims.size() < 2 ? 1 : dims[1]; }

  bool has_grad() const { return !data.empty() && grad.size() == data.size(); }
  void zero_grad() { grad.assign(data.size(), 0.0); }
  void drop_grad() { grad.clear(); }

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  std::vector<double>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

namespace detail {

inline void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

inline double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// y[0:b] += A[row0 : row0+n, :]^T x  with A row-major [a x b].
inline void matvec_t(const Tensor& A, std::size_t row0, const double* x, std::size_t n, double* y) {
  const std::size_t b = A.cols();
  const double* base = A.data.data() + row0 * b;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] != 0.0) axpy(x[i], base + i * b, y, b);
  }
}

}  // namespace detail

/// Cached activations of one GRU step, enough to run its backward rule.
struct GruStep {
  std::vector<double> out;  // d' = d + z * (n - d)
  std::vector<double> z, r, n, rh;
};

/// One GRU step with latent state `h` (size H) and precomputed input
/// projection `xproj` = W_x c + b (size 3H, gate order z, r, n).
/// `U` is the hidden-to-gate matrix [H x 3H].
///   z = sigmoid(x_z + U_z^T h),  r = sigmoid(x_r + U_r^T h)
///   n = tanh(x_n + U_n^T (r * h)),  h' = (1 - z) * h + z * n
inline GruStep gru_eval(const Tensor& U, std::span<const double> h, std::span<const double> xproj) {
  const std::size_t H = h.size();
  if (U.rank() != 2 || U.rows() != H || U.cols() != 3 * H || xproj.size() != 3 * H)
    throw ShapeError("gru: expected U [H x 3H] and input projection of size 3H");
  GruStep s;
  std::vector<double> a(3 * H, 0.0);
  const double* Ud = U.data.data();
  for (std::size_t i = 0; i < H; ++i) {
    if (h[i] != 0.0) detail::axpy(h[i], Ud + i * 3 * H, a.data(), 2 * H);
  }
  s.z.resize(H);
  s.r.resize(H);
  s.rh.resize(H);
  for (std::size_t t = 0; t < H; ++t) {
    s.z[t] = detail::sigmoid(xproj[t] + a[t]);
    s.r[t] = detail::sigmoid(xproj[H + t] + a[H + t]);
    s.rh[t] = s.r[t] * h[t];
  }
  double* an = a.data() + 2 * H;
  for (std::size_t i = 0; i < H; ++i) {
    if (s.rh[i] != 0.0) detail::axpy(s.rh[i], Ud + i * 3 * H + 2 * H, an, H);
  }
  s.n.resize(H);
  s.out.resize(H);
  for (std::size_t t = 0; t < H; ++t) {
    s.n[t] = std::tanh(xproj[2 * H + t] + an[t]);
    s.out[t] = h[t] + s.z[t] * (s.n[t] - h[t]);
  }
  return s;
}

struct Var {
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kNone;
  bool valid() const { return id != kNone; }
  friend bool operator==(Var a, Var b) { return a.id == b.id; }
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t)>;

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  std::span<const double> value(Var v) const { return nodes_.at(v.id).value; }
  double scalar(Var v) const {
    const auto& val = nodes_.at(v.id).value;
    if (val.size() != 1) throw ShapeError("scalar(): node is not a scalar");
    return val[0];
  }
  /// Gradient of the last backward root w.r.t. node `v`; empty if unreached.
  std::span<const double> grad(Var v) const { return nodes_.at(v.id).grad; }

  Var constant(std::vector<double> v) { return push(std::move(v), nullptr); }

  /// Leaf mirroring a parameter vector; backward accumulates into p.grad.
  Var param(Tensor& p) {
    Tensor* pp = &p;
    return push(p.data, [pp](Tape& t, std::uint32_t self) {
      auto& g = pp->ensure_grad();
      const auto& gs = t.nodes_[self].grad;
      for (std::size_t i = 0; i < gs.size(); ++i) g[i] += gs[i];
    });
  }

  /// Row lookup into a [rows x cols] table (embeddings).
  Var row(Tensor& table, std::size_t r) {
    if (table.rank() != 2) throw ShapeError("row(): table must be rank 2");
    if (r >= table.rows()) throw DomainError("row(): index " + std::to_string(r) + " out of range");
    const std::size_t c = table.cols();
    std::vector<double> v(table.data.begin() + r * c, table.data.begin() + (r + 1) * c);
    Tensor* tp = &table;
    return push(std::move(v), [tp, r, c](Tape& t, std::uint32_t self) {
      auto& g = tp->ensure_grad();
      detail::axpy(1.0, t.nodes_[self].grad.data(), g.data() + r * c, c);
    });
  }

  /// y = A^T x, the map R^a -> R^b of a linear layer with A [a x b].
  Var linear(Tensor& A, Var x) {
    if (A.rank() != 2 || len(x) != A.rows()) throw ShapeError("linear(): inner dimensions disagree");
    return linear_rows(A, 0, x);
  }

  /// y = A[row0 : row0 + |x|, :]^T x, one row block of a wider layer (for
  /// inputs that are concatenations).
  Var linear_rows(Tensor& A, std::size_t row0, Var x) {
    const std::size_t n = len(x);
    if (A.rank() != 2 || row0 + n > A.rows())
      throw ShapeError("linear_rows(): input of size " + std::to_string(n) + " does not fit matrix");
    std::vector<double> y(A.cols(), 0.0);
    detail::matvec_t(A, row0, nodes_[x.id].value.data(), n, y.data());
    Tensor* ap = &A;
    return push(std::move(y), [ap, x, row0, n](Tape& t, std::uint32_t self) {
      linear_backward(t, *ap, x, row0, n, t.nodes_[self].grad.data());
    });
  }

  /// y = A^T x + b.
  Var affine(Tensor& A, Tensor& b, Var x) {
    const std::size_t n = len(x);
    if (A.rank() != 2 || n != A.rows() || b.size() != A.cols())
      throw ShapeError("affine(): shape mismatch");
    std::vector<double> y = b.data;
    detail::matvec_t(A, 0, nodes_[x.id].value.data(), n, y.data());
    Tensor* ap = &A;
    Tensor* bp = &b;
    return push(std::move(y), [ap, bp, x, n](Tape& t, std::uint32_t self) {
      const auto& gy = t.nodes_[self].grad;
      auto& gb = bp->ensure_grad();
      for (std::size_t j = 0; j < gy.size(); ++j) gb[j] += gy[j];
      linear_backward(t, *ap, x, 0, n, gy.data());
    });
  }

  Var add(Var a, Var b) {
    same_len(a, b, "add");
    std::vector<double> y = nodes_[a.id].value;
    detail::axpy(1.0, nodes_[b.id].value.data(), y.data(), y.size());
    return push(std::move(y), [a, b](Tape& t, std::uint32_t self) {
      t.accumulate(a, t.nodes_[self].grad, 1.0);
      t.accumulate(b, t.nodes_[self].grad, 1.0);
    });
  }

  Var sub(Var a, Var b) {
    same_len(a, b, "sub");
    std::vector<double> y = nodes_[a.id].value;
    detail::axpy(-1.0, nodes_[b.id].value.data(), y.data(), y.size());
    return push(std::move(y), [a, b](Tape& t, std::uint32_t self) {
      t.accumulate(a, t.nodes_[self].grad, 1.0);
      t.accumulate(b, t.nodes_[self].grad, -1.0);
    });
  }

  Var mul(Var a, Var b) {
    same_len(a, b, "mul");
    const auto& av = nodes_[a.id].value;
    const auto& bv = nodes_[b.id].value;
    std::vector<double> y(av.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
    return push(std::move(y), [a, b](Tape& t, std::uint32_t self) {
      const auto gy = t.nodes_[self].grad;
      auto& ga = t.grad_buffer(a);
      const auto& bv2 = t.nodes_[b.id].value;
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv2[i];
      auto& gb = t.grad_buffer(b);
      const auto& av2 = t.nodes_[a.id].value;
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av2[i];
    });
  }

  Var scale(Var a, double s) {
    std::vector<double> y = nodes_[a.id].value;
    for (auto& v : y) v *= s;
    return push(std::move(y), [a, s](Tape& t, std::uint32_t self) {
      t.accumulate(a, t.nodes_[self].grad, s);
    });
  }

  Var concat(std::span<const Var> parts) {
    std::vector<double> y;
    for (Var p : parts) {
      const auto& v = nodes_.at(p.id).value;
      y.insert(y.end(), v.begin(), v.end());
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    return push(std::move(y), [ps = std::move(ps)](Tape& t, std::uint32_t self) {
      std::size_t off = 0;
      for (Var p : ps) {
        const std::size_t n = t.nodes_[p.id].value.size();
        auto& g = t.grad_buffer(p);
        const double* gs = t.nodes_[self].grad.data() + off;
        for (std::size_t i = 0; i < n; ++i) g[i] += gs[i];
        off += n;
      }
    });
  }
  Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

  Var slice(Var a, std::size_t offset, std::size_t n) {
    const auto& av = nodes_[a.id].value;
    if (offset + n > av.size()) throw ShapeError("slice(): out of range");
    std::vector<double> y(av.begin() + offset, av.begin() + offset + n);
    return push(std::move(y), [a, offset](Tape& t, std::uint32_t self) {
      const auto& gs = t.nodes_[self].grad;
      auto& g = t.grad_buffer(a);
      for (std::size_t i = 0; i < gs.size(); ++i) g[offset + i] += gs[i];
    });
  }

  Var leaky_relu(Var a, double alpha) {
    std::vector<double> y = nodes_[a.id].value;
    for (auto& v : y) v = v > 0 ? v : alpha * v;
    return push(std::move(y), [a, alpha](Tape& t, std::uint32_t self) {
      const auto& gs = t.nodes_[self].grad;
      const auto& x = t.nodes_[a.id].value;
      auto& g = t.grad_buffer(a);
      for (std::size_t i = 0; i < gs.size(); ++i) g[i] += x[i] > 0 ? gs[i] : alpha * gs[i];
    });
  }

  Var sigmoid(Var a) {
    std::vector<double> y = nodes_[a.id].value;
    for (auto& v : y) v = detail::sigmoid(v);
    return push(std::move(y), [a](Tape& t, std::uint32_t self) {
      const auto& gs = t.nodes_[self].grad;
      const auto& yv = t.nodes_[self].value;
      auto& g = t.grad_buffer(a);
      for (std::size_t i = 0; i < gs.size(); ++i) g[i] += gs[i] * yv[i] * (1.0 - yv[i]);
    });
  }

  Var tanh(Var a) {
    std::vector<double> y = nodes_[a.id].value;
    for (auto& v : y) v = std::tanh(v);
    return push(std::move(y), [a](Tape& t, std::uint32_t self) {
      const auto& gs = t.nodes_[self].grad;
      const auto& yv = t.nodes_[self].value;
      auto& g = t.grad_buffer(a);
      for (std::size_t i = 0; i < gs.size(); ++i) g[i] += gs[i] * (1.0 - yv[i] * yv[i]);
    });
  }

  Var softmax(Var a) {
    std::vector<double> y = softmax_values(nodes_[a.id].value);
    return push(std::move(y), [a](Tape& t, std::uint32_t self) {
      const auto& gs = t.nodes_[self].grad;
      const auto& p = t.nodes_[self].value;
      const double s = detail::dot(gs.data(), p.data(), p.size());
      auto& g = t.grad_buffer(a);
      for (std::size_t i = 0; i < p.size(); ++i) g[i] += p[i] * (gs[i] - s);
    });
  }

  Var log(Var a) {
    std::vector<double> y = nodes_[a.id].value;
    for (auto& v : y) v = std::log(v);
    return push(std::move(y), [a](Tape& t, std::uint32_t self) {
      const auto& gs = t.nodes_[self].grad;
      const auto& x = t.nodes_[a.id].value;
      auto& g = t.grad_buffer(a);
      for (std::size_t i = 0; i < gs.size(); ++i) g[i] += gs[i] / x[i];
    });
  }

  /// delta^2 (sqrt(1 + (x/delta)^2) - 1), elementwise.
  Var pseudo_huber(Var a, double delta) {
    if (!(delta > 0)) throw ConfigError("pseudo_huber: delta must be positive");
    std::vector<double> y = nodes_[a.id].value;
    for (auto& v : y) {
      const double q = v / delta;
      v = delta * delta * (std::sqrt(1.0 + q * q) - 1.0);
    }
    return push(std::move(y), [a, delta](Tape& t, std::uint32_t self) {
      const auto& gs = t.nodes_[self].grad;
      const auto& x = t.nodes_[a.id].value;
      auto& g = t.grad_buffer(a);
      for (std::size_t i = 0; i < gs.size(); ++i) {
        const double q = x[i] / delta;
        g[i] += gs[i] * x[i] / std::sqrt(1.0 + q * q);
      }
    });
  }

  Var sum(Var a) {
    const auto& av = nodes_[a.id].value;
    const double s = std::accumulate(av.begin(), av.end(), 0.0);
    return push({s}, [a](Tape& t, std::uint32_t self) {
      const double gs = t.nodes_[self].grad[0];
      for (auto& g : t.grad_buffer(a)) g += gs;
    });
  }

  Var mean(Var a) {
    const double n = static_cast<double>(len(a));
    return scale(sum(a), 1.0 / n);
  }

  /// -log p[target] for a probability vector p.
  Var nll(Var probs, std::size_t target) {
    const auto& p = nodes_[probs.id].value;
    if (target >= p.size()) throw DomainError("nll(): target out of range");
    return push({-std::log(p[target])}, [probs, target](Tape& t, std::uint32_t self) {
      const double gs = t.nodes_[self].grad[0];
      auto& g = t.grad_buffer(probs);
      g[target] -= gs / t.nodes_[probs.id].value[target];
    });
  }

  /// -log softmax(logits)[target], fused for stability.
  Var softmax_nll(Var logits, std::size_t target) {
    const auto& z = nodes_[logits.id].value;
    if (target >= z.size()) throw DomainError("softmax_nll(): target out of range");
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    const double lse = m + std::log(s);
    return push({lse - z[target]}, [logits, target, lse](Tape& t, std::uint32_t self) {
      const double gs = t.nodes_[self].grad[0];
      const auto& zz = t.nodes_[logits.id].value;
      auto& g = t.grad_buffer(logits);
      for (std::size_t i = 0; i < zz.size(); ++i) g[i] += gs * std::exp(zz[i] - lse);
      g[target] -= gs;
    });
  }

  /// Fused GRU step (see gru_eval).
  Var gru(Tensor& U, Var h, Var xproj) {
    return record_gru(U, h, xproj, gru_eval(U, nodes_[h.id].value, nodes_[xproj.id].value));
  }

  /// Record a GRU step whose forward values were computed off-tape.
  Var record_gru(Tensor& U, Var h, Var xproj, GruStep step) {
    std::vector<double> out = std::move(step.out);
    Tensor* up = &U;
    return push(std::move(out), [up, h, xproj, s = std::move(step)](Tape& t, std::uint32_t self) {
      gru_backward(t, *up, h, xproj, s, t.nodes_[self].grad);
    });
  }

  /// Softmax-weighted pooling. With scores s_t = (w . key_t) / temperature
  /// and weights a_t = m_t exp(s_t) / sum_u m_u exp(s_u), returns
  /// sum_t a_t feat_t. `mult` may be empty (all ones). When `weights` is
  /// given it receives a_t / m_t, the weight of one member of group t.
  Var attend(Tensor& w, std::span<const Var> keys, std::span<const Var> feats,
             std::span<const double> mult, double temperature, std::vector<double>* weights = nullptr) {
    const std::size_t T = keys.size();
    if (T == 0 || feats.size() != T || (!mult.empty() && mult.size() != T))
      throw ShapeError("attend(): keys, features and multiplicities must be nonempty and aligned");
    const std::size_t kd = w.size();
    const std::size_t fd = len(feats[0]);
    std::vector<double> s(T);
    for (std::size_t t = 0; t < T; ++t) {
      const auto& k = nodes_[keys[t].id].value;
      if (k.size() != kd) throw ShapeError("attend(): key size mismatch");
      s[t] = detail::dot(w.data.data(), k.data(), kd) / temperature;
    }
    const double mx = *std::max_element(s.begin(), s.end());
    std::vector<double> a(T);
    double z = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      a[t] = (mult.empty() ? 1.0 : mult[t]) * std::exp(s[t] - mx);
      z += a[t];
    }
    for (auto& v : a) v /= z;
    std::vector<double> out(fd, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      const auto& f = nodes_[feats[t].id].value;
      if (f.size() != fd) throw ShapeError("attend(): feature size mismatch");
      detail::axpy(a[t], f.data(), out.data(), fd);
    }
    if (weights) {
      weights->resize(T);
      for (std::size_t t = 0; t < T; ++t) (*weights)[t] = a[t] / (mult.empty() ? 1.0 : mult[t]);
    }
    Tensor* wp = &w;
    std::vector<Var> ks(keys.begin(), keys.end());
    std::vector<Var> fs(feats.begin(), feats.end());
    return push(std::move(out), [wp, ks = std::move(ks), fs = std::move(fs), a = std::move(a), temperature](
                                    Tape& t, std::uint32_t self) {
      const std::vector<double> g = t.nodes_[self].grad;
      const auto& o = t.nodes_[self].value;
      const double og = detail::dot(o.data(), g.data(), g.size());
      auto& gw = wp->ensure_grad();
      for (std::size_t u = 0; u < ks.size(); ++u) {
        const auto& f = t.nodes_[fs[u].id].value;
        const double ds = a[u] * (detail::dot(f.data(), g.data(), g.size()) - og) / temperature;
        detail::axpy(a[u], g.data(), t.grad_buffer(fs[u]).data(), g.size());
        if (ds != 0.0) {
          detail::axpy(ds, wp->data.data(), t.grad_buffer(ks[u]).data(), wp->size());
          detail::axpy(ds, t.nodes_[ks[u].id].value.data(), gw.data(), wp->size());
        }
      }
    });
  }

  /// Reverse sweep from a scalar root. Parameter gradients accumulate.
  void backward(Var root) {
    if (len(root) != 1) throw ShapeError("backward(): root must be scalar");
    for (auto& n : nodes_) n.grad.clear();
    nodes_[root.id].grad.assign(1, 1.0);
    for (std::uint32_t id = root.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.grad.empty() || !n.backward) continue;
      n.backward(*this, id);
    }
  }

  static std::vector<double> softmax_values(std::span<const double> z) {
    std::vector<double> y(z.begin(), z.end());
    if (y.empty()) return y;
    const double m = *std::max_element(y.begin(), y.end());
    double s = 0.0;
    for (auto& v : y) {
      v = std::exp(v - m);
      s += v;
    }
    for (auto& v : y) v /= s;
    return y;
  }

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
    Backward backward;
  };

  std::vector<Node> nodes_;

  Var push(std::vector<double> value, Backward bw) {
    if (nodes_.size() >= Var::kNone) throw UsageError("tape overflow");
    nodes_.push_back(Node{std::move(value), {}, std::move(bw)});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  std::size_t len(Var v) const { return nodes_.at(v.id).value.size(); }

  void same_len(Var a, Var b, const char* op) const {
    if (len(a) != len(b)) throw ShapeError(std::string(op) + "(): operand sizes differ");
  }

  std::vector<double>& grad_buffer(Var v) {
    auto& n = nodes_[v.id];
    if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
  }

  void accumulate(Var v, const std::vector<double>& g, double s) {
    auto& dst = grad_buffer(v);
    detail::axpy(s, g.data(), dst.data(), g.size());
  }

  static void linear_backward(Tape& t, Tensor& A, Var x, std::size_t row0, std::size_t n, const double* gy) {
    const std::size_t b = A.cols();
    const double* xv = t.nodes_[x.id].value.data();
    auto& gA = A.ensure_grad();
    auto& gx = t.grad_buffer(x);
    const double* Ad = A.data.data() + row0 * b;
    double* gAd = gA.data() + row0 * b;
    for (std::size_t i = 0; i < n; ++i) {
      gx[i] += detail::dot(Ad + i * b, gy, b);
      if (xv[i] != 0.0) detail::axpy(xv[i], gy, gAd + i * b, b);
    }
  }

  static void gru_backward(Tape& t, Tensor& U, Var h, Var xproj, const GruStep& s, const std::vector<double>& g) {
    const std::size_t H = g.size();
    const auto& hv = t.nodes_[h.id].value;
    std::vector<double> dpre(3 * H);  // gradient w.r.t. gate pre-activations
    std::vector<double> dh(H);
    for (std::size_t i = 0; i < H; ++i) {
      const double dz = g[i] * (s.n[i] - hv[i]);
      const double dn = g[i] * s.z[i];
      dh[i] = g[i] * (1.0 - s.z[i]);
      dpre[i] = dz * s.z[i] * (1.0 - s.z[i]);
      dpre[2 * H + i] = dn * (1.0 - s.n[i] * s.n[i]);
    }
    auto& gU = U.ensure_grad();
    const double* Ud = U.data.data();
    double* gUd = gU.data();
    const double* dan = dpre.data() + 2 * H;
    for (std::size_t i = 0; i < H; ++i) {
      const double drh = detail::dot(Ud + i * 3 * H + 2 * H, dan, H);
      if (s.rh[i] != 0.0) detail::axpy(s.rh[i], dan, gUd + i * 3 * H + 2 * H, H);
      const double dr = drh * hv[i];
      dh[i] += drh * s.r[i];
      dpre[H + i] = dr * s.r[i] * (1.0 - s.r[i]);
    }
    for (std::size_t i = 0; i < H; ++i) {
      dh[i] += detail::dot(Ud + i * 3 * H, dpre.data(), 2 * H);
      if (hv[i] != 0.0) detail::axpy(hv[i], dpre.data(), gUd + i * 3 * H, 2 * H);
    }
    auto& gh = t.grad_buffer(h);
    for (std::size_t i = 0; i < H; ++i) gh[i] += dh[i];
    auto& gx = t.grad_buffer(xproj);
    for (std::size_t i = 0; i < 3 * H; ++i) gx[i] += dpre[i];
  }
};

}  // namespace motif
