#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sga/rng.hpp"
#include "sga/tensor.hpp"

namespace sga::ad {

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad.fill(T{0}); }
};

template <class T>
struct Node;

template <class T>
using Var = std::shared_ptr<Node<T>>;

/// One value in the computation graph. `backprop` reads this node's grad and
/// accumulates into the grads of `inputs`.
template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  std::vector<Var<T>> inputs;
  std::function<void(Node&)> backprop;
  Parameter<T>* param = nullptr;
  bool needs_grad = false;

  const Shape& shape() const { return value.shape(); }

  Tensor<T>& grad_buffer() {
    if (grad.size() != value.size()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline thread_local bool checked_mode = false;
}

/// While alive, every op verifies that its output is finite.
class CheckedScope {
 public:
  CheckedScope() : prev_(detail::checked_mode) { detail::checked_mode = true; }
  ~CheckedScope() { detail::checked_mode = prev_; }
  CheckedScope(const CheckedScope&) = delete;
  CheckedScope& operator=(const CheckedScope&) = delete;

 private:
  bool prev_;
};

template <class T>
Var<T> constant(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  return n;
}

template <class T>
Var<T> leaf(Parameter<T>& p) {
  auto n = std::make_shared<Node<T>>();
  n->value = p.value;
  n->param = &p;
  n->needs_grad = true;
  return n;
}

namespace detail {

template <class T>
Var<T> make_node(const char* op, Tensor<T> value, std::vector<Var<T>> inputs,
                 std::function<void(Node<T>&)> backprop) {
  if (checked_mode && !value.all_finite())
    throw NonFiniteError(std::string("non-finite output from op '") + op + "'");
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  for (const auto& in : inputs) n->needs_grad = n->needs_grad || in->needs_grad;
  n->inputs = std::move(inputs);
  if (n->needs_grad) n->backprop = std::move(backprop);
  return n;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

/// x[n×p] · W[p×q] (+ b[q] per row).
template <class T>
Var<T> affine(const Var<T>& x, const Var<T>& w, const Var<T>& b = nullptr) {
  const std::size_t n = x->value.rows(), p = x->value.cols();
  const std::size_t wp = w->value.rank() == 2 ? w->value.rows() : 1, q = w->value.cols();
  detail::require(p == wp, "affine: x " + shape_str(x->shape()) + " vs W " + shape_str(w->shape()));
  if (b) detail::require(b->value.size() == q, "affine: bias " + shape_str(b->shape()) + " vs W " + shape_str(w->shape()));

  Tensor<T> y(n, q);
  const T* X = x->value.data();
  const T* W = w->value.data();
  for (std::size_t i = 0; i < n; ++i) {
    T* yr = y.row(i);
    if (b) std::copy(b->value.data(), b->value.data() + q, yr);
    for (std::size_t k = 0; k < p; ++k) {
      const T xv = X[i * p + k];
      if (xv == T{0}) continue;
      const T* wr = W + k * q;
      for (std::size_t j = 0; j < q; ++j) yr[j] += xv * wr[j];
    }
  }

  std::vector<Var<T>> ins{x, w};
  if (b) ins.push_back(b);
  return detail::make_node<T>("affine", std::move(y), std::move(ins), [n, p, q](Node<T>& self) {
    const T* G = self.grad.data();
    auto& x = self.inputs[0];
    auto& w = self.inputs[1];
    if (x->needs_grad) {
      T* dX = x->grad_buffer().data();
      const T* W = w->value.data();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < p; ++k) {
          T acc{0};
          const T* wr = W + k * q;
          const T* gr = G + i * q;
          for (std::size_t j = 0; j < q; ++j) acc += gr[j] * wr[j];
          dX[i * p + k] += acc;
        }
    }
    if (w->needs_grad) {
      T* dW = w->grad_buffer().data();
      const T* X = x->value.data();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < p; ++k) {
          const T xv = X[i * p + k];
          if (xv == T{0}) continue;
          T* dwr = dW + k * q;
          const T* gr = G + i * q;
          for (std::size_t j = 0; j < q; ++j) dwr[j] += xv * gr[j];
        }
    }
    if (self.inputs.size() > 2 && self.inputs[2]->needs_grad) {
      T* dB = self.inputs[2]->grad_buffer().data();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < q; ++j) dB[j] += G[i * q + j];
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::require(a->value.size() == b->value.size(), "add: " + shape_str(a->shape()) + " vs " + shape_str(b->shape()));
  Tensor<T> y = a->value;
  y += b->value;
  return detail::make_node<T>("add", std::move(y), {a, b}, [](Node<T>& self) {
    for (auto& in : self.inputs)
      if (in->needs_grad) in->grad_buffer() += self.grad;
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::require(a->value.size() == b->value.size(), "mul: " + shape_str(a->shape()) + " vs " + shape_str(b->shape()));
  Tensor<T> y = a->value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b->value[i];
  return detail::make_node<T>("mul", std::move(y), {a, b}, [](Node<T>& self) {
    auto& a = self.inputs[0];
    auto& b = self.inputs[1];
    if (a->needs_grad) {
      auto& g = a->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * b->value[i];
    }
    if (b->needs_grad) {
      auto& g = b->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * a->value[i];
    }
  });
}

/// Elementwise 1 - x.
template <class T>
Var<T> one_minus(const Var<T>& a) {
  Tensor<T> y = a->value;
  for (auto& v : y.values()) v = T{1} - v;
  return detail::make_node<T>("one_minus", std::move(y), {a}, [](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
  });
}

template <class T>
Var<T> scale(const Var<T>& a, T c) {
  Tensor<T> y = a->value;
  for (auto& v : y.values()) v *= c;
  return detail::make_node<T>("scale", std::move(y), {a}, [c](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * self.grad[i];
  });
}

enum class Activation { LeakyRelu, Relu, Sigmoid, Tanh };

inline constexpr double kLeakySlope = 0.2;

template <class T>
Var<T> activate(const Var<T>& a, Activation kind) {
  Tensor<T> y = a->value;
  const T slope = static_cast<T>(kLeakySlope);
  for (auto& v : y.values()) {
    switch (kind) {
      case Activation::LeakyRelu: v = v < T{0} ? slope * v : v; break;
      case Activation::Relu: v = v < T{0} ? T{0} : v; break;
      case Activation::Sigmoid: v = T{1} / (T{1} + std::exp(-v)); break;
      case Activation::Tanh: v = std::tanh(v); break;
    }
  }
  return detail::make_node<T>("activate", std::move(y), {a}, [kind, slope](Node<T>& self) {
    auto& in = self.inputs[0];
    auto& g = in->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T x = in->value[i], y = self.value[i];
      T d{};
      switch (kind) {
        case Activation::LeakyRelu: d = x < T{0} ? slope : T{1}; break;
        case Activation::Relu: d = x < T{0} ? T{0} : T{1}; break;
        case Activation::Sigmoid: d = y * (T{1} - y); break;
        case Activation::Tanh: d = T{1} - y * y; break;
      }
      g[i] += d * self.grad[i];
    }
  });
}

template <class T> Var<T> leaky_relu(const Var<T>& a) { return activate(a, Activation::LeakyRelu); }
template <class T> Var<T> relu(const Var<T>& a) { return activate(a, Activation::Relu); }
template <class T> Var<T> sigmoid(const Var<T>& a) { return activate(a, Activation::Sigmoid); }
template <class T> Var<T> tanh(const Var<T>& a) { return activate(a, Activation::Tanh); }

// ---------------------------------------------------------------------------
// Reductions

template <class T>
Var<T> sum(const Var<T>& a) {
  T s{0};
  for (T v : a->value.values()) s += v;
  return detail::make_node<T>("sum", Tensor<T>::scalar(s), {a}, [](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (auto& v : g.values()) v += self.grad[0];
  });
}

/// Mean of a list of scalar nodes.
template <class T>
Var<T> mean(const std::vector<Var<T>>& xs) {
  detail::require(!xs.empty(), "mean: empty input");
  T s{0};
  for (const auto& x : xs) {
    detail::require(x->value.size() == 1, "mean: non-scalar input " + shape_str(x->shape()));
    s += x->value[0];
  }
  const T inv = T{1} / static_cast<T>(xs.size());
  return detail::make_node<T>("mean", Tensor<T>::scalar(s * inv), xs, [inv](Node<T>& self) {
    for (auto& in : self.inputs)
      if (in->needs_grad) in->grad_buffer()[0] += inv * self.grad[0];
  });
}

// ---------------------------------------------------------------------------
// Structural

template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  detail::require(!parts.empty(), "concat_cols: empty input");
  const std::size_t n = parts[0]->value.rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    detail::require(p->value.rows() == n, "concat_cols: row mismatch " + shape_str(parts[0]->shape()) +
                                              " vs " + shape_str(p->shape()));
    total += p->value.cols();
  }
  Tensor<T> y(n, total);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t c = p->value.cols();
    for (std::size_t i = 0; i < n; ++i) std::copy(p->value.row(i), p->value.row(i) + c, y.row(i) + off);
    off += c;
  }
  return detail::make_node<T>("concat_cols", std::move(y), parts, [n](Node<T>& self) {
    std::size_t off = 0;
    for (auto& p : self.inputs) {
      const std::size_t c = p->value.cols();
      if (p->needs_grad) {
        auto& g = p->grad_buffer();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < c; ++j) g(i, j) += self.grad(i, off + j);
      }
      off += c;
    }
  });
}

template <class T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  detail::require(!parts.empty(), "concat_rows: empty input");
  const std::size_t c = parts[0]->value.cols();
  std::size_t n = 0;
  for (const auto& p : parts) {
    detail::require(p->value.cols() == c, "concat_rows: column mismatch " + shape_str(parts[0]->shape()) +
                                              " vs " + shape_str(p->shape()));
    n += p->value.rows();
  }
  Tensor<T> y(n, c);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p->value.data(), p->value.data() + p->value.size(), y.data() + off);
    off += p->value.size();
  }
  return detail::make_node<T>("concat_rows", std::move(y), parts, [](Node<T>& self) {
    std::size_t off = 0;
    for (auto& p : self.inputs) {
      if (p->needs_grad) {
        auto& g = p->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[off + i];
      }
      off += p->value.size();
    }
  });
}

/// Rows of x selected by index (repeats allowed).
template <class T>
Var<T> gather_rows(const Var<T>& x, std::vector<std::size_t> idx) {
  const std::size_t rows = x->value.rows(), c = x->value.cols();
  Tensor<T> y(idx.size(), c);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    detail::require(idx[i] < rows, "gather_rows: index " + std::to_string(idx[i]) + " out of range for " +
                                       shape_str(x->shape()));
    std::copy(x->value.row(idx[i]), x->value.row(idx[i]) + c, y.row(i));
  }
  return detail::make_node<T>("gather_rows", std::move(y), {x}, [idx = std::move(idx), c](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) g(idx[i], j) += self.grad(i, j);
  });
}

template <class T>
Var<T> slice_rows(const Var<T>& x, std::size_t begin, std::size_t count) {
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = begin + i;
  return gather_rows(x, std::move(idx));
}

/// Reshape to a single row.
template <class T>
Var<T> flatten(const Var<T>& x) {
  Tensor<T> y(Shape{1, x->value.size()}, x->value.values());
  return detail::make_node<T>("flatten", std::move(y), {x}, [](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Graph attention primitives

/// Per-edge score a_dst·x_dst[dst_e] + a_src·x_src[src_e], where `a` holds
/// [a_dst ‖ a_src]. Equals aᵀ[x_dst ‖ x_src] per edge.
template <class T>
Var<T> edge_scores(const Var<T>& x_dst, const Var<T>& x_src, const Var<T>& a,
                   std::vector<std::size_t> dst, std::vector<std::size_t> src) {
  const std::size_t f = x_dst->value.cols();
  detail::require(x_src->value.cols() == f && a->value.size() == 2 * f,
                  "edge_scores: features " + shape_str(x_dst->shape()) + "/" + shape_str(x_src->shape()) +
                      " vs attention vector " + shape_str(a->shape()));
  detail::require(dst.size() == src.size(), "edge_scores: endpoint lists differ in length");
  const std::size_t e = dst.size();
  Tensor<T> y(Shape{e});
  const T* A = a->value.data();
  for (std::size_t k = 0; k < e; ++k) {
    detail::require(dst[k] < x_dst->value.rows() && src[k] < x_src->value.rows(), "edge_scores: endpoint out of range");
    const T* hd = x_dst->value.row(dst[k]);
    const T* hs = x_src->value.row(src[k]);
    T s{0};
    for (std::size_t j = 0; j < f; ++j) s += A[j] * hd[j] + A[f + j] * hs[j];
    y[k] = s;
  }
  return detail::make_node<T>("edge_scores", std::move(y), {x_dst, x_src, a},
                              [dst = std::move(dst), src = std::move(src), f](Node<T>& self) {
    auto& xd = self.inputs[0];
    auto& xs = self.inputs[1];
    auto& a = self.inputs[2];
    const T* A = a->value.data();
    for (std::size_t k = 0; k < dst.size(); ++k) {
      const T g = self.grad[k];
      if (g == T{0}) continue;
      if (xd->needs_grad) {
        T* r = xd->grad_buffer().row(dst[k]);
        for (std::size_t j = 0; j < f; ++j) r[j] += g * A[j];
      }
      if (xs->needs_grad) {
        T* r = xs->grad_buffer().row(src[k]);
        for (std::size_t j = 0; j < f; ++j) r[j] += g * A[f + j];
      }
      if (a->needs_grad) {
        T* ga = a->grad_buffer().data();
        const T* hd = xd->value.row(dst[k]);
        const T* hs = xs->value.row(src[k]);
        for (std::size_t j = 0; j < f; ++j) {
          ga[j] += g * hd[j];
          ga[f + j] += g * hs[j];
        }
      }
    }
  });
}

/// Softmax of `logits` within each segment; segment_of[e] names edge e's
/// segment. Max-subtracted per segment.
template <class T>
Var<T> segmented_softmax(const Var<T>& logits, std::vector<std::size_t> segment_of, std::size_t segments) {
  const std::size_t e = logits->value.size();
  detail::require(segment_of.size() == e, "segmented_softmax: " + std::to_string(segment_of.size()) +
                                              " segment ids for " + std::to_string(e) + " logits");
  std::vector<T> mx(segments, -std::numeric_limits<T>::infinity());
  for (std::size_t k = 0; k < e; ++k) {
    detail::require(segment_of[k] < segments, "segmented_softmax: segment id out of range");
    mx[segment_of[k]] = std::max(mx[segment_of[k]], logits->value[k]);
  }
  Tensor<T> y(Shape{e});
  std::vector<T> denom(segments, T{0});
  for (std::size_t k = 0; k < e; ++k) {
    y[k] = std::exp(logits->value[k] - mx[segment_of[k]]);
    denom[segment_of[k]] += y[k];
  }
  for (std::size_t k = 0; k < e; ++k) y[k] /= denom[segment_of[k]];
  return detail::make_node<T>("segmented_softmax", std::move(y), {logits},
                              [seg = std::move(segment_of), segments](Node<T>& self) {
    std::vector<T> dot(segments, T{0});
    for (std::size_t k = 0; k < seg.size(); ++k) dot[seg[k]] += self.grad[k] * self.value[k];
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t k = 0; k < seg.size(); ++k) g[k] += self.value[k] * (self.grad[k] - dot[seg[k]]);
  });
}

/// out[dst_e] += weight_e · values[src_e]; rows with no incoming edge stay zero.
template <class T>
Var<T> scatter_weighted_sum(const Var<T>& weights, const Var<T>& values, std::vector<std::size_t> src,
                            std::vector<std::size_t> dst, std::size_t out_rows) {
  const std::size_t e = weights->value.size(), f = values->value.cols();
  detail::require(src.size() == e && dst.size() == e, "scatter_weighted_sum: endpoint lists do not match weights");
  Tensor<T> y(out_rows, f);
  for (std::size_t k = 0; k < e; ++k) {
    detail::require(src[k] < values->value.rows() && dst[k] < out_rows, "scatter_weighted_sum: endpoint out of range");
    const T w = weights->value[k];
    const T* v = values->value.row(src[k]);
    T* o = y.row(dst[k]);
    for (std::size_t j = 0; j < f; ++j) o[j] += w * v[j];
  }
  return detail::make_node<T>("scatter_weighted_sum", std::move(y), {weights, values},
                              [src = std::move(src), dst = std::move(dst), f](Node<T>& self) {
    auto& w = self.inputs[0];
    auto& v = self.inputs[1];
    for (std::size_t k = 0; k < src.size(); ++k) {
      const T* g = self.grad.row(dst[k]);
      if (w->needs_grad) {
        const T* vr = v->value.row(src[k]);
        T acc{0};
        for (std::size_t j = 0; j < f; ++j) acc += g[j] * vr[j];
        w->grad_buffer()[k] += acc;
      }
      if (v->needs_grad) {
        const T wk = w->value[k];
        T* gv = v->grad_buffer().row(src[k]);
        for (std::size_t j = 0; j < f; ++j) gv[j] += wk * g[j];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Normalization and regularization

inline constexpr double kLayerNormEps = 1e-5;

template <class T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias) {
  const std::size_t n = x->value.rows(), q = x->value.cols();
  detail::require(q >= 1 && gain->value.size() == q && bias->value.size() == q,
                  "layer_norm: input " + shape_str(x->shape()) + " vs gain " + shape_str(gain->shape()));
  const T eps = static_cast<T>(kLayerNormEps);
  Tensor<T> xhat(n, q);
  std::vector<T> inv_std(n);
  Tensor<T> y(n, q);
  for (std::size_t i = 0; i < n; ++i) {
    const T* r = x->value.row(i);
    T mu{0};
    for (std::size_t j = 0; j < q; ++j) mu += r[j];
    mu /= static_cast<T>(q);
    T var{0};
    for (std::size_t j = 0; j < q; ++j) var += (r[j] - mu) * (r[j] - mu);
    var /= static_cast<T>(q);
    inv_std[i] = T{1} / std::sqrt(var + eps);
    for (std::size_t j = 0; j < q; ++j) {
      xhat(i, j) = (r[j] - mu) * inv_std[i];
      y(i, j) = gain->value[j] * xhat(i, j) + bias->value[j];
    }
  }
  return detail::make_node<T>("layer_norm", std::move(y), {x, gain, bias},
                              [xhat = std::move(xhat), inv_std = std::move(inv_std), n, q](Node<T>& self) {
    auto& x = self.inputs[0];
    auto& gain = self.inputs[1];
    auto& bias = self.inputs[2];
    for (std::size_t i = 0; i < n; ++i) {
      const T* g = self.grad.row(i);
      if (gain->needs_grad) {
        auto& gg = gain->grad_buffer();
        for (std::size_t j = 0; j < q; ++j) gg[j] += g[j] * xhat(i, j);
      }
      if (bias->needs_grad) {
        auto& gb = bias->grad_buffer();
        for (std::size_t j = 0; j < q; ++j) gb[j] += g[j];
      }
      if (x->needs_grad) {
        T mean_d{0}, mean_dx{0};
        for (std::size_t j = 0; j < q; ++j) {
          const T d = g[j] * gain->value[j];
          mean_d += d;
          mean_dx += d * xhat(i, j);
        }
        mean_d /= static_cast<T>(q);
        mean_dx /= static_cast<T>(q);
        T* gx = x->grad_buffer().row(i);
        for (std::size_t j = 0; j < q; ++j) {
          const T d = g[j] * gain->value[j];
          gx[j] += inv_std[i] * (d - mean_d - xhat(i, j) * mean_dx);
        }
      }
    }
  });
}

/// Inverted dropout: survivors scaled by 1/(1-rate) in training, identity otherwise.
template <class T>
Var<T> dropout(const Var<T>& x, double rate, bool train, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (!train || rate == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> mask(x->shape());
  for (auto& m : mask.values()) m = rng.bernoulli(rate) ? T{0} : keep_scale;
  Tensor<T> y = x->value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  return detail::make_node<T>("dropout", std::move(y), {x}, [mask = std::move(mask)](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += mask[i] * self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Loss

/// log(1 + exp(x)) without overflow.
template <class T>
T softplus(T x) {
  return std::max(x, T{0}) + std::log1p(std::exp(-std::abs(x)));
}

/// Pairwise ranking loss log(1 + exp(loser - winner)) on two scalar nodes.
template <class T>
Var<T> pce_loss(const Var<T>& winner, const Var<T>& loser) {
  detail::require(winner->value.size() == 1 && loser->value.size() == 1, "pce_loss: scores must be scalars");
  const T diff = loser->value[0] - winner->value[0];
  return detail::make_node<T>("pce_loss", Tensor<T>::scalar(softplus(diff)), {winner, loser}, [diff](Node<T>& self) {
    const T s = T{1} / (T{1} + std::exp(-diff));
    const T g = self.grad[0];
    if (self.inputs[0]->needs_grad) self.inputs[0]->grad_buffer()[0] -= g * s;
    if (self.inputs[1]->needs_grad) self.inputs[1]->grad_buffer()[0] += g * s;
  });
}

// ---------------------------------------------------------------------------
// Reverse pass

/// Accumulate d(loss)/d(param) into every reachable Parameter's grad.
template <class T>
void backward(const Var<T>& loss) {
  if (!loss || loss->value.size() != 1)
    throw ShapeError("backward: loss must be a scalar, got " + (loss ? shape_str(loss->shape()) : std::string("null")));
  if (!loss->needs_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{loss.get(), 0}};
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->needs_grad && seen.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* n : order) n->grad = Tensor<T>(n->value.shape());
  loss->grad[0] = T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backprop) n->backprop(*n);
    if (n->param) n->param->grad += n->grad;
  }
}

}  // namespace sga::ad
