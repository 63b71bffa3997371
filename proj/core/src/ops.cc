#include "tagformer/ops.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tagformer {

template <typename T>
Var matmul(Graph<T>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  if (A.cols() != B.rows()) throw std::logic_error("matmul: inner dimensions differ");
  const int n = A.rows(), k = A.cols(), m = B.cols();
  Matrix<T> out(n, m);
  for (int i = 0; i < n; ++i) {
    T* o = out.row(i);
    for (int p = 0; p < k; ++p) {
      const T a_ip = A(i, p);
      const T* brow = B.row(p);
      for (int j = 0; j < m; ++j) o[j] += a_ip * brow[j];
    }
  }
  return g.add_node(std::move(out), {a, b}, [a, b](Graph<T>& g, int self) {
    const auto& A = g.value(a);
    const auto& B = g.value(b);
    const auto& G = g.grad(self);
    const int n = A.rows(), k = A.cols(), m = B.cols();
    if (g.needs_grad(a)) {
      auto& dA = g.grad(a);
      for (int i = 0; i < n; ++i) {
        const T* grow = G.row(i);
        for (int p = 0; p < k; ++p) {
          const T* brow = B.row(p);
          T s = 0;
          for (int j = 0; j < m; ++j) s += grow[j] * brow[j];
          dA(i, p) += s;
        }
      }
    }
    if (g.needs_grad(b)) {
      auto& dB = g.grad(b);
      for (int i = 0; i < n; ++i) {
        const T* grow = G.row(i);
        for (int p = 0; p < k; ++p) {
          const T a_ip = A(i, p);
          T* drow = dB.row(p);
          for (int j = 0; j < m; ++j) drow[j] += a_ip * grow[j];
        }
      }
    }
  });
}

template <typename T>
Var add(Graph<T>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  if (!A.same_shape(B)) throw std::logic_error("add: shape mismatch");
  Matrix<T> out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  return g.add_node(std::move(out), {a, b}, [a, b](Graph<T>& g, int self) {
    const auto& G = g.grad(self);
    for (Var v : {a, b}) {
      if (!g.needs_grad(v)) continue;
      auto& d = g.grad(v);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += G[i];
    }
  });
}

template <typename T>
Var add_row(Graph<T>& g, Var a, Var bias) {
  const auto& A = g.value(a);
  const auto& b = g.value(bias);
  require_shape(b, 1, A.cols(), "add_row: bias");
  Matrix<T> out = A;
  for (int i = 0; i < out.rows(); ++i) {
    for (int j = 0; j < out.cols(); ++j) out(i, j) += b[j];
  }
  return g.add_node(std::move(out), {a, bias}, [a, bias](Graph<T>& g, int self) {
    const auto& G = g.grad(self);
    if (g.needs_grad(a)) {
      auto& d = g.grad(a);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += G[i];
    }
    if (g.needs_grad(bias)) {
      auto& d = g.grad(bias);
      for (int i = 0; i < G.rows(); ++i) {
        for (int j = 0; j < G.cols(); ++j) d[j] += G(i, j);
      }
    }
  });
}

template <typename T>
Var scale(Graph<T>& g, Var a, T factor) {
  Matrix<T> out = g.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  return g.add_node(std::move(out), {a}, [a, factor](Graph<T>& g, int self) {
    const auto& G = g.grad(self);
    auto& d = g.grad(a);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * G[i];
  });
}

namespace {

template <typename T>
constexpr T kGeluC = T(0.7978845608028654);  // sqrt(2/pi)
template <typename T>
constexpr T kGeluA = T(0.044715);

}  // namespace

template <typename T>
Var gelu(Graph<T>& g, Var a) {
  const auto& X = g.value(a);
  Matrix<T> out(X.rows(), X.cols());
  for (std::size_t i = 0; i < X.size(); ++i) {
    const T x = X[i];
    const T t = std::tanh(kGeluC<T> * (x + kGeluA<T> * x * x * x));
    out[i] = T(0.5) * x * (T(1) + t);
  }
  return g.add_node(std::move(out), {a}, [a](Graph<T>& g, int self) {
    const auto& X = g.value(a);
    const auto& G = g.grad(self);
    auto& d = g.grad(a);
    for (std::size_t i = 0; i < X.size(); ++i) {
      const T x = X[i];
      const T u = kGeluC<T> * (x + kGeluA<T> * x * x * x);
      const T t = std::tanh(u);
      const T du = kGeluC<T> * (T(1) + T(3) * kGeluA<T> * x * x);
      d[i] += G[i] * (T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * du);
    }
  });
}

template <typename T>
Var layer_norm(Graph<T>& g, Var x, Var gain, Var bias, T eps) {
  const auto& X = g.value(x);
  const auto& ga = g.value(gain);
  const auto& be = g.value(bias);
  const int n = X.rows(), d = X.cols();
  require_shape(ga, 1, d, "layer_norm: gain");
  require_shape(be, 1, d, "layer_norm: bias");
  Matrix<T> out(n, d);
  auto xhat = std::make_shared<Matrix<T>>(n, d);
  auto inv_std = std::make_shared<std::vector<T>>(n);
  for (int i = 0; i < n; ++i) {
    T mean = 0;
    for (int j = 0; j < d; ++j) mean += X(i, j);
    mean /= T(d);
    T var = 0;
    for (int j = 0; j < d; ++j) var += (X(i, j) - mean) * (X(i, j) - mean);
    var /= T(d);
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (int j = 0; j < d; ++j) {
      (*xhat)(i, j) = (X(i, j) - mean) * is;
      out(i, j) = (*xhat)(i, j) * ga[j] + be[j];
    }
  }
  return g.add_node(std::move(out), {x, gain, bias}, [x, gain, bias, xhat, inv_std](Graph<T>& g, int self) {
    const auto& G = g.grad(self);
    const auto& ga = g.value(gain);
    const int n = G.rows(), d = G.cols();
    if (g.needs_grad(gain) || g.needs_grad(bias)) {
      auto& dg = g.grad(gain);
      auto& db = g.grad(bias);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
          dg[j] += G(i, j) * (*xhat)(i, j);
          db[j] += G(i, j);
        }
      }
    }
    if (g.needs_grad(x)) {
      auto& dx = g.grad(x);
      for (int i = 0; i < n; ++i) {
        T sum_dy = 0, sum_dy_xhat = 0;
        for (int j = 0; j < d; ++j) {
          const T dy = G(i, j) * ga[j];
          sum_dy += dy;
          sum_dy_xhat += dy * (*xhat)(i, j);
        }
        const T is = (*inv_std)[i];
        for (int j = 0; j < d; ++j) {
          const T dy = G(i, j) * ga[j];
          dx(i, j) += is * (dy - sum_dy / T(d) - (*xhat)(i, j) * sum_dy_xhat / T(d));
        }
      }
    }
  });
}

template <typename T>
Var gather_rows(Graph<T>& g, Var table, std::span<const int> rows) {
  const auto& W = g.value(table);
  Matrix<T> out(static_cast<int>(rows.size()), W.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= W.rows()) throw std::logic_error("gather_rows: index out of range");
    std::copy(W.row(rows[i]), W.row(rows[i]) + W.cols(), out.row(static_cast<int>(i)));
  }
  auto idx = std::make_shared<std::vector<int>>(rows.begin(), rows.end());
  return g.add_node(std::move(out), {table}, [table, idx](Graph<T>& g, int self) {
    const auto& G = g.grad(self);
    auto& d = g.grad(table);
    for (std::size_t i = 0; i < idx->size(); ++i) {
      T* drow = d.row((*idx)[i]);
      const T* grow = G.row(static_cast<int>(i));
      for (int j = 0; j < G.cols(); ++j) drow[j] += grow[j];
    }
  });
}

template <typename T>
Var weighted_sum(Graph<T>& g, const std::vector<Var>& terms, const std::vector<T>& weights) {
  if (terms.size() != weights.size()) throw std::logic_error("weighted_sum: size mismatch");
  T s = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    require_shape(g.value(terms[i]), 1, 1, "weighted_sum: term");
    s += weights[i] * g.value(terms[i])[0];
  }
  return g.add_node(Matrix<T>(1, 1, s), terms, [terms, weights](Graph<T>& g, int self) {
    const T G = g.grad(self)[0];
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (g.needs_grad(terms[i])) g.grad(terms[i])[0] += weights[i] * G;
    }
  });
}

template <typename T>
T log_sum_exp(std::span<const T> v) {
  T m = -std::numeric_limits<T>::infinity();
  for (T x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  T s = 0;
  for (T x : v) s += std::exp(x - m);
  return m + std::log(s);
}

template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& logits) {
  Matrix<T> p(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    T m = -std::numeric_limits<T>::infinity();
    for (int j = 0; j < logits.cols(); ++j) m = std::max(m, logits(i, j));
    T s = 0;
    for (int j = 0; j < logits.cols(); ++j) {
      p(i, j) = std::exp(logits(i, j) - m);
      s += p(i, j);
    }
    for (int j = 0; j < logits.cols(); ++j) p(i, j) /= s;
  }
  return p;
}

template <typename T>
int argmax_row(const Matrix<T>& m, int row, int begin, int end) {
  if (end < 0) end = m.cols();
  int best = begin;
  for (int j = begin + 1; j < end; ++j) {
    if (m(row, j) > m(row, best)) best = j;
  }
  return best;
}

template <typename T>
Var softmax_cross_entropy(Graph<T>& g, Var logits, std::span<const int> targets) {
  const auto& L = g.value(logits);
  if (static_cast<int>(targets.size()) != L.rows() || L.rows() == 0) {
    throw std::logic_error("softmax_cross_entropy: one target per row required");
  }
  auto probs = std::make_shared<Matrix<T>>(softmax_rows(L));
  auto tgt = std::make_shared<std::vector<int>>(targets.begin(), targets.end());
  T loss = 0;
  for (int i = 0; i < L.rows(); ++i) {
    const int t = (*tgt)[i];
    if (t < 0 || t >= L.cols()) throw std::logic_error("softmax_cross_entropy: target out of range");
    const T lse = log_sum_exp<T>(std::span<const T>(L.row(i), L.cols()));
    loss += lse - L(i, t);
  }
  loss /= T(L.rows());
  return g.add_node(Matrix<T>(1, 1, loss), {logits}, [logits, probs, tgt](Graph<T>& g, int self) {
    const T G = g.grad(self)[0] / T(probs->rows());
    auto& d = g.grad(logits);
    for (int i = 0; i < probs->rows(); ++i) {
      for (int j = 0; j < probs->cols(); ++j) {
        d(i, j) += G * ((*probs)(i, j) - (j == (*tgt)[i] ? T(1) : T(0)));
      }
    }
  });
}

template <typename T>
Var sigmoid_cross_entropy_sum(Graph<T>& g, Var logits, std::span<const int> targets) {
  const auto& L = g.value(logits);
  if (L.cols() != 1 || static_cast<int>(targets.size()) != L.rows()) {
    throw std::logic_error("sigmoid_cross_entropy_sum: expected n x 1 logits with n targets");
  }
  auto tgt = std::make_shared<std::vector<int>>(targets.begin(), targets.end());
  T loss = 0;
  for (int i = 0; i < L.rows(); ++i) {
    const T z = L[i];
    // -[t log s(z) + (1-t) log(1-s(z))] = softplus(z) - t z, computed stably.
    const T softplus = std::max(z, T(0)) + std::log1p(std::exp(-std::abs(z)));
    loss += softplus - T((*tgt)[i]) * z;
  }
  return g.add_node(Matrix<T>(1, 1, loss), {logits}, [logits, tgt](Graph<T>& g, int self) {
    const T G = g.grad(self)[0];
    const auto& L = g.value(logits);
    auto& d = g.grad(logits);
    for (int i = 0; i < L.rows(); ++i) {
      const T s = T(1) / (T(1) + std::exp(-L[i]));
      d[i] += G * (s - T((*tgt)[i]));
    }
  });
}

#define TAGFORMER_INSTANTIATE_OPS(T)                                                           \
  template Var matmul<T>(Graph<T>&, Var, Var);                                                 \
  template Var add<T>(Graph<T>&, Var, Var);                                                    \
  template Var add_row<T>(Graph<T>&, Var, Var);                                                \
  template Var scale<T>(Graph<T>&, Var, T);                                                    \
  template Var gelu<T>(Graph<T>&, Var);                                                        \
  template Var layer_norm<T>(Graph<T>&, Var, Var, Var, T);                                     \
  template Var gather_rows<T>(Graph<T>&, Var, std::span<const int>);                           \
  template Var weighted_sum<T>(Graph<T>&, const std::vector<Var>&, const std::vector<T>&);     \
  template Var softmax_cross_entropy<T>(Graph<T>&, Var, std::span<const int>);                 \
  template Var sigmoid_cross_entropy_sum<T>(Graph<T>&, Var, std::span<const int>);             \
  template Matrix<T> softmax_rows<T>(const Matrix<T>&);                                        \
  template int argmax_row<T>(const Matrix<T>&, int, int, int);                                 \
  template T log_sum_exp<T>(std::span<const T>);

TAGFORMER_INSTANTIATE_OPS(float)
TAGFORMER_INSTANTIATE_OPS(double)

}  // namespace tagformer
