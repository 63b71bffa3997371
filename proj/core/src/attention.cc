#include "tagformer/attention.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tagformer {

std::vector<double> sinusoidal_pe(int position, int d_model) {
  std::vector<double> p(d_model);
  for (int i = 0; i < d_model; ++i) {
    const int k2 = i - i % 2;
    const double angle = position / std::pow(10000.0, static_cast<double>(k2) / d_model);
    p[i] = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
  }
  return p;
}

template <typename T>
Matrix<T> sinusoidal_table(int n, int d_model) {
  Matrix<T> m(n, d_model);
  for (int j = 0; j < n; ++j) {
    const auto p = sinusoidal_pe(j, d_model);
    for (int c = 0; c < d_model; ++c) m(j, c) = static_cast<T>(p[c]);
  }
  return m;
}

namespace {

struct Window {
  int begin;
  int end;  // exclusive
};

Window key_range(int i, int n, int window) {
  if (window < 0) return {0, n};
  return {std::max(0, i - window), std::min(n, i + window + 1)};
}

}  // namespace

template <typename T>
Var attention(Graph<T>& g, Var q, Var k, Var v, int n_heads, const std::optional<RelativeTables>& rel,
              int window, AttentionCounter* counter) {
  const auto& Q = g.value(q);
  const auto& K = g.value(k);
  const auto& V = g.value(v);
  const int n = Q.rows(), d = Q.cols();
  if (!K.same_shape(Q) || !V.same_shape(Q)) throw std::logic_error("attention: q/k/v shape mismatch");
  if (n_heads <= 0 || d % n_heads != 0) throw std::logic_error("attention: d_model not divisible by heads");
  const int dk = d / n_heads;
  const int tau = rel ? rel->clip : 0;
  if (rel) {
    require_shape(g.value(rel->key), 2 * tau + 1, dk, "attention: relative key table");
    require_shape(g.value(rel->value), 2 * tau + 1, dk, "attention: relative value table");
  }
  const T inv_sqrt = T(1) / std::sqrt(T(dk));

  // Attention weights per head and query, over that query's key window.
  auto alpha = std::make_shared<std::vector<std::vector<T>>>(static_cast<std::size_t>(n_heads) * n);
  Matrix<T> out(n, d);
  std::int64_t energies = 0;
  if (counter) counter->per_query.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const Window w = key_range(i, n, window);
    energies += w.end - w.begin;
    if (counter) counter->per_query[i] = w.end - w.begin;
  }

  for (int h = 0; h < n_heads; ++h) {
    const int off = h * dk;
    for (int i = 0; i < n; ++i) {
      const Window w = key_range(i, n, window);
      auto& a = (*alpha)[static_cast<std::size_t>(h) * n + i];
      a.assign(w.end - w.begin, T(0));
      T mx = -std::numeric_limits<T>::infinity();
      for (int j = w.begin; j < w.end; ++j) {
        T e = 0;
        const T* rk = rel ? g.value(rel->key).row(clipped_distance(j, i, tau) + tau) : nullptr;
        for (int c = 0; c < dk; ++c) {
          e += Q(i, off + c) * (K(j, off + c) + (rk ? rk[c] : T(0)));
        }
        e *= inv_sqrt;
        a[j - w.begin] = e;
        mx = std::max(mx, e);
      }
      T s = 0;
      for (auto& e : a) {
        e = std::exp(e - mx);
        s += e;
      }
      for (auto& e : a) e /= s;
      for (int j = w.begin; j < w.end; ++j) {
        const T aij = a[j - w.begin];
        const T* rv = rel ? g.value(rel->value).row(clipped_distance(j, i, tau) + tau) : nullptr;
        for (int c = 0; c < dk; ++c) {
          out(i, off + c) += aij * (V(j, off + c) + (rv ? rv[c] : T(0)));
        }
      }
    }
  }
  if (counter) counter->per_head += energies;

  std::vector<Var> inputs = {q, k, v};
  if (rel) {
    inputs.push_back(rel->key);
    inputs.push_back(rel->value);
  }
  return g.add_node(std::move(out), inputs, [=](Graph<T>& g, int self) {
    const auto& G = g.grad(self);
    const auto& Q = g.value(q);
    const auto& K = g.value(k);
    const auto& V = g.value(v);
    const bool need_q = g.needs_grad(q), need_k = g.needs_grad(k), need_v = g.needs_grad(v);
    const bool need_rk = rel && g.needs_grad(rel->key);
    const bool need_rv = rel && g.needs_grad(rel->value);
    Matrix<T>* dQ = need_q ? &g.grad(q) : nullptr;
    Matrix<T>* dK = need_k ? &g.grad(k) : nullptr;
    Matrix<T>* dV = need_v ? &g.grad(v) : nullptr;
    Matrix<T>* dRK = need_rk ? &g.grad(rel->key) : nullptr;
    Matrix<T>* dRV = need_rv ? &g.grad(rel->value) : nullptr;
    const Matrix<T>* RK = rel ? &g.value(rel->key) : nullptr;
    const Matrix<T>* RV = rel ? &g.value(rel->value) : nullptr;
    std::vector<T> dalpha;
    for (int h = 0; h < n_heads; ++h) {
      const int off = h * dk;
      for (int i = 0; i < n; ++i) {
        const Window w = key_range(i, n, window);
        const auto& a = (*alpha)[static_cast<std::size_t>(h) * n + i];
        dalpha.assign(a.size(), T(0));
        T weighted = 0;
        for (int j = w.begin; j < w.end; ++j) {
          const int r = clipped_distance(j, i, tau) + tau;
          const T aij = a[j - w.begin];
          T da = 0;
          for (int c = 0; c < dk; ++c) {
            const T gy = G(i, off + c);
            da += gy * (V(j, off + c) + (RV ? (*RV)(r, c) : T(0)));
            if (dV) (*dV)(j, off + c) += aij * gy;
            if (dRV) (*dRV)(r, c) += aij * gy;
          }
          dalpha[j - w.begin] = da;
          weighted += aij * da;
        }
        for (int j = w.begin; j < w.end; ++j) {
          const int r = clipped_distance(j, i, tau) + tau;
          const T de = a[j - w.begin] * (dalpha[j - w.begin] - weighted) * inv_sqrt;
          if (de == T(0)) continue;
          for (int c = 0; c < dk; ++c) {
            if (dQ) (*dQ)(i, off + c) += de * (K(j, off + c) + (RK ? (*RK)(r, c) : T(0)));
            if (dK) (*dK)(j, off + c) += de * Q(i, off + c);
            if (dRK) (*dRK)(r, c) += de * Q(i, off + c);
          }
        }
      }
    }
  });
}

template <typename T>
Var word_average(Graph<T>& g, Var x, std::span<const int> word_map, int n_words) {
  const auto& X = g.value(x);
  if (static_cast<int>(word_map.size()) != X.rows()) throw std::logic_error("word_average: word map size");
  Matrix<T> out(n_words, X.cols());
  auto counts = std::make_shared<std::vector<int>>(n_words, 0);
  for (int i = 0; i < X.rows(); ++i) {
    const int w = word_map[i];
    if (w < 0 || w >= n_words) throw std::logic_error("word_average: word index out of range");
    ++(*counts)[w];
    for (int c = 0; c < X.cols(); ++c) out(w, c) += X(i, c);
  }
  for (int w = 0; w < n_words; ++w) {
    if ((*counts)[w] == 0) throw std::logic_error("word_average: word without tokens");
    for (int c = 0; c < X.cols(); ++c) out(w, c) /= T((*counts)[w]);
  }
  auto map = std::make_shared<std::vector<int>>(word_map.begin(), word_map.end());
  return g.add_node(std::move(out), {x}, [x, map, counts](Graph<T>& g, int self) {
    const auto& G = g.grad(self);
    auto& d = g.grad(x);
    for (int i = 0; i < d.rows(); ++i) {
      const int w = (*map)[i];
      const T inv = T(1) / T((*counts)[w]);
      for (int c = 0; c < d.cols(); ++c) d(i, c) += G(w, c) * inv;
    }
  });
}

template <typename T>
Var word_expand(Graph<T>& g, Var y, std::span<const int> word_map) {
  const auto& Y = g.value(y);
  Matrix<T> out(static_cast<int>(word_map.size()), Y.cols());
  for (std::size_t i = 0; i < word_map.size(); ++i) {
    if (word_map[i] < 0 || word_map[i] >= Y.rows()) throw std::logic_error("word_expand: word index out of range");
    std::copy(Y.row(word_map[i]), Y.row(word_map[i]) + Y.cols(), out.row(static_cast<int>(i)));
  }
  auto map = std::make_shared<std::vector<int>>(word_map.begin(), word_map.end());
  return g.add_node(std::move(out), {y}, [y, map](Graph<T>& g, int self) {
    const auto& G = g.grad(self);
    auto& d = g.grad(y);
    for (std::size_t i = 0; i < map->size(); ++i) {
      T* drow = d.row((*map)[i]);
      const T* grow = G.row(static_cast<int>(i));
      for (int c = 0; c < G.cols(); ++c) drow[c] += grow[c];
    }
  });
}

#define TAGFORMER_INSTANTIATE_ATTENTION(T)                                                         \
  template Matrix<T> sinusoidal_table<T>(int, int);                                                \
  template Var attention<T>(Graph<T>&, Var, Var, Var, int, const std::optional<RelativeTables>&,   \
                            int, AttentionCounter*);                                               \
  template Var word_average<T>(Graph<T>&, Var, std::span<const int>, int);                         \
  template Var word_expand<T>(Graph<T>&, Var, std::span<const int>);

TAGFORMER_INSTANTIATE_ATTENTION(float)
TAGFORMER_INSTANTIATE_ATTENTION(double)

}  // namespace tagformer
