#include "tagformer/crf.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tagformer/ops.h"

namespace tagformer {

namespace {

template <typename T>
void check_shapes(const Matrix<T>& y, const Matrix<T>& t) {
  if (y.rows() < 1) throw std::logic_error("crf: empty sequence");
  require_shape(t, y.cols(), y.cols(), "crf: transitions");
}

// alpha[j][c]: log-sum over prefixes ending in c at j.
template <typename T>
Matrix<T> forward_scores(const Matrix<T>& y, const Matrix<T>& t) {
  const int n = y.rows(), k = y.cols();
  Matrix<T> alpha(n, k);
  std::vector<T> buf(k);
  for (int c = 0; c < k; ++c) alpha(0, c) = y(0, c);
  for (int j = 1; j < n; ++j) {
    for (int c = 0; c < k; ++c) {
      for (int p = 0; p < k; ++p) buf[p] = alpha(j - 1, p) + t(p, c);
      alpha(j, c) = log_sum_exp<T>(buf) + y(j, c);
    }
  }
  return alpha;
}

// beta[j][c]: log-sum over suffixes after j given c at j.
template <typename T>
Matrix<T> backward_scores(const Matrix<T>& y, const Matrix<T>& t) {
  const int n = y.rows(), k = y.cols();
  Matrix<T> beta(n, k);
  std::vector<T> buf(k);
  for (int j = n - 2; j >= 0; --j) {
    for (int c = 0; c < k; ++c) {
      for (int nx = 0; nx < k; ++nx) buf[nx] = t(c, nx) + y(j + 1, nx) + beta(j + 1, nx);
      beta(j, c) = log_sum_exp<T>(buf);
    }
  }
  return beta;
}

}  // namespace

template <typename T>
T crf_path_score(const Matrix<T>& y, const Matrix<T>& t, std::span<const int> path) {
  check_shapes(y, t);
  if (static_cast<int>(path.size()) != y.rows()) throw std::logic_error("crf: path length");
  T s = 0;
  for (int j = 0; j < y.rows(); ++j) {
    s += y(j, path[j]);
    if (j + 1 < y.rows()) s += t(path[j], path[j + 1]);
  }
  return s;
}

template <typename T>
T crf_log_partition(const Matrix<T>& y, const Matrix<T>& t) {
  check_shapes(y, t);
  const Matrix<T> alpha = forward_scores(y, t);
  return log_sum_exp<T>(std::span<const T>(alpha.row(y.rows() - 1), y.cols()));
}

template <typename T>
std::vector<int> viterbi_decode(const Matrix<T>& y, const Matrix<T>& t) {
  check_shapes(y, t);
  const int n = y.rows(), k = y.cols();
  // best[j][c]: best suffix score after position j given class c at j.
  Matrix<T> best(n, k);
  for (int j = n - 2; j >= 0; --j) {
    for (int c = 0; c < k; ++c) {
      T m = -std::numeric_limits<T>::infinity();
      for (int nx = 0; nx < k; ++nx) m = std::max(m, t(c, nx) + y(j + 1, nx) + best(j + 1, nx));
      best(j, c) = m;
    }
  }
  // Forward greedy pass with strict '>' picks the lowest class on ties.
  std::vector<int> path(n);
  T top = -std::numeric_limits<T>::infinity();
  for (int c = 0; c < k; ++c) {
    const T s = y(0, c) + best(0, c);
    if (s > top) {
      top = s;
      path[0] = c;
    }
  }
  for (int j = 1; j < n; ++j) {
    top = -std::numeric_limits<T>::infinity();
    for (int c = 0; c < k; ++c) {
      const T s = t(path[j - 1], c) + y(j, c) + best(j, c);
      if (s > top) {
        top = s;
        path[j] = c;
      }
    }
  }
  return path;
}

template <typename T>
Var crf_nll(Graph<T>& g, Var emissions, Var transitions, std::span<const int> target) {
  const auto& y = g.value(emissions);
  const auto& t = g.value(transitions);
  check_shapes(y, t);
  if (static_cast<int>(target.size()) != y.rows()) throw std::logic_error("crf_nll: target length");
  for (int c : target) {
    if (c < 0 || c >= y.cols()) throw std::logic_error("crf_nll: target class out of range");
  }
  const T log_z = crf_log_partition(y, t);
  const T nll = log_z - crf_path_score(y, t, target);
  auto path = std::make_shared<std::vector<int>>(target.begin(), target.end());
  return g.add_node(Matrix<T>(1, 1, nll), {emissions, transitions},
                    [emissions, transitions, path, log_z](Graph<T>& g, int self) {
    const T G = g.grad(self)[0];
    const auto& y = g.value(emissions);
    const auto& t = g.value(transitions);
    const int n = y.rows(), k = y.cols();
    const Matrix<T> alpha = forward_scores(y, t);
    const Matrix<T> beta = backward_scores(y, t);
    if (g.needs_grad(emissions)) {
      auto& dy = g.grad(emissions);
      for (int j = 0; j < n; ++j) {
        for (int c = 0; c < k; ++c) {
          const T marginal = std::exp(alpha(j, c) + beta(j, c) - log_z);
          dy(j, c) += G * (marginal - ((*path)[j] == c ? T(1) : T(0)));
        }
      }
    }
    if (g.needs_grad(transitions)) {
      auto& dt = g.grad(transitions);
      for (int j = 0; j + 1 < n; ++j) {
        for (int a = 0; a < k; ++a) {
          for (int b = 0; b < k; ++b) {
            const T pair = std::exp(alpha(j, a) + t(a, b) + y(j + 1, b) + beta(j + 1, b) - log_z);
            dt(a, b) += G * pair;
          }
        }
        dt((*path)[j], (*path)[j + 1]) -= G;
      }
    }
  });
}

template <typename T>
Matrix<T> transition_matrix(const Matrix<T>& w, T factor, T absolute, const Matrix<int>& f) {
  require_shape(w, f.rows(), f.cols(), "transition_matrix: weights");
  Matrix<T> out(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const T fi = T(f[i]);
    out[i] = ((T(1) - fi) + factor * fi) * w[i] - absolute * fi;
  }
  return out;
}

template <typename T>
Var transition_matrix(Graph<T>& g, Var weights, Var factor, Var absolute, const Matrix<int>& f) {
  require_shape(g.value(factor), 1, 1, "transition_matrix: factor");
  require_shape(g.value(absolute), 1, 1, "transition_matrix: absolute");
  Matrix<T> out = transition_matrix(g.value(weights), g.value(factor)[0], g.value(absolute)[0], f);
  auto mask = std::make_shared<Matrix<int>>(f);
  return g.add_node(std::move(out), {weights, factor, absolute},
                    [weights, factor, absolute, mask](Graph<T>& g, int self) {
    const auto& G = g.grad(self);
    const auto& w = g.value(weights);
    const T fac = g.value(factor)[0];
    T d_factor = 0, d_absolute = 0;
    const bool need_w = g.needs_grad(weights);
    for (std::size_t i = 0; i < G.size(); ++i) {
      const T fi = T((*mask)[i]);
      if (need_w) g.grad(weights)[i] += G[i] * ((T(1) - fi) + fac * fi);
      d_factor += G[i] * fi * w[i];
      d_absolute -= G[i] * fi;
    }
    if (g.needs_grad(factor)) g.grad(factor)[0] += d_factor;
    if (g.needs_grad(absolute)) g.grad(absolute)[0] += d_absolute;
  });
}

#define TAGFORMER_INSTANTIATE_CRF(T)                                                             \
  template T crf_path_score<T>(const Matrix<T>&, const Matrix<T>&, std::span<const int>);        \
  template T crf_log_partition<T>(const Matrix<T>&, const Matrix<T>&);                          \
  template std::vector<int> viterbi_decode<T>(const Matrix<T>&, const Matrix<T>&);              \
  template Var crf_nll<T>(Graph<T>&, Var, Var, std::span<const int>);                           \
  template Matrix<T> transition_matrix<T>(const Matrix<T>&, T, T, const Matrix<int>&);          \
  template Var transition_matrix<T>(Graph<T>&, Var, Var, Var, const Matrix<int>&);

TAGFORMER_INSTANTIATE_CRF(float)
TAGFORMER_INSTANTIATE_CRF(double)

}  // namespace tagformer
