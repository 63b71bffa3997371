#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tagformer/graph.h"

namespace tagformer {

// p[2k] = sin(j / 10000^(2k/d)), p[2k+1] = cos(j / 10000^(2k/d)); 0-based j.
std::vector<double> sinusoidal_pe(int position, int d_model);
template <typename T>
Matrix<T> sinusoidal_table(int n, int d_model);

// clip_tau(to - from) in [-tau, tau].
inline int clipped_distance(int to, int from, int tau) {
  const int x = to - from;
  return x < -tau ? -tau : (x > tau ? tau : x);
}

// Counts pre-softmax energies. `per_head` is summed over calls; `per_query`
// holds the window size of every query row of the latest call.
struct AttentionCounter {
  std::int64_t per_head = 0;
  std::vector<std::int64_t> per_query;
};

// Relative-distance embeddings r_{-tau..tau}, shared by all heads. Row
// clip + tau holds the embedding for clipped distance `clip`.
struct RelativeTables {
  Var key;
  Var value;
  int clip = 1;
};

// Scaled dot-product attention over heads stored as column blocks of q/k/v
// (n x d_model each). With relative tables the energy of query i to key j is
// q_i . (k_j + rK[clip(j - i)]) / sqrt(d_k) and the value is v_j + rV[...].
// A window w >= 0 limits keys to |j - i| <= w and normalizes over that range.
// Returns the concatenated head outputs (n x d_model).
template <typename T>
Var attention(Graph<T>& g, Var q, Var k, Var v, int n_heads, const std::optional<RelativeTables>& rel,
              int window = -1, AttentionCounter* counter = nullptr);

// Mean of the token rows of each word: out[w] = mean{x_i : word_map[i] == w}.
template <typename T>
Var word_average(Graph<T>& g, Var x, std::span<const int> word_map, int n_words);

// out[i] = y[word_map[i]].
template <typename T>
Var word_expand(Graph<T>& g, Var y, std::span<const int> word_map);

}  // namespace tagformer
