#pragma once

#include <span>
#include <vector>

#include "tagformer/graph.h"

namespace tagformer {

// score(path) = sum_j Y[j, c_j] + sum_j T[c_j, c_{j+1}].
template <typename T>
T crf_path_score(const Matrix<T>& emissions, const Matrix<T>& transitions, std::span<const int> path);

// log of the sum of exp(score) over all paths (forward algorithm).
template <typename T>
T crf_log_partition(const Matrix<T>& emissions, const Matrix<T>& transitions);

// Highest-scoring path. Among equal scores the lexicographically smallest
// path wins (lowest class at the earliest differing position).
template <typename T>
std::vector<int> viterbi_decode(const Matrix<T>& emissions, const Matrix<T>& transitions);

// log Z - score(target), differentiable w.r.t. both inputs.
template <typename T>
Var crf_nll(Graph<T>& g, Var emissions, Var transitions, std::span<const int> target);

// (A + factor * F) .* W - absolute * F with A = 1 - F; factor/absolute are 1x1.
template <typename T>
Matrix<T> transition_matrix(const Matrix<T>& weights, T factor, T absolute, const Matrix<int>& forbidden);
template <typename T>
Var transition_matrix(Graph<T>& g, Var weights, Var factor, Var absolute, const Matrix<int>& forbidden);

}  // namespace tagformer
