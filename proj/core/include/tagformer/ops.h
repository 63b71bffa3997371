#pragma once

#include <span>
#include <vector>

#include "tagformer/graph.h"

namespace tagformer {

template <typename T> Var matmul(Graph<T>& g, Var a, Var b);
template <typename T> Var add(Graph<T>& g, Var a, Var b);
// a (n x m) + bias (1 x m) on every row.
template <typename T> Var add_row(Graph<T>& g, Var a, Var bias);
template <typename T> Var scale(Graph<T>& g, Var a, T factor);
// tanh approximation of GELU.
template <typename T> Var gelu(Graph<T>& g, Var a);
template <typename T> Var layer_norm(Graph<T>& g, Var x, Var gain, Var bias, T eps);
template <typename T> Var gather_rows(Graph<T>& g, Var table, std::span<const int> rows);
// Weighted sum of 1x1 nodes.
template <typename T> Var weighted_sum(Graph<T>& g, const std::vector<Var>& terms, const std::vector<T>& weights);

// Mean softmax cross-entropy of each logits row against its target column.
template <typename T> Var softmax_cross_entropy(Graph<T>& g, Var logits, std::span<const int> targets);
// Summed binary cross-entropy of sigmoid(logits) (n x 1) against 0/1 targets.
template <typename T> Var sigmoid_cross_entropy_sum(Graph<T>& g, Var logits, std::span<const int> targets);

// Non-graph helpers.
template <typename T> Matrix<T> softmax_rows(const Matrix<T>& logits);
template <typename T> int argmax_row(const Matrix<T>& m, int row, int begin = 0, int end = -1);
template <typename T> T log_sum_exp(std::span<const T> v);

}  // namespace tagformer
