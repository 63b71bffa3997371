#include "tagformer/graph.h"

#include <stdexcept>

namespace tagformer {

template <typename T>
Parameter<T>& ParameterStore<T>::add(const std::string& name, Matrix<T> value) {
  if (index_.count(name)) throw std::logic_error("duplicate parameter '" + name + "'");
  auto p = std::make_unique<Parameter<T>>();
  p->name = name;
  p->grad = Matrix<T>(value.rows(), value.cols());
  p->value = std::move(value);
  index_[name] = p.get();
  params_.push_back(std::move(p));
  return *params_.back();
}

template <typename T>
Parameter<T>& ParameterStore<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::logic_error("unknown parameter '" + name + "'");
  return *it->second;
}

template <typename T>
const Parameter<T>& ParameterStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::logic_error("unknown parameter '" + name + "'");
  return *it->second;
}

template <typename T>
Parameter<T>* ParameterStore<T>::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

template <typename T>
std::vector<Parameter<T>*> ParameterStore<T>::all() {
  std::vector<Parameter<T>*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> ParameterStore<T>::all() const {
  std::vector<const Parameter<T>*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) p->grad.fill(T(0));
}

template <typename T>
Var Graph<T>::constant(Matrix<T> value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, nullptr, false});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Graph<T>::param(Parameter<T>& p) {
  nodes_.push_back(Node{p.value, {}, nullptr, &p, true});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Graph<T>::add_node(Matrix<T> value, const std::vector<Var>& inputs, Backward backward) {
  bool needs = false;
  for (Var v : inputs) needs = needs || nodes_.at(v.id).needs_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : nullptr, nullptr, needs});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Matrix<T>& Graph<T>::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad = Matrix<T>(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename T>
void Graph<T>::backward(Var loss, T seed) {
  require_shape(value(loss), 1, 1, "backward: loss");
  if (!nodes_[loss.id].needs_grad) return;
  for (auto& n : nodes_) n.grad = Matrix<T>();
  grad(loss)[0] = seed;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      auto& g = n.param->grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  }
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace tagformer
