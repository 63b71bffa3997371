#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "tagformer/tensor.h"

namespace tagformer {

template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
  bool frozen = false;
};

// Named trainable arrays in insertion order. Names are the checkpoint keys.
template <typename T>
class ParameterStore {
 public:
  Parameter<T>& add(const std::string& name, Matrix<T> value);
  Parameter<T>& get(const std::string& name);
  const Parameter<T>& get(const std::string& name) const;
  Parameter<T>* find(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Parameter<T>*> all();
  std::vector<const Parameter<T>*> all() const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::unordered_map<std::string, Parameter<T>*> index_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Tape of one forward pass. Node values are the activation trace; backward()
// replays the tape in reverse and accumulates into Parameter::grad.
template <typename T>
class Graph {
 public:
  using Backward = std::function<void(Graph&, int self)>;

  Var constant(Matrix<T> value);
  Var param(Parameter<T>& p);
  Var add_node(Matrix<T> value, const std::vector<Var>& inputs, Backward backward);

  const Matrix<T>& value(Var v) const { return nodes_.at(v.id).value; }
  const Matrix<T>& value(int id) const { return nodes_[id].value; }
  // Gradient buffer of a node; valid only during backward().
  Matrix<T>& grad(Var v) { return grad(v.id); }
  Matrix<T>& grad(int id);
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }

  // `loss` must be 1x1. Parameter gradients are accumulated, not overwritten.
  void backward(Var loss, T seed = T(1));

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    Backward backward;
    Parameter<T>* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

}  // namespace tagformer
