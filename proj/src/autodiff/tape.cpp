#include "svea/tape.hpp"

namespace svea {

template <class T>
BasicVar<T> BasicTape<T>::push(Node node) {
  if (check_finite_ && !node.value.all_finite()) {
    throw NumericError("non-finite value produced by op '" + node.op + "' with shape " +
                       shape_str(node.value.shape()));
  }
  nodes_.push_back(std::move(node));
  return VarT(this, static_cast<int>(nodes_.size() - 1));
}

template <class T>
BasicVar<T> BasicTape<T>::constant(TensorT value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  return push(std::move(n));
}

template <class T>
BasicVar<T> BasicTape<T>::input(TensorT value) {
  Node n;
  n.op = "input";
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

template <class T>
BasicVar<T> BasicTape<T>::param(const BasicParamStore<T>& store, std::size_t index) {
  const auto key = std::make_pair(static_cast<const void*>(&store), index);
  if (auto it = param_nodes_.find(key); it != param_nodes_.end()) return VarT(this, it->second);
  Node n;
  n.op = "param:" + store.name(index);
  n.value = store.value(index);
  n.needs_grad = grad_enabled_;
  VarT v = push(std::move(n));
  param_nodes_.emplace(key, v.id());
  return v;
}

template <class T>
BasicVar<T> BasicTape<T>::param(const BasicParamStore<T>& store, std::string_view name) {
  return param(store, store.index_of(name));
}

template <class T>
BasicVar<T> BasicTape<T>::stop_grad(VarT x) {
  Node n;
  n.op = "stop_grad";
  n.value = x.value();
  n.inputs = {x.id()};
  return push(std::move(n));
}

template <class T>
BasicVar<T> BasicTape<T>::record(std::string_view op, TensorT value, std::vector<int> inputs,
                                 BackwardFn backward) {
  Node n;
  n.op = std::string(op);
  n.value = std::move(value);
  for (int id : inputs) n.needs_grad = n.needs_grad || needs_grad(id);
  n.inputs = std::move(inputs);
  if (n.needs_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

template <class T>
BasicTensor<T>& BasicTape<T>::grad_buffer(int id) {
  Node& n = nodes_.at(static_cast<std::size_t>(id));
  if (!n.has_grad) {
    n.grad = TensorT(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

template <class T>
const BasicTensor<T>* BasicTape<T>::grad(int id) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(id));
  return n.has_grad ? &n.grad : nullptr;
}

template <class T>
void BasicTape<T>::backward(VarT loss) {
  if (loss.value().numel() != 1) {
    throw UsageError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  if (nodes_.empty()) throw UsageError("backward on an empty tape");
  backward_order_.clear();
  grad_buffer(loss.id())[0] = T(1);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad || !n.needs_grad) continue;
    if (check_finite_ && !n.grad.all_finite()) {
      throw NumericError("non-finite gradient reaching op '" + n.op + "'");
    }
    backward_order_.push_back(id);
    if (n.backward) n.backward(*this, id);
  }
}

template <class T>
BasicGradients<T> BasicTape<T>::gradients(const BasicParamStore<T>& store) const {
  BasicGradients<T> out;
  out.grads.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto it = param_nodes_.find(std::make_pair(static_cast<const void*>(&store), i));
    const TensorT* g = it == param_nodes_.end() ? nullptr : grad(it->second);
    out.grads.push_back(g ? *g : TensorT(store.value(i).shape()));
  }
  return out;
}

template class BasicTape<float>;
template class BasicTape<double>;

}  // namespace svea
