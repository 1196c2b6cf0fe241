#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "svea/param_store.hpp"
#include "svea/tensor.hpp"

namespace svea {

template <class T>
class BasicTape;

/// Handle to a node recorded on a tape. Cheap to copy; only valid while the
/// tape that produced it is alive.
template <class T>
class BasicVar {
 public:
  BasicVar() = default;
  BasicVar(BasicTape<T>* tape, int id) : tape_(tape), id_(id) {}

  const BasicTensor<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  std::int64_t dim(int i) const { return value().dim(i); }
  BasicTape<T>& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  BasicTape<T>* tape_ = nullptr;
  int id_ = -1;
};

/// Ordered record of primitive operations. Each recorded node keeps its
/// forward value and a closure that pushes its output gradient to its inputs.
template <class T>
class BasicTape {
 public:
  using TensorT = BasicTensor<T>;
  using VarT = BasicVar<T>;
  using BackwardFn = std::function<void(BasicTape&, int)>;

  BasicTape() = default;
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  /// Leaf that never receives gradient (observations, targets).
  VarT constant(TensorT value);
  /// Leaf bound to a store entry. Repeated requests for the same entry return
  /// the same node so gradients accumulate in one place.
  VarT param(const BasicParamStore<T>& store, std::size_t index);
  VarT param(const BasicParamStore<T>& store, std::string_view name);
  /// Leaf whose gradient is tracked but that is not bound to any store.
  VarT input(TensorT value);

  /// Identity in the forward pass; blocks all gradient flow to its input.
  VarT stop_grad(VarT x);

  VarT record(std::string_view op, TensorT value, std::vector<int> inputs, BackwardFn backward);

  const TensorT& value(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  bool needs_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).needs_grad; }
  const std::vector<int>& inputs(int id) const { return nodes_.at(static_cast<std::size_t>(id)).inputs; }
  const std::string& op(int id) const { return nodes_.at(static_cast<std::size_t>(id)).op; }
  std::size_t size() const { return nodes_.size(); }

  /// Mutable gradient accumulator of a node, zero-filled on first access.
  TensorT& grad_buffer(int id);
  /// Accumulated gradient of a node, or nullptr if backward never reached it.
  const TensorT* grad(int id) const;

  /// Reverse-mode sweep from a scalar loss. Throws UsageError for a non-scalar
  /// loss and NumericError if a gradient turns non-finite.
  void backward(VarT loss);

  /// Gradients for every entry of `store`; entries not reachable from the loss
  /// (or only reachable through stop_grad) get zeros.
  BasicGradients<T> gradients(const BasicParamStore<T>& store) const;

  /// Node ids in the order the last backward() visited them.
  const std::vector<int>& backward_order() const { return backward_order_; }

  /// When set, every recorded value is scanned for NaN/Inf.
  void set_check_finite(bool on) { check_finite_ = on; }

  /// With gradients disabled, parameters are recorded as constants and no
  /// backward closures are kept (inference-only forward passes).
  void set_grad_enabled(bool on) { grad_enabled_ = on; }

 private:
  struct Node {
    std::string op;
    TensorT value;
    TensorT grad;
    bool has_grad = false;
    bool needs_grad = false;
    std::vector<int> inputs;
    BackwardFn backward;
  };

  VarT push(Node node);

  std::vector<Node> nodes_;
  std::map<std::pair<const void*, std::size_t>, int> param_nodes_;
  std::vector<int> backward_order_;
  bool check_finite_ = true;
  bool grad_enabled_ = true;
};

using Tape = BasicTape<float>;
using Var = BasicVar<float>;
using Tape64 = BasicTape<double>;
using Var64 = BasicVar<double>;

}  // namespace svea
