#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "svea/tensor.hpp"

namespace svea {

/// Named learnable tensors plus their Adam moments and step counter.
template <class T>
class BasicParamStore {
 public:
  struct Entry {
    std::string name;
    BasicTensor<T> value;
    BasicTensor<T> m;  // first moment, sized lazily by the optimizer
    BasicTensor<T> v;  // second moment
  };

  std::size_t add(std::string name, BasicTensor<T> value);

  std::size_t size() const { return entries_.size(); }
  bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }
  std::size_t index_of(std::string_view name) const;

  Entry& entry(std::size_t i) { return entries_.at(i); }
  const Entry& entry(std::size_t i) const { return entries_.at(i); }
  BasicTensor<T>& value(std::size_t i) { return entries_.at(i).value; }
  const BasicTensor<T>& value(std::size_t i) const { return entries_.at(i).value; }
  BasicTensor<T>& value(std::string_view name) { return value(index_of(name)); }
  const BasicTensor<T>& value(std::string_view name) const { return value(index_of(name)); }
  const std::string& name(std::size_t i) const { return entries_.at(i).name; }

  std::int64_t step() const { return step_; }
  void advance_step() { ++step_; }

  /// Total number of scalar parameters.
  std::int64_t numel() const;

  /// Copy of the values only (moments and step reset), converted to U.
  template <class U>
  BasicParamStore<U> cast() const {
    BasicParamStore<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

  /// Values-only copy that keeps the element type.
  BasicParamStore clone_values() const { return cast<T>(); }

  /// True when both stores have the same names and shapes in the same order.
  bool same_structure(const BasicParamStore& other) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::int64_t step_ = 0;
};

using ParamStore = BasicParamStore<float>;
using ParamStore64 = BasicParamStore<double>;

/// Gradients aligned index-for-index with a ParamStore.
template <class T>
struct BasicGradients {
  std::vector<BasicTensor<T>> grads;

  const BasicTensor<T>& operator[](std::size_t i) const { return grads.at(i); }
  BasicTensor<T>& operator[](std::size_t i) { return grads.at(i); }
  std::size_t size() const { return grads.size(); }
  bool all_finite() const;
  /// Largest absolute gradient entry.
  T max_abs() const;
};

using Gradients = BasicGradients<float>;
using Gradients64 = BasicGradients<double>;

}  // namespace svea
