#include "svea/param_store.hpp"

#include <cmath>

namespace svea {

template <class T>
std::size_t BasicParamStore<T>::add(std::string name, BasicTensor<T> value) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(value), {}, {}});
  return entries_.size() - 1;
}

template <class T>
std::size_t BasicParamStore<T>::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

template <class T>
std::int64_t BasicParamStore<T>::numel() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

template <class T>
bool BasicParamStore<T>::same_structure(const BasicParamStore& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (entries_[i].value.shape() != other.entries_[i].value.shape()) return false;
  }
  return true;
}

template <class T>
bool BasicGradients<T>::all_finite() const {
  for (const auto& g : grads) {
    if (!g.all_finite()) return false;
  }
  return true;
}

template <class T>
T BasicGradients<T>::max_abs() const {
  T m = 0;
  for (const auto& g : grads) {
    for (T v : g.vec()) m = std::max(m, std::abs(v));
  }
  return m;
}

template class BasicParamStore<float>;
template class BasicParamStore<double>;
template struct BasicGradients<float>;
template struct BasicGradients<double>;

}  // namespace svea
