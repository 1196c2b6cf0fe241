#include "svea/tensor.hpp"

#include <cmath>
#include <cstring>

namespace svea {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw ConfigError("negative extent in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <class T>
bool BasicTensor<T>::all_finite() const {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <class T>
BasicTensor<T> slice_rows(const BasicTensor<T>& t, std::int64_t begin, std::int64_t end) {
  if (t.rank() == 0 || begin < 0 || end > t.dim(0) || begin > end) {
    throw ConfigError("slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                      ") out of range for " + shape_str(t.shape()));
  }
  Shape shape = t.shape();
  const std::int64_t row = t.dim(0) == 0 ? 0 : t.numel() / t.dim(0);
  shape[0] = end - begin;
  BasicTensor<T> out(shape);
  if (row > 0 && end > begin) {
    std::memcpy(out.data(), t.data() + begin * row, sizeof(T) * static_cast<std::size_t>((end - begin) * row));
  }
  return out;
}

template <class T>
BasicTensor<T> concat_rows(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() == 0 || a.rank() != b.rank() ||
      !std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1)) {
    throw ConfigError("concat_rows shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Shape shape = a.shape();
  shape[0] += b.dim(0);
  AlignedVector<T> data;
  data.reserve(static_cast<std::size_t>(a.numel() + b.numel()));
  data.insert(data.end(), a.vec().begin(), a.vec().end());
  data.insert(data.end(), b.vec().begin(), b.vec().end());
  return BasicTensor<T>(shape, std::move(data));
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template BasicTensor<float> slice_rows(const BasicTensor<float>&, std::int64_t, std::int64_t);
template BasicTensor<double> slice_rows(const BasicTensor<double>&, std::int64_t, std::int64_t);
template BasicTensor<float> concat_rows(const BasicTensor<float>&, const BasicTensor<float>&);
template BasicTensor<double> concat_rows(const BasicTensor<double>&, const BasicTensor<double>&);

}  // namespace svea
