#pragma once

#include <cstddef>
#include <vector>

namespace charcol {

// Dense row-major tensor. Single precision is the production type;
// double precision backs gradient verification.
template <typename T>
struct TensorT {
  std::vector<int> dims;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> d) : dims(std::move(d)) {
    data.assign(numel(dims), T(0));
  }
  TensorT(std::vector<int> d, std::vector<T> values)
      : dims(std::move(d)), data(std::move(values)) {}

  static std::size_t numel(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }

  std::size_t size() const { return data.size(); }

  bool operator==(const TensorT&) const = default;

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.dims = dims;
    out.data.reserve(data.size());
    for (T v : data) out.data.push_back(static_cast<U>(v));
    return out;
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace charcol
