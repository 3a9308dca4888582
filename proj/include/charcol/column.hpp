#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "charcol/arch.hpp"
#include "charcol/nn.hpp"
#include "charcol/tensor.hpp"

namespace charcol {

// Probability vector over the class set; values sum to 1.
struct ClassScores {
  std::vector<double> values;
};

template <typename T>
struct LayerParamsT {
  TensorT<T> w;
  TensorT<T> b;
  bool empty() const { return w.data.empty(); }
  bool operator==(const LayerParamsT&) const = default;
};

// One trained network. `params` has one entry per spec layer; pooling
// layers hold empty tensors. Immutable columns are safe to share across
// threads; training mutates and needs exclusive access.
template <typename T>
struct ColumnT {
  ArchSpec spec;
  std::uint64_t seed = 0;
  std::vector<LayerParamsT<T>> params;

  bool operator==(const ColumnT&) const = default;

  template <typename U>
  ColumnT<U> cast() const {
    ColumnT<U> out;
    out.spec = spec;
    out.seed = seed;
    out.params.reserve(params.size());
    for (const auto& p : params)
      out.params.push_back({p.w.template cast<U>(), p.b.template cast<U>()});
    return out;
  }
};

using Column = ColumnT<float>;
using ColumnD = ColumnT<double>;

// Uniform init in +-sqrt(6/(fan_in+fan_out)), biases zero, mt19937_64 keyed
// by `seed`. Identical (spec, seed) gives byte-identical parameters.
Column init_column(const ArchSpec& spec, std::uint64_t seed);
ColumnD init_column_double(const ArchSpec& spec, std::uint64_t seed);

// Everything the backward pass needs from one forward evaluation:
// post-activation outputs per layer plus pooling winners and the softmax.
template <typename T>
struct ForwardTrace {
  std::vector<TensorT<T>> outputs;       // one per layer, post activation/pool
  std::vector<std::vector<int>> argmax;  // parallel to layers; empty unless pool
  SoftmaxResult<T> softmax;              // populated when a label was supplied
};

template <typename T>
ForwardTrace<T> forward_trace(const ColumnT<T>& col, const TensorT<T>& input);

// Composes all layers and returns softmax scores (widened to double).
ClassScores forward_column(const Column& col, const Tensor& input);

template <typename T>
struct BackwardResult {
  T loss = T(0);
  std::vector<LayerParamsT<T>> grads;  // aligned with ColumnT::params
};

template <typename T>
BackwardResult<T> backward_column(const ColumnT<T>& col, const TensorT<T>& input, int label);

// In-place SGD step: p -= lr * g.
template <typename T>
void sgd_update(ColumnT<T>& col, const std::vector<LayerParamsT<T>>& grads, T lr);

// Central finite differences on every parameter (double precision).
std::vector<LayerParamsT<double>> fd_gradients(const ColumnD& col, const TensorD& input,
                                               int label, double eps);

// Worst relative difference between two gradient sets:
// |a-n| / max(|a|+|n|, floor).
double max_rel_error(const std::vector<LayerParamsT<double>>& a,
                     const std::vector<LayerParamsT<double>>& b, double floor = 1e-6);

// Analytic-vs-finite-difference verification; returns the worst relative
// error over all parameters. Throws InvalidArgument on eps <= 0.
double grad_check(const Column& col, const Tensor& input, int label, double eps = 1e-5);

// Versioned binary container: magic "CCOL", u16 version, length-prefixed
// rendered arch string, u64 seed, then per-layer float32 weight and bias
// tensors in spec order. All integers and floats little-endian.
void save_column(const Column& col, const std::string& path);
void save_column(const Column& col, std::ostream& out);
Column load_column(const std::string& path);
Column load_column(std::istream& in, const std::string& name = "<stream>");

}  // namespace charcol
