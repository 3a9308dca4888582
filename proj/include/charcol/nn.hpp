#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "charcol/errors.hpp"
#include "charcol/tensor.hpp"

// Layer primitives for one column. Every loop nest below fixes its
// accumulation order (row-major, filter taps innermost for convolution), so
// results are bit-for-bit reproducible for a given (input, parameters).

namespace charcol {

template <typename T>
T activation(T x) {
  return std::tanh(x);
}

template <typename T>
T activation_grad(T x) {
  const T t = std::tanh(x);
  return T(1) - t * t;
}

// Derivative expressed via the stored output y = tanh(x).
template <typename T>
T activation_grad_from_output(T y) {
  return T(1) - y * y;
}

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ShapeError(what);
}

}  // namespace detail

namespace detail {

// Kernel-size-specialized row pass: out row += taps of one (c, i) slice.
// The per-element accumulation order stays (c, i, j) regardless of K.
template <int K, typename T>
void conv_rows_fixed(T* __restrict row, const T* __restrict src, const T* __restrict wt,
                     int wo) {
  for (int x = 0; x < wo; ++x) {
    T acc = row[x];
    for (int j = 0; j < K; ++j) acc += src[x + j] * wt[j];
    row[x] = acc;
  }
}

template <typename T>
void conv_rows_generic(T* __restrict row, const T* __restrict src, const T* __restrict wt,
                       int wo, int k) {
  for (int j = 0; j < k; ++j) {
    const T wv = wt[j];
    for (int x = 0; x < wo; ++x) row[x] += src[x + j] * wv;
  }
}

// Weight-gradient pass for one (m, c) pair with a compile-time kernel size,
// so all K*K partial sums live in registers. Each tap accumulates in
// row-major (y, x) order over the output.
template <int K, typename T>
void conv_dw_fixed(T* __restrict dw, const T* __restrict in, const T* __restrict dout,
                   int H, int W, int Ho, int Wo) {
  (void)H;
  T acc[K * K] = {};
  for (int y = 0; y < Ho; ++y) {
    const T* __restrict drow = dout + static_cast<std::size_t>(y) * Wo;
    const T* __restrict srow = in + static_cast<std::size_t>(y) * W;
    for (int x = 0; x < Wo; ++x) {
      const T d = drow[x];
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) acc[i * K + j] += d * srow[i * W + x + j];
    }
  }
  for (int t = 0; t < K * K; ++t) dw[t] = acc[t];
}

}  // namespace detail

// in [C,H,W], w [M,C,k,k], b [M] -> out [M,H-k+1,W-k+1]
// out[m,y,x] = b[m] + sum over (c,i,j) of in[c,y+i,x+j] * w[m,c,i,j],
// accumulated in (c,i,j) order per output element.
template <typename T>
TensorT<T> conv_forward(const TensorT<T>& in, const TensorT<T>& w, const TensorT<T>& b) {
  detail::require(in.dims.size() == 3, "conv_forward: input must be [C,H,W]");
  detail::require(w.dims.size() == 4, "conv_forward: weights must be [M,C,k,k]");
  const int C = in.dims[0], H = in.dims[1], W = in.dims[2];
  const int M = w.dims[0], k = w.dims[2];
  detail::require(w.dims[1] == C && w.dims[3] == k, "conv_forward: weight/input map mismatch");
  detail::require(b.dims == std::vector<int>{M}, "conv_forward: bias must be [M]");
  detail::require(H >= k && W >= k, "conv_forward: kernel exceeds input");
  const int Ho = H - k + 1, Wo = W - k + 1;

  TensorT<T> out({M, Ho, Wo});
  for (int m = 0; m < M; ++m) {
    for (int y = 0; y < Ho; ++y) {
      T* row = &out.data[(static_cast<std::size_t>(m) * Ho + y) * Wo];
      const T bias = b.data[m];
      for (int x = 0; x < Wo; ++x) row[x] = bias;
      for (int c = 0; c < C; ++c) {
        for (int i = 0; i < k; ++i) {
          const T* src = &in.data[(static_cast<std::size_t>(c) * H + y + i) * W];
          const T* wt = &w.data[((static_cast<std::size_t>(m) * C + c) * k + i) * k];
          switch (k) {
            case 1: detail::conv_rows_fixed<1>(row, src, wt, Wo); break;
            case 2: detail::conv_rows_fixed<2>(row, src, wt, Wo); break;
            case 3: detail::conv_rows_fixed<3>(row, src, wt, Wo); break;
            case 4: detail::conv_rows_fixed<4>(row, src, wt, Wo); break;
            case 5: detail::conv_rows_fixed<5>(row, src, wt, Wo); break;
            default: detail::conv_rows_generic(row, src, wt, Wo, k);
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
struct ConvGrads {
  TensorT<T> din, dw, db;
};

// `with_din` skips the input-gradient pass; the first layer never needs it.
template <typename T>
ConvGrads<T> conv_backward(const TensorT<T>& in, const TensorT<T>& w, const TensorT<T>& dout,
                           bool with_din = true) {
  const int C = in.dims[0], H = in.dims[1], W = in.dims[2];
  const int M = w.dims[0], k = w.dims[2];
  const int Ho = H - k + 1, Wo = W - k + 1;
  detail::require(dout.dims == std::vector<int>{M, Ho, Wo},
                  "conv_backward: upstream gradient shape mismatch");

  ConvGrads<T> g{TensorT<T>(), TensorT<T>({M, C, k, k}), TensorT<T>({M})};
  if (with_din) g.din = TensorT<T>({C, H, W});
  for (int m = 0; m < M; ++m) {
    T acc = T(0);
    const T* dbase = &dout.data[static_cast<std::size_t>(m) * Ho * Wo];
    for (int i = 0; i < Ho * Wo; ++i) acc += dbase[i];
    g.db.data[m] = acc;
  }
  // dw[m,c,i,j] accumulates over output positions in row-major (y,x) order;
  // the k*k taps advance together so the sums are independent chains.
  for (int m = 0; m < M; ++m) {
    for (int c = 0; c < C; ++c) {
      const T* din_base = &in.data[static_cast<std::size_t>(c) * H * W];
      const T* dout_base = &dout.data[static_cast<std::size_t>(m) * Ho * Wo];
      T* dw_out = &g.dw.data[(static_cast<std::size_t>(m) * C + c) * k * k];
      switch (k) {
        case 1: detail::conv_dw_fixed<1>(dw_out, din_base, dout_base, H, W, Ho, Wo); break;
        case 2: detail::conv_dw_fixed<2>(dw_out, din_base, dout_base, H, W, Ho, Wo); break;
        case 3: detail::conv_dw_fixed<3>(dw_out, din_base, dout_base, H, W, Ho, Wo); break;
        case 4: detail::conv_dw_fixed<4>(dw_out, din_base, dout_base, H, W, Ho, Wo); break;
        case 5: detail::conv_dw_fixed<5>(dw_out, din_base, dout_base, H, W, Ho, Wo); break;
        default:
          for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
              T acc = T(0);
              for (int y = 0; y < Ho; ++y) {
                const T* drow = dout_base + static_cast<std::size_t>(y) * Wo;
                const T* srow = din_base + (static_cast<std::size_t>(y) + i) * W + j;
                for (int x = 0; x < Wo; ++x) acc += drow[x] * srow[x];
              }
              dw_out[i * k + j] = acc;
            }
          }
      }
    }
  }
  if (!with_din) return g;
  // din[c,y+i,x+j] accumulates in (m,c,i,j,y,x) loop order.
  for (int m = 0; m < M; ++m) {
    for (int c = 0; c < C; ++c) {
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          const T wv = w.data[((static_cast<std::size_t>(m) * C + c) * k + i) * k + j];
          for (int y = 0; y < Ho; ++y) {
            const T* __restrict drow = &dout.data[(static_cast<std::size_t>(m) * Ho + y) * Wo];
            T* __restrict irow = &g.din.data[(static_cast<std::size_t>(c) * H + y + i) * W + j];
            for (int x = 0; x < Wo; ++x) irow[x] += wv * drow[x];
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
struct PoolResult {
  TensorT<T> out;
  std::vector<int> argmax;  // flat index into the input tensor, per output cell
};

// Non-overlapping max pooling; ties go to the first element in scan order.
template <typename T>
PoolResult<T> maxpool_forward(const TensorT<T>& in, int pool) {
  detail::require(in.dims.size() == 3, "maxpool_forward: input must be [M,H,W]");
  const int M = in.dims[0], H = in.dims[1], W = in.dims[2];
  detail::require(pool >= 1 && H % pool == 0 && W % pool == 0,
                  "maxpool_forward: pool size must divide input exactly");
  const int Ho = H / pool, Wo = W / pool;

  PoolResult<T> r{TensorT<T>({M, Ho, Wo}), {}};
  r.argmax.resize(r.out.size());
  std::size_t o = 0;
  for (int m = 0; m < M; ++m) {
    for (int y = 0; y < Ho; ++y) {
      for (int x = 0; x < Wo; ++x, ++o) {
        int best = (static_cast<int>(m) * H + y * pool) * W + x * pool;
        T best_v = in.data[best];
        for (int i = 0; i < pool; ++i) {
          for (int j = 0; j < pool; ++j) {
            const int idx = (m * H + y * pool + i) * W + x * pool + j;
            if (in.data[idx] > best_v) {
              best_v = in.data[idx];
              best = idx;
            }
          }
        }
        r.out.data[o] = best_v;
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

template <typename T>
TensorT<T> maxpool_backward(const std::vector<int>& argmax, const std::vector<int>& in_dims,
                            const TensorT<T>& dout) {
  TensorT<T> din(in_dims);
  detail::require(argmax.size() == dout.size(), "maxpool_backward: argmax/gradient mismatch");
  for (std::size_t o = 0; o < dout.size(); ++o) din.data[argmax[o]] += dout.data[o];
  return din;
}

// in [n_in] (flattened), w [n_out,n_in], b [n_out] -> w*in + b
template <typename T>
TensorT<T> fc_forward(const TensorT<T>& in, const TensorT<T>& w, const TensorT<T>& b) {
  detail::require(w.dims.size() == 2, "fc_forward: weights must be [n_out,n_in]");
  const int n_out = w.dims[0], n_in = w.dims[1];
  detail::require(static_cast<int>(in.size()) == n_in, "fc_forward: input length mismatch");
  detail::require(b.dims == std::vector<int>{n_out}, "fc_forward: bias must be [n_out]");

  TensorT<T> out({n_out});
  for (int o = 0; o < n_out; ++o) {
    T acc = b.data[o];
    const T* row = &w.data[static_cast<std::size_t>(o) * n_in];
    for (int i = 0; i < n_in; ++i) acc += row[i] * in.data[i];
    out.data[o] = acc;
  }
  return out;
}

template <typename T>
struct FcGrads {
  TensorT<T> din, dw, db;
};

template <typename T>
FcGrads<T> fc_backward(const TensorT<T>& in, const TensorT<T>& w, const TensorT<T>& dout) {
  const int n_out = w.dims[0], n_in = w.dims[1];
  detail::require(static_cast<int>(dout.size()) == n_out,
                  "fc_backward: upstream gradient length mismatch");
  FcGrads<T> g{TensorT<T>(in.dims), TensorT<T>(w.dims), TensorT<T>({n_out})};
  g.db.data = dout.data;
  for (int o = 0; o < n_out; ++o) {
    const T dv = dout.data[o];
    const T* wrow = &w.data[static_cast<std::size_t>(o) * n_in];
    T* dwrow = &g.dw.data[static_cast<std::size_t>(o) * n_in];
    for (int i = 0; i < n_in; ++i) {
      dwrow[i] = dv * in.data[i];
      g.din.data[i] += wrow[i] * dv;
    }
  }
  return g;
}

// Numerically stable softmax (max subtraction).
template <typename T>
std::vector<T> softmax(const std::vector<T>& logits) {
  detail::require(!logits.empty(), "softmax: empty logits");
  T zmax = logits[0];
  for (T z : logits) zmax = std::max(zmax, z);
  std::vector<T> scores;
  scores.reserve(logits.size());
  T sum = T(0);
  for (T z : logits) {
    const T e = std::exp(z - zmax);
    scores.push_back(e);
    sum += e;
  }
  for (T& s : scores) s /= sum;
  return scores;
}

template <typename T>
struct SoftmaxResult {
  std::vector<T> scores;
  T loss = T(0);
  std::vector<T> dlogits;
};

// Softmax + cross entropy against one label; dlogits = scores - onehot(label).
template <typename T>
SoftmaxResult<T> softmax_xent(const std::vector<T>& logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size()))
    throw InvalidArgument("softmax_xent: label " + std::to_string(label) +
                          " out of range for " + std::to_string(logits.size()) + " classes");
  SoftmaxResult<T> r;
  r.scores = softmax(logits);
  r.loss = -std::log(std::max(r.scores[label], std::numeric_limits<T>::min()));
  r.dlogits = r.scores;
  r.dlogits[label] -= T(1);
  return r;
}

}  // namespace charcol
