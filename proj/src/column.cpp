#include "charcol/column.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "charcol/binio.hpp"

namespace charcol {

namespace {

constexpr char kMagic[4] = {'C', 'C', 'O', 'L'};
constexpr std::uint16_t kVersion = 1;

// 53-bit uniform in [0,1); mt19937_64 output is pinned by the standard, so
// initialization is reproducible across platforms and standard libraries.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct LayerFans {
  std::vector<int> w_dims;
  std::vector<int> b_dims;
  double fan_in = 0, fan_out = 0;
  bool has_params = false;
};

std::vector<LayerFans> parameter_layout(const ArchSpec& spec) {
  std::vector<LayerFans> out;
  int maps = 1, h = spec.input_h, w = spec.input_w;
  for (const auto& layer : spec.layers) {
    LayerFans f;
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      f.w_dims = {c->maps, maps, c->kernel, c->kernel};
      f.b_dims = {c->maps};
      f.fan_in = static_cast<double>(maps) * c->kernel * c->kernel;
      f.fan_out = static_cast<double>(c->maps) * c->kernel * c->kernel;
      f.has_params = true;
      maps = c->maps;
      h = h - c->kernel + 1;
      w = w - c->kernel + 1;
    } else if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
      h /= p->pool;
      w /= p->pool;
    } else {
      const auto& fc = std::get<FullLayer>(layer);
      const int fan_in = maps * h * w;
      f.w_dims = {fc.neurons, fan_in};
      f.b_dims = {fc.neurons};
      f.fan_in = fan_in;
      f.fan_out = fc.neurons;
      f.has_params = true;
      maps = fc.neurons;
      h = w = 1;
    }
    out.push_back(std::move(f));
  }
  return out;
}

template <typename T>
ColumnT<T> init_column_impl(const ArchSpec& spec, std::uint64_t seed) {
  infer_shapes(spec);  // rejects invalid specs up front
  ColumnT<T> col;
  col.spec = spec;
  col.seed = seed;
  std::mt19937_64 rng(seed);
  for (const auto& f : parameter_layout(spec)) {
    LayerParamsT<T> p;
    if (f.has_params) {
      p.w = TensorT<T>(f.w_dims);
      p.b = TensorT<T>(f.b_dims);
      const double limit = std::sqrt(6.0 / (f.fan_in + f.fan_out));
      for (auto& v : p.w.data)
        v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * limit);
    }
    col.params.push_back(std::move(p));
  }
  return col;
}

template <typename T>
void check_input_shape(const ColumnT<T>& col, const TensorT<T>& input) {
  const std::vector<int> want{1, col.spec.input_h, col.spec.input_w};
  if (input.dims != want)
    throw ShapeError("forward: input must be 1x" + std::to_string(col.spec.input_h) + "x" +
                     std::to_string(col.spec.input_w));
}

}  // namespace

Column init_column(const ArchSpec& spec, std::uint64_t seed) {
  return init_column_impl<float>(spec, seed);
}

ColumnD init_column_double(const ArchSpec& spec, std::uint64_t seed) {
  return init_column_impl<double>(spec, seed);
}

template <typename T>
ForwardTrace<T> forward_trace(const ColumnT<T>& col, const TensorT<T>& input) {
  check_input_shape(col, input);
  ForwardTrace<T> trace;
  trace.outputs.reserve(col.spec.layers.size());
  trace.argmax.resize(col.spec.layers.size());
  const TensorT<T>* cur = &input;
  for (std::size_t i = 0; i < col.spec.layers.size(); ++i) {
    const auto& layer = col.spec.layers[i];
    const auto& p = col.params[i];
    if (std::holds_alternative<ConvLayer>(layer)) {
      TensorT<T> out = conv_forward(*cur, p.w, p.b);
      for (auto& v : out.data) v = activation(v);
      trace.outputs.push_back(std::move(out));
    } else if (const auto* mp = std::get_if<MaxPoolLayer>(&layer)) {
      auto r = maxpool_forward(*cur, mp->pool);
      trace.argmax[i] = std::move(r.argmax);
      trace.outputs.push_back(std::move(r.out));
    } else {
      TensorT<T> out = fc_forward(*cur, p.w, p.b);
      if (i + 1 < col.spec.layers.size())  // hidden layer keeps its nonlinearity
        for (auto& v : out.data) v = activation(v);
      trace.outputs.push_back(std::move(out));
    }
    cur = &trace.outputs.back();
  }
  return trace;
}

template ForwardTrace<float> forward_trace(const ColumnT<float>&, const TensorT<float>&);
template ForwardTrace<double> forward_trace(const ColumnT<double>&, const TensorT<double>&);

ClassScores forward_column(const Column& col, const Tensor& input) {
  auto trace = forward_trace(col, input);
  auto scores = softmax(trace.outputs.back().data);
  ClassScores out;
  out.values.assign(scores.begin(), scores.end());
  return out;
}

template <typename T>
BackwardResult<T> backward_column(const ColumnT<T>& col, const TensorT<T>& input, int label) {
  auto trace = forward_trace(col, input);
  auto sm = softmax_xent(trace.outputs.back().data, label);

  BackwardResult<T> result;
  result.loss = sm.loss;
  result.grads.resize(col.spec.layers.size());

  TensorT<T> dcur({static_cast<int>(sm.dlogits.size())}, sm.dlogits);
  for (std::size_t ri = col.spec.layers.size(); ri-- > 0;) {
    const auto& layer = col.spec.layers[ri];
    const auto& p = col.params[ri];
    const TensorT<T>& layer_in = ri == 0 ? input : trace.outputs[ri - 1];
    if (std::holds_alternative<ConvLayer>(layer)) {
      const auto& y = trace.outputs[ri];
      for (std::size_t n = 0; n < dcur.data.size(); ++n)
        dcur.data[n] *= activation_grad_from_output(y.data[n]);
      auto g = conv_backward(layer_in, p.w, dcur, /*with_din=*/ri != 0);
      result.grads[ri] = {std::move(g.dw), std::move(g.db)};
      dcur = std::move(g.din);
    } else if (std::holds_alternative<MaxPoolLayer>(layer)) {
      dcur = maxpool_backward(trace.argmax[ri], layer_in.dims, dcur);
    } else {
      if (ri + 1 < col.spec.layers.size()) {
        const auto& y = trace.outputs[ri];
        for (std::size_t n = 0; n < dcur.data.size(); ++n)
          dcur.data[n] *= activation_grad_from_output(y.data[n]);
      }
      auto g = fc_backward(layer_in, p.w, dcur);
      result.grads[ri] = {std::move(g.dw), std::move(g.db)};
      dcur = std::move(g.din);
    }
  }
  return result;
}

template BackwardResult<float> backward_column(const ColumnT<float>&, const TensorT<float>&, int);
template BackwardResult<double> backward_column(const ColumnT<double>&, const TensorT<double>&,
                                                int);

template <typename T>
void sgd_update(ColumnT<T>& col, const std::vector<LayerParamsT<T>>& grads, T lr) {
  for (std::size_t i = 0; i < col.params.size(); ++i) {
    if (col.params[i].empty()) continue;
    auto& p = col.params[i];
    const auto& g = grads[i];
    for (std::size_t n = 0; n < p.w.data.size(); ++n) p.w.data[n] -= lr * g.w.data[n];
    for (std::size_t n = 0; n < p.b.data.size(); ++n) p.b.data[n] -= lr * g.b.data[n];
  }
}

template void sgd_update(ColumnT<float>&, const std::vector<LayerParamsT<float>>&, float);
template void sgd_update(ColumnT<double>&, const std::vector<LayerParamsT<double>>&, double);

namespace {

double loss_at(const ColumnD& col, const TensorD& input, int label) {
  auto trace = forward_trace(col, input);
  return softmax_xent(trace.outputs.back().data, label).loss;
}

}  // namespace

std::vector<LayerParamsT<double>> fd_gradients(const ColumnD& col, const TensorD& input,
                                               int label, double eps) {
  if (eps <= 0) throw InvalidArgument("fd_gradients: eps must be > 0");
  ColumnD work = col;
  std::vector<LayerParamsT<double>> grads(col.params.size());
  for (std::size_t i = 0; i < col.params.size(); ++i) {
    if (col.params[i].empty()) continue;
    grads[i].w = TensorT<double>(col.params[i].w.dims);
    grads[i].b = TensorT<double>(col.params[i].b.dims);
    for (auto [tensor, grad] : {std::pair{&work.params[i].w, &grads[i].w},
                                std::pair{&work.params[i].b, &grads[i].b}}) {
      for (std::size_t n = 0; n < tensor->data.size(); ++n) {
        const double saved = tensor->data[n];
        tensor->data[n] = saved + eps;
        const double up = loss_at(work, input, label);
        tensor->data[n] = saved - eps;
        const double down = loss_at(work, input, label);
        tensor->data[n] = saved;
        grad->data[n] = (up - down) / (2.0 * eps);
      }
    }
  }
  return grads;
}

double max_rel_error(const std::vector<LayerParamsT<double>>& a,
                     const std::vector<LayerParamsT<double>>& b, double floor) {
  if (a.size() != b.size()) throw InvalidArgument("max_rel_error: gradient sets differ in size");
  double worst = 0.0;
  auto scan = [&](const TensorT<double>& x, const TensorT<double>& y) {
    for (std::size_t n = 0; n < x.data.size(); ++n) {
      const double denom = std::max(std::abs(x.data[n]) + std::abs(y.data[n]), floor);
      worst = std::max(worst, std::abs(x.data[n] - y.data[n]) / denom);
    }
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    scan(a[i].w, b[i].w);
    scan(a[i].b, b[i].b);
  }
  return worst;
}

double grad_check(const Column& col, const Tensor& input, int label, double eps) {
  if (eps <= 0) throw InvalidArgument("grad_check: eps must be > 0");
  const ColumnD dcol = col.cast<double>();
  const TensorD dinput = input.cast<double>();
  const auto analytic = backward_column(dcol, dinput, label).grads;
  const auto numeric = fd_gradients(dcol, dinput, label, eps);
  return max_rel_error(analytic, numeric);
}

void save_column(const Column& col, std::ostream& out) {
  binio::write_bytes(out, kMagic, sizeof(kMagic));
  binio::write_le<std::uint16_t>(out, kVersion);
  const std::string arch = render_arch(col.spec);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(arch.size()));
  binio::write_bytes(out, arch.data(), arch.size());
  binio::write_le<std::uint64_t>(out, col.seed);
  for (const auto& p : col.params) {
    if (p.empty()) continue;
    for (float v : p.w.data) binio::write_f32(out, v);
    for (float v : p.b.data) binio::write_f32(out, v);
  }
}

void save_column(const Column& col, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  save_column(col, out);
  if (!out) throw DataError(path + ": write failed");
}

Column load_column(std::istream& in, const std::string& name) {
  char magic[4];
  binio::read_bytes(in, magic, sizeof(magic), name);
  if (!std::equal(magic, magic + 4, kMagic))
    throw DataError(name + ": bad magic, not a column file");
  const auto version = binio::read_le<std::uint16_t>(in, name);
  if (version != kVersion)
    throw DataError(name + ": unsupported column format version " + std::to_string(version));
  const auto arch_len = binio::read_le<std::uint32_t>(in, name);
  std::string arch(arch_len, '\0');
  binio::read_bytes(in, arch.data(), arch_len, name);
  const auto seed = binio::read_le<std::uint64_t>(in, name);

  Column col;
  col.spec = parse_arch(arch);
  col.seed = seed;
  for (const auto& f : parameter_layout(col.spec)) {
    LayerParamsT<float> p;
    if (f.has_params) {
      p.w = Tensor(f.w_dims);
      p.b = Tensor(f.b_dims);
      for (auto& v : p.w.data) v = binio::read_f32(in, name);
      for (auto& v : p.b.data) v = binio::read_f32(in, name);
    }
    col.params.push_back(std::move(p));
  }
  return col;
}

Column load_column(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  return load_column(in, path);
}

}  // namespace charcol
