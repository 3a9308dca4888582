#include "charcol/arch.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace charcol {

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

// Strict positive-integer parse; rejects leading '+', whitespace, overflow.
std::optional<int> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '-') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

LayerSpec parse_layer_token(const std::string& tok, std::size_t index) {
  if (tok.rfind("MP", 0) == 0) {
    auto p = parse_int(std::string_view(tok).substr(2));
    if (!p) throw ParseError("malformed max-pooling token '" + tok + "'", index);
    if (*p < 2) throw ParseError("pooling size must be >= 2 in '" + tok + "'", index);
    return MaxPoolLayer{*p};
  }
  std::size_t suffix = 0;  // "N" and "FC" both mean fully connected
  if (tok.size() > 2 && tok.compare(tok.size() - 2, 2, "FC") == 0)
    suffix = 2;
  else if (tok.size() > 1 && tok.back() == 'N')
    suffix = 1;
  if (suffix != 0) {
    auto n = parse_int(std::string_view(tok).substr(0, tok.size() - suffix));
    if (!n) throw ParseError("malformed fully connected token '" + tok + "'", index);
    if (*n < 1)
      throw ParseError("fully connected neuron count must be >= 1 in '" + tok + "'", index);
    return FullLayer{*n};
  }
  auto cpos = tok.find('C');
  if (cpos != std::string::npos) {
    auto maps = parse_int(std::string_view(tok).substr(0, cpos));
    auto kernel = parse_int(std::string_view(tok).substr(cpos + 1));
    if (!maps || !kernel)
      throw ParseError("malformed convolution token '" + tok + "'", index);
    if (*maps < 1 || *kernel < 1)
      throw ParseError("convolution maps and kernel must be >= 1 in '" + tok + "'", index);
    return ConvLayer{*maps, *kernel};
  }
  throw ParseError("unrecognized layer token '" + tok + "'", index);
}

}  // namespace

int ArchSpec::class_count() const {
  if (layers.empty()) return 0;
  if (const auto* fc = std::get_if<FullLayer>(&layers.back())) return fc->neurons;
  return 0;
}

ArchSpec parse_arch(const std::string& text) {
  if (text.empty()) throw ParseError("empty architecture string", 0);
  auto tokens = split_tokens(text);

  ArchSpec spec;
  const auto& size_tok = tokens[0];
  auto xpos = size_tok.find('x');
  if (xpos == std::string::npos)
    throw ParseError("missing input-size token (expected HxW) before '" + size_tok + "'", 0);
  auto h = parse_int(std::string_view(size_tok).substr(0, xpos));
  auto w = parse_int(std::string_view(size_tok).substr(xpos + 1));
  if (!h || !w || *h < 1 || *w < 1)
    throw ParseError("malformed input-size token '" + size_tok + "'", 0);
  spec.input_h = *h;
  spec.input_w = *w;

  bool seen_full = false;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    if (tok.empty()) throw ParseError("empty token", i);
    if (i == tokens.size() - 1 && all_digits(tok)) {
      spec.tag = tok;
      continue;
    }
    LayerSpec layer = parse_layer_token(tok, i);
    if (std::holds_alternative<FullLayer>(layer)) {
      seen_full = true;
    } else if (seen_full) {
      throw ParseError("fully connected layer precedes '" + tok + "'", i);
    }
    spec.layers.push_back(layer);
  }

  if (spec.layers.empty())
    throw ParseError("architecture has no layers", tokens.size() - 1);
  if (!std::holds_alternative<ConvLayer>(spec.layers.front()))
    throw ParseError("first layer must be convolutional", 1);
  if (!std::holds_alternative<FullLayer>(spec.layers.back()))
    throw ParseError("last layer must be fully connected", tokens.size() - 1);

  infer_shapes(spec);  // divisibility and positivity are parse-time errors
  return spec;
}

std::string render_arch(const ArchSpec& spec) {
  std::ostringstream out;
  out << spec.input_h << 'x' << spec.input_w;
  for (const auto& layer : spec.layers) {
    out << '-';
    if (const auto* c = std::get_if<ConvLayer>(&layer))
      out << c->maps << 'C' << c->kernel;
    else if (const auto* p = std::get_if<MaxPoolLayer>(&layer))
      out << "MP" << p->pool;
    else
      out << std::get<FullLayer>(layer).neurons << 'N';
  }
  if (spec.tag) out << '-' << *spec.tag;
  return out.str();
}

ShapePlan infer_shapes(const ArchSpec& spec) {
  ShapePlan plan;
  std::uint64_t maps = 1;
  std::uint64_t h = static_cast<std::uint64_t>(spec.input_h);
  std::uint64_t w = static_cast<std::uint64_t>(spec.input_w);

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    LayerShape shape;
    const auto& layer = spec.layers[i];
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      std::uint64_t k = static_cast<std::uint64_t>(c->kernel);
      if (h < k || w < k)
        throw ShapeError("layer " + std::to_string(i + 1) + ": kernel " +
                         std::to_string(c->kernel) + " exceeds input " +
                         std::to_string(h) + "x" + std::to_string(w));
      shape.maps = c->maps;
      shape.h = static_cast<int>(h - k + 1);
      shape.w = static_cast<int>(w - k + 1);
      shape.params = static_cast<std::uint64_t>(c->maps) * (maps * k * k + 1);
      shape.madds = static_cast<std::uint64_t>(c->maps) * shape.h * shape.w * maps * k * k;
    } else if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
      std::uint64_t pool = static_cast<std::uint64_t>(p->pool);
      if (h % pool != 0 || w % pool != 0)
        throw ShapeError("layer " + std::to_string(i + 1) + ": pooling " +
                         std::to_string(p->pool) + " does not divide " +
                         std::to_string(h) + "x" + std::to_string(w));
      shape.maps = static_cast<int>(maps);
      shape.h = static_cast<int>(h / pool);
      shape.w = static_cast<int>(w / pool);
    } else {
      const auto& fc = std::get<FullLayer>(layer);
      std::uint64_t fan_in = maps * h * w;
      shape.maps = fc.neurons;
      shape.h = 1;
      shape.w = 1;
      shape.params = static_cast<std::uint64_t>(fc.neurons) * (fan_in + 1);
      shape.madds = static_cast<std::uint64_t>(fc.neurons) * fan_in;
    }
    maps = static_cast<std::uint64_t>(shape.maps);
    h = static_cast<std::uint64_t>(shape.h);
    w = static_cast<std::uint64_t>(shape.w);
    plan.total_params += shape.params;
    plan.total_madds += shape.madds;
    plan.layers.push_back(shape);
  }
  return plan;
}

CostSummary count_cost(const ShapePlan& plan) {
  return CostSummary{plan.total_params, plan.total_madds};
}

}  // namespace charcol
