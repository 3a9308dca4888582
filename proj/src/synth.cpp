#include "charcol/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace charcol {

namespace {

constexpr int kCanvas = 64;
constexpr double kPi = 3.14159265358979323846;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent substream key for (seed, a, b, c).
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b) ^ c);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

struct Point {
  double x, y;
};

// A stroke is a polyline; curves are quadratic Beziers flattened up front.
struct Stroke {
  std::vector<Point> points;
  double thickness = 2.0;
};

// Stroke endpoints snap to a corpus-wide anchor grid, so different classes
// share stroke positions and stay confusable the way characters are.
std::vector<Point> make_anchors(std::uint64_t key) {
  std::mt19937_64 rng(key);
  std::vector<Point> anchors;
  for (int gy = 0; gy < 4; ++gy)
    for (int gx = 0; gx < 4; ++gx)
      anchors.push_back({14.0 + gx * 12.0 + uniform(rng, -3.0, 3.0),
                         14.0 + gy * 12.0 + uniform(rng, -3.0, 3.0)});
  return anchors;
}

std::vector<Stroke> make_prototype(std::uint64_t key, const std::vector<Point>& anchors) {
  std::mt19937_64 rng(key);
  const int n_strokes = 3 + static_cast<int>(rng() % 3);  // 3..5
  std::vector<Stroke> strokes;
  for (int s = 0; s < n_strokes; ++s) {
    Stroke st;
    const Point& pa = anchors[rng() % anchors.size()];
    Point b;
    do {
      b = anchors[rng() % anchors.size()];
    } while (b.x == pa.x && b.y == pa.y);
    const Point a{pa.x + uniform(rng, -2.0, 2.0), pa.y + uniform(rng, -2.0, 2.0)};
    b.x += uniform(rng, -2.0, 2.0);
    b.y += uniform(rng, -2.0, 2.0);
    if (rng() % 2 == 0) {
      st.points = {a, b};
    } else {
      // curved stroke: bow the midpoint sideways
      const Point mid{(a.x + b.x) / 2 + uniform(rng, -8.0, 8.0),
                      (a.y + b.y) / 2 + uniform(rng, -8.0, 8.0)};
      const int segs = 12;
      for (int i = 0; i <= segs; ++i) {
        const double t = static_cast<double>(i) / segs;
        const double u = 1.0 - t;
        st.points.push_back({u * u * a.x + 2 * u * t * mid.x + t * t * b.x,
                             u * u * a.y + 2 * u * t * mid.y + t * t * b.y});
      }
    }
    strokes.push_back(std::move(st));
  }
  return strokes;
}

// Per-writer systematic style; per-sample jitter is drawn around these.
struct WriterStyle {
  double slant;      // x shear per unit y
  double scale;      // size bias
  double rotate;     // radians bias
  double thickness;  // stroke half-width base
  double noise;      // endpoint jitter magnitude, pixels
  double grain;      // per-pixel intensity noise, gray levels
  int ink;           // stroke intensity
  int background;    // paper intensity
};

WriterStyle make_style(std::uint64_t key) {
  std::mt19937_64 rng(key);
  WriterStyle st;
  st.slant = uniform(rng, -0.35, 0.35);
  st.scale = uniform(rng, 0.8, 1.15);
  st.rotate = uniform(rng, -10.0, 10.0) * kPi / 180.0;
  st.thickness = uniform(rng, 1.0, 2.8);
  st.noise = uniform(rng, 1.0, 3.2);
  st.grain = uniform(rng, 3.0, 8.0);
  st.ink = static_cast<int>(uniform(rng, 20.0, 80.0));
  st.background = static_cast<int>(uniform(rng, 225.0, 250.0));
  return st;
}

double dist_to_segment(double px, double py, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

void rasterize(std::vector<double>& coverage, const Stroke& st) {
  for (std::size_t i = 0; i + 1 < st.points.size(); ++i) {
    const Point a = st.points[i], b = st.points[i + 1];
    const double pad = st.thickness + 1.5;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - pad)));
    const int x1 = std::min(kCanvas - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + pad)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - pad)));
    const int y1 = std::min(kCanvas - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + pad)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d = dist_to_segment(x + 0.5, y + 0.5, a, b);
        const double cov = std::clamp(st.thickness / 2 + 0.5 - d, 0.0, 1.0);
        if (cov > 0) {
          double& cell = coverage[static_cast<std::size_t>(y) * kCanvas + x];
          cell = std::max(cell, cov);
        }
      }
    }
  }
}

GrayImage render_sample(const std::vector<Stroke>& proto, const WriterStyle& style,
                        std::uint64_t key) {
  std::mt19937_64 rng(key);
  const double rotate = style.rotate + uniform(rng, -5.0, 5.0) * kPi / 180.0;
  const double scale = style.scale * uniform(rng, 0.92, 1.08);
  const double slant = style.slant + uniform(rng, -0.06, 0.06);
  const double tx = uniform(rng, -3.5, 3.5);
  const double ty = uniform(rng, -3.5, 3.5);
  const double cx = kCanvas / 2.0, cy = kCanvas / 2.0;
  const double cosr = std::cos(rotate), sinr = std::sin(rotate);

  std::vector<Stroke> strokes;
  strokes.reserve(proto.size());
  for (const auto& src : proto) {
    Stroke st;
    st.thickness = std::max(0.8, style.thickness + uniform(rng, -0.4, 0.4));
    // One jitter vector per endpoint pair keeps curves smooth.
    const double jx0 = uniform(rng, -style.noise, style.noise);
    const double jy0 = uniform(rng, -style.noise, style.noise);
    const double jx1 = uniform(rng, -style.noise, style.noise);
    const double jy1 = uniform(rng, -style.noise, style.noise);
    const std::size_t n = src.points.size();
    st.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
      double x = src.points[i].x + jx0 * (1 - t) + jx1 * t;
      double y = src.points[i].y + jy0 * (1 - t) + jy1 * t;
      // shear, then rotate+scale about the canvas center, then translate
      x += slant * (y - cy);
      const double rx = cx + scale * (cosr * (x - cx) - sinr * (y - cy)) + tx;
      const double ry = cy + scale * (sinr * (x - cx) + cosr * (y - cy)) + ty;
      st.points.push_back({rx, ry});
    }
    strokes.push_back(std::move(st));
  }

  std::vector<double> coverage(static_cast<std::size_t>(kCanvas) * kCanvas, 0.0);
  for (const auto& st : strokes) rasterize(coverage, st);

  const double bg = style.background + uniform(rng, -4.0, 4.0);
  const double ink = style.ink + uniform(rng, -6.0, 6.0);
  GrayImage img(kCanvas, kCanvas);
  for (std::size_t i = 0; i < coverage.size(); ++i) {
    // paper grain rides on top of the stroke rendering
    const double v = bg + (ink - bg) * coverage[i] + uniform(rng, -style.grain, style.grain);
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::floor(v + 0.5)), 0, 255));
  }
  return img;
}

}  // namespace

Dataset synth_glyphs(int class_count, int per_class, int writers, std::uint64_t seed) {
  if (class_count < 1 || per_class < 1 || writers < 1)
    throw InvalidArgument("synth_glyphs: all counts must be >= 1");

  Dataset ds;
  ds.class_count = static_cast<std::uint32_t>(class_count);
  ds.samples.reserve(static_cast<std::size_t>(class_count) * per_class);

  std::vector<WriterStyle> styles;
  styles.reserve(writers);
  for (int w = 0; w < writers; ++w) styles.push_back(make_style(stream_key(seed, 1, w)));
  const auto anchors = make_anchors(stream_key(seed, 4));

  for (int c = 0; c < class_count; ++c) {
    const auto proto = make_prototype(stream_key(seed, 2, c), anchors);
    for (int i = 0; i < per_class; ++i) {
      const int writer = i % writers;
      Sample s;
      s.label = static_cast<std::uint32_t>(c);
      s.writer = static_cast<std::uint32_t>(writer);
      s.image = render_sample(proto, styles[writer], stream_key(seed, 3, c, i));
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace charcol
