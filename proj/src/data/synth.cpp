#include "finclass/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "finclass/error.hpp"
#include "finclass/parallel.hpp"

namespace finclass::data {

namespace {

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : gen_(seed) {}
  double operator()() { return static_cast<double>(gen_() >> 11) * 0x1p-53; }
  double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

 private:
  std::mt19937_64 gen_;
};

// Shape membership in unit local coordinates (u along the major axis).
bool inside(ShapeKind kind, double u, double v) {
  switch (kind) {
    case ShapeKind::kEllipse:
      return u * u + (v * v) / (0.6 * 0.6) <= 1.0;
    case ShapeKind::kTriangle: {
      // Equilateral, circumradius 1, apex on +u.
      constexpr double kSqrt3 = std::numbers::sqrt3;
      return u >= -0.5 && v <= (1.0 - u) / kSqrt3 && -v <= (1.0 - u) / kSqrt3;
    }
    case ShapeKind::kCrescent:
      return u * u + v * v <= 1.0 &&
             (u - 0.55) * (u - 0.55) + v * v > 0.8 * 0.8;
    case ShapeKind::kBar:
      return std::abs(u) <= 1.0 && std::abs(v) <= 0.3;
    case ShapeKind::kRing: {
      const double r2 = u * u + v * v;
      return r2 <= 1.0 && r2 >= 0.5 * 0.5;
    }
  }
  return false;
}

std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

}  // namespace

std::string shape_name(ShapeKind kind) {
  static constexpr std::array<const char*, kMaxSynthClasses> kNames = {
      "ellipse", "triangle", "crescent", "bar", "ring"};
  return kNames.at(static_cast<std::size_t>(kind));
}

SynthFrame synth_render(ShapeKind kind, std::uint64_t seed) {
  constexpr std::size_t n = kInputSide;
  Uniform rng(seed);

  std::array<double, 3> bg{}, fg{};
  for (auto& c : bg) c = rng(15.0, 55.0);
  for (auto& c : fg) c = rng(150.0, 235.0);
  const double cx = rng(38.0, 62.0);
  const double cy = rng(38.0, 62.0);
  const double scale = rng(20.0, 28.0);
  const double theta = rng(0.0, 2.0 * std::numbers::pi);
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);

  SynthFrame f{imgproc::Image(n, n, 3), imgproc::BinaryMask(n, n), {n, n, 0, 0}};
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double u = (cs * dx + sn * dy) / scale;
      const double v = (-sn * dx + cs * dy) / scale;
      const bool on = inside(kind, u, v);
      const auto& base = on ? fg : bg;
      const double noise = on ? 8.0 : 14.0;
      for (std::size_t c = 0; c < 3; ++c) {
        f.rgb.at(x, y, c) = clamp_byte(base[c] + rng(-noise, noise));
      }
      if (on) {
        f.shape.set(x, y, true);
        f.box.x0 = std::min(f.box.x0, x);
        f.box.y0 = std::min(f.box.y0, y);
        f.box.x1 = std::max(f.box.x1, x);
        f.box.y1 = std::max(f.box.y1, y);
      }
    }
  }
  return f;
}

std::uint64_t synth_sample_seed(std::uint64_t seed, std::size_t label,
                                std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(label),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

std::vector<ShapeKind> synth_classes(std::size_t n_classes) {
  if (n_classes < 2 || n_classes > kMaxSynthClasses) {
    throw InvalidParameter("synthetic class count must be 2.." +
                           std::to_string(kMaxSynthClasses) + ", got " +
                           std::to_string(n_classes));
  }
  std::vector<ShapeKind> kinds;
  for (std::size_t c = 0; c < n_classes; ++c) {
    kinds.push_back(static_cast<ShapeKind>(c));
  }
  std::sort(kinds.begin(), kinds.end(), [](ShapeKind a, ShapeKind b) {
    return shape_name(a) < shape_name(b);
  });
  return kinds;
}

Dataset synth_generate(std::size_t n_classes, std::size_t per_class,
                       std::uint64_t seed,
                       const imgproc::PreprocessConfig& cfg,
                       unsigned threads) {
  const std::vector<ShapeKind> kinds = synth_classes(n_classes);
  if (per_class == 0) {
    throw InvalidParameter("synthetic per_class must be at least 1");
  }
  Dataset ds;
  for (ShapeKind kind : kinds) ds.class_names.push_back(shape_name(kind));
  ds.samples.resize(kinds.size() * per_class);
  parallel_for(ds.samples.size(), threads, [&](std::size_t n) {
    const std::size_t label = n / per_class;
    const std::size_t i = n % per_class;
    const ShapeKind kind = kinds[label];
    const SynthFrame f = synth_render(
        kind, synth_sample_seed(seed, static_cast<std::size_t>(kind), i));
    ds.samples[n] = {
        stack_channels(f.rgb, imgproc::segment_foreground(f.rgb, cfg)), label,
        "synth/" + ds.class_names[label] + "/" + std::to_string(i)};
  });
  return ds;
}

}  // namespace finclass::data
