#include <algorithm>
#include <cmath>
#include <string>

#include "finclass/error.hpp"
#include "finclass/imgproc/ops.hpp"

namespace finclass::imgproc {

namespace {

void check_se(StructuringElement se) {
  if (se.size == 0 || se.size % 2 == 0) {
    throw InvalidParameter("structuring element size must be odd, got " +
                           std::to_string(se.size));
  }
}

void check_iterations(int iterations) {
  if (iterations < 1) {
    throw InvalidParameter("morphology iterations must be >= 1");
  }
}

// One pass. For erosion a pixel survives iff every window sample is on;
// for dilation it turns on iff any sample is on.
BinaryMask sweep(const BinaryMask& in, StructuringElement se, bool erosion,
                 Border border) {
  const auto w = static_cast<long>(in.width());
  const auto h = static_cast<long>(in.height());
  const auto r = static_cast<long>(se.radius());
  const bool outside_on = border == Border::kForeground;
  BinaryMask out(in.width(), in.height());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      bool hit = !erosion;
      bool result = erosion;
      for (long dy = -r; dy <= r && result == erosion; ++dy) {
        for (long dx = -r; dx <= r; ++dx) {
          const long xx = x + dx, yy = y + dy;
          const bool inside = xx >= 0 && xx < w && yy >= 0 && yy < h;
          const bool v = inside ? in.on(static_cast<std::size_t>(xx),
                                        static_cast<std::size_t>(yy))
                                : outside_on;
          if (v == hit) {
            result = !erosion;
            break;
          }
        }
      }
      out.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
              result);
    }
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, StructuringElement se, int iterations,
                 Border border) {
  check_se(se);
  check_iterations(iterations);
  BinaryMask out = mask;
  for (int i = 0; i < iterations; ++i) out = sweep(out, se, true, border);
  return out;
}

BinaryMask dilate(const BinaryMask& mask, StructuringElement se, int iterations,
                  Border border) {
  check_se(se);
  check_iterations(iterations);
  BinaryMask out = mask;
  for (int i = 0; i < iterations; ++i) out = sweep(out, se, false, border);
  return out;
}

BinaryMask morphological_open(const BinaryMask& mask, StructuringElement se,
                              int iterations) {
  return dilate(erode(mask, se, iterations), se, iterations);
}

DistanceMap distance_transform(const BinaryMask& mask, DistanceMetric metric) {
  struct Step {
    long dx, dy;
    float cost;
  };
  const float diag = metric == DistanceMetric::kL1 ? 2.0f : std::sqrt(2.0f);
  // Causal half of the neighbourhood (already visited in a raster scan);
  // the backward pass uses the mirrored offsets.
  std::vector<Step> steps = {{-1, 0, 1.0f}, {0, -1, 1.0f}, {-1, -1, diag},
                             {1, -1, diag}};
  if (metric == DistanceMetric::kL2) {
    const float knight = std::sqrt(5.0f);
    steps.insert(steps.end(), {{-2, -1, knight},
                               {-1, -2, knight},
                               {1, -2, knight},
                               {2, -1, knight}});
  }

  const auto w = static_cast<long>(mask.width());
  const auto h = static_cast<long>(mask.height());
  const auto sentinel = static_cast<float>(w + h);
  DistanceMap map{mask.width(), mask.height(),
                  std::vector<float>(mask.size(), sentinel)};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == BinaryMask::kOff) map.data[i] = 0.0f;
  }

  auto relax = [&](long x, long y, long sign) {
    float& d = map.data[static_cast<std::size_t>(y * w + x)];
    if (d == 0.0f) return;
    for (const auto& s : steps) {
      const long xx = x + sign * s.dx, yy = y + sign * s.dy;
      if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
      d = std::min(d, map.data[static_cast<std::size_t>(yy * w + xx)] + s.cost);
    }
  };
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) relax(x, y, 1);
  }
  for (long y = h - 1; y >= 0; --y) {
    for (long x = w - 1; x >= 0; --x) relax(x, y, -1);
  }
  return map;
}

BinaryMask threshold_fraction(const DistanceMap& map, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidParameter("distance fraction must lie in (0, 1]");
  }
  const double cutoff = fraction * static_cast<double>(map.max());
  BinaryMask out(map.width, map.height);
  for (std::size_t y = 0; y < map.height; ++y) {
    for (std::size_t x = 0; x < map.width; ++x) {
      out.set(x, y, static_cast<double>(map.at(x, y)) > cutoff);
    }
  }
  return out;
}

BinaryMask mask_subtract(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidInput("mask_subtract dimension mismatch");
  }
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a[i] > b[i] ? static_cast<std::uint8_t>(a[i] - b[i]) : 0;
  }
  return BinaryMask(a.width(), a.height(), std::move(out));
}

}  // namespace finclass::imgproc
