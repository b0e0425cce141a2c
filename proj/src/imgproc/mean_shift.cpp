#include <algorithm>
#include <array>
#include <cmath>

#include "finclass/error.hpp"
#include "finclass/imgproc/ops.hpp"

namespace finclass::imgproc {

namespace {

using Color = std::array<double, 3>;

void check_params(const MeanShiftParams& p) {
  if (p.spatial_radius <= 0 || !(p.color_radius > 0.0)) {
    throw InvalidParameter("mean-shift radii must be positive");
  }
  if (p.max_iterations < 1) {
    throw InvalidParameter("mean-shift max_iterations must be >= 1");
  }
  if (p.max_pyramid_level < 0) {
    throw InvalidParameter("mean-shift max_pyramid_level must be >= 0");
  }
}

Color color_at(const Image& img, long x, long y) {
  const auto xs = static_cast<std::size_t>(x), ys = static_cast<std::size_t>(y);
  return {static_cast<double>(img.at(xs, ys, 0)),
          static_cast<double>(img.at(xs, ys, 1)),
          static_cast<double>(img.at(xs, ys, 2))};
}

double chebyshev(const Color& a, const Color& b) {
  return std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]),
                   std::abs(a[2] - b[2])});
}

// 5-tap binomial blur with edge replication, then keep even samples.
Image pyr_down(const Image& img) {
  static constexpr std::array<int, 5> kTaps = {1, 4, 6, 4, 1};
  const auto w = static_cast<long>(img.width());
  const auto h = static_cast<long>(img.height());
  const long ow = (w + 1) / 2, oh = (h + 1) / 2;
  Image out(static_cast<std::size_t>(ow), static_cast<std::size_t>(oh), 3);
  for (long y = 0; y < oh; ++y) {
    for (long x = 0; x < ow; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        int acc = 0;
        for (long ky = -2; ky <= 2; ++ky) {
          const long yy = std::clamp(2 * y + ky, 0L, h - 1);
          for (long kx = -2; kx <= 2; ++kx) {
            const long xx = std::clamp(2 * x + kx, 0L, w - 1);
            acc += kTaps[static_cast<std::size_t>(ky + 2)] *
                   kTaps[static_cast<std::size_t>(kx + 2)] *
                   img.at(static_cast<std::size_t>(xx),
                          static_cast<std::size_t>(yy), c);
          }
        }
        out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c) =
            static_cast<std::uint8_t>((acc + 128) / 256);
      }
    }
  }
  return out;
}

// Runs the flat-kernel mean-shift iteration for one pixel in joint
// (position, color) space and returns the last window-mean color.
Color shift_pixel(const Image& img, long x0, long y0, Color start,
                  const MeanShiftParams& p) {
  const auto w = static_cast<long>(img.width());
  const auto h = static_cast<long>(img.height());
  double px = static_cast<double>(x0), py = static_cast<double>(y0);
  Color c = start;
  for (int it = 0; it < p.max_iterations; ++it) {
    const long cx = std::lround(px), cy = std::lround(py);
    const long x_lo = std::max(0L, cx - p.spatial_radius);
    const long x_hi = std::min(w - 1, cx + p.spatial_radius);
    const long y_lo = std::max(0L, cy - p.spatial_radius);
    const long y_hi = std::min(h - 1, cy + p.spatial_radius);

    double sx = 0.0, sy = 0.0;
    Color sc{0.0, 0.0, 0.0};
    long count = 0;
    for (long y = y_lo; y <= y_hi; ++y) {
      for (long x = x_lo; x <= x_hi; ++x) {
        const Color q = color_at(img, x, y);
        if (chebyshev(q, c) > p.color_radius) continue;
        sx += static_cast<double>(x);
        sy += static_cast<double>(y);
        for (std::size_t k = 0; k < 3; ++k) sc[k] += q[k];
        ++count;
      }
    }
    if (count == 0) break;

    const double n = static_cast<double>(count);
    const double nx = sx / n, ny = sy / n;
    const Color nc{sc[0] / n, sc[1] / n, sc[2] / n};
    const double moved = std::sqrt((nx - px) * (nx - px) + (ny - py) * (ny - py) +
                                   (nc[0] - c[0]) * (nc[0] - c[0]) +
                                   (nc[1] - c[1]) * (nc[1] - c[1]) +
                                   (nc[2] - c[2]) * (nc[2] - c[2]));
    px = nx;
    py = ny;
    c = nc;
    if (moved < p.convergence_epsilon) break;
  }
  return c;
}

void store(Image& out, long x, long y, const Color& c) {
  for (std::size_t k = 0; k < 3; ++k) {
    out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), k) =
        static_cast<std::uint8_t>(std::clamp(std::lround(c[k]), 0L, 255L));
  }
}

}  // namespace

Image pyramid_mean_shift(const Image& img, const MeanShiftParams& params) {
  check_params(params);
  if (img.channels() != 3) {
    throw InvalidInput("pyramid_mean_shift expects 3 channels");
  }
  if (img.empty()) return img;

  std::vector<Image> levels{img};
  while (static_cast<int>(levels.size()) <= params.max_pyramid_level &&
         levels.back().width() > 1 && levels.back().height() > 1) {
    levels.push_back(pyr_down(levels.back()));
  }

  // Coarsest level: every pixel starts from its own color.
  const Image& top = levels.back();
  Image result(top.width(), top.height(), 3);
  for (long y = 0; y < static_cast<long>(top.height()); ++y) {
    for (long x = 0; x < static_cast<long>(top.width()); ++x) {
      store(result, x, y, shift_pixel(top, x, y, color_at(top, x, y), params));
    }
  }

  // Finer levels: warm-start from the upsampled coarse color unless the
  // pixel's own color is outside its color window, in which case the coarse
  // mode belongs to a different region and the pixel restarts from itself.
  for (auto level = static_cast<long>(levels.size()) - 2; level >= 0; --level) {
    const Image& src = levels[static_cast<std::size_t>(level)];
    Image refined(src.width(), src.height(), 3);
    for (long y = 0; y < static_cast<long>(src.height()); ++y) {
      for (long x = 0; x < static_cast<long>(src.width()); ++x) {
        const Color own = color_at(src, x, y);
        const Color coarse = color_at(result, x / 2, y / 2);
        const Color start =
            chebyshev(own, coarse) > params.color_radius ? own : coarse;
        store(refined, x, y, shift_pixel(src, x, y, start, params));
      }
    }
    result = std::move(refined);
  }
  return result;
}

}  // namespace finclass::imgproc
