#include <algorithm>
#include <array>
#include <string>
#include <cmath>

#include "finclass/error.hpp"
#include "finclass/imgproc/ops.hpp"

namespace finclass::imgproc {

namespace {

std::uint8_t saturate(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

Image to_grayscale(const Image& img) {
  if (img.channels() != 3) {
    throw InvalidInput("to_grayscale expects 3 channels, got " +
                       std::to_string(img.channels()));
  }
  Image out(img.width(), img.height(), 1);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double luma = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] +
                        0.114 * src[3 * i + 2];
    dst[i] = saturate(luma);
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma, int ksize) {
  if (!(sigma > 0.0)) {
    throw InvalidParameter("gaussian sigma must be positive");
  }
  if (ksize < 1 || ksize % 2 == 0) {
    throw InvalidParameter("gaussian ksize must be odd and positive, got " +
                           std::to_string(ksize));
  }
  const int r = ksize / 2;
  std::vector<double> taps(static_cast<std::size_t>(ksize));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + r)] = w;
    sum += w;
  }
  for (auto& w : taps) w /= sum;
  return taps;
}

Image gaussian_blur(const Image& img, double sigma, int ksize) {
  const auto taps = gaussian_kernel(sigma, ksize);
  if (img.channels() != 1) {
    throw InvalidInput("gaussian_blur expects a single-channel image");
  }
  const auto w = static_cast<long>(img.width());
  const auto h = static_cast<long>(img.height());
  const long r = ksize / 2;
  auto clamp_x = [w](long x) { return std::clamp(x, 0L, w - 1); };
  auto clamp_y = [h](long y) { return std::clamp(y, 0L, h - 1); };

  // Horizontal pass kept in double so rounding happens once.
  std::vector<double> tmp(img.pixel_count());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long k = -r; k <= r; ++k) {
        acc += taps[static_cast<std::size_t>(k + r)] *
               img.at(static_cast<std::size_t>(clamp_x(x + k)),
                      static_cast<std::size_t>(y));
      }
      tmp[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  Image out(img.width(), img.height(), 1);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long k = -r; k <= r; ++k) {
        acc += taps[static_cast<std::size_t>(k + r)] *
               tmp[static_cast<std::size_t>(clamp_y(y + k) * w + x)];
      }
      out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) =
          saturate(acc);
    }
  }
  return out;
}

OtsuResult otsu_threshold(const Image& gray) {
  if (gray.channels() != 1) {
    throw InvalidInput("otsu_threshold expects a single-channel image");
  }
  if (gray.empty()) throw InvalidInput("otsu_threshold on zero-area image");

  std::array<std::uint64_t, 256> hist{};
  for (auto v : gray.data()) ++hist[v];

  const auto total = static_cast<double>(gray.pixel_count());
  double total_sum = 0.0;
  for (int v = 0; v < 256; ++v) total_sum += static_cast<double>(v) * hist[v];

  // Maximizes (n1*S0 - n0*S1)^2 / (n0*n1), which is N^2 times the
  // between-class variance w0*w1*(mu0-mu1)^2.
  double n0 = 0.0, s0 = 0.0;
  double best = 0.0;
  int best_t = -1;
  for (int t = 0; t < 256; ++t) {
    n0 += static_cast<double>(hist[t]);
    s0 += static_cast<double>(t) * hist[t];
    const double n1 = total - n0;
    if (n0 == 0.0 || n1 == 0.0) continue;
    const double s1 = total_sum - s0;
    const double d = n1 * s0 - n0 * s1;
    const double score = d * d / (n0 * n1);
    if (score > best) {
      best = score;
      best_t = t;
    }
  }
  if (best_t < 0) {
    // Single gray level: no split has positive variance.
    best_t = *std::min_element(gray.data().begin(), gray.data().end());
  }

  OtsuResult result;
  result.threshold = static_cast<std::uint8_t>(best_t);
  std::vector<std::uint8_t> bits(gray.pixel_count());
  auto src = gray.data();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = src[i] > result.threshold ? BinaryMask::kOn : BinaryMask::kOff;
  }
  result.mask = BinaryMask(gray.width(), gray.height(), std::move(bits));
  return result;
}

}  // namespace finclass::imgproc
