#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "finclass/imgproc/image.hpp"

namespace finclass::imgproc {

// Square all-ones kernel anchored at its center.
struct StructuringElement {
  std::size_t size = 3;  // odd, >= 1

  std::size_t radius() const { return size / 2; }
};

// What morphology assumes lies outside the image.
enum class Border { kBackground, kForeground };

enum class DistanceMetric { kL1, kL2 };

struct MeanShiftParams {
  int spatial_radius = 10;
  double color_radius = 30.0;
  int max_pyramid_level = 1;
  int max_iterations = 5;
  double convergence_epsilon = 1.0;
};

struct OtsuResult {
  std::uint8_t threshold = 0;
  BinaryMask mask;
};

// Rec.601 luma, rounded. Throws InvalidInput unless img has 3 channels.
Image to_grayscale(const Image& img);

// Separable Gaussian with edge replication. ksize must be odd, sigma > 0.
Image gaussian_blur(const Image& img, double sigma, int ksize);

// Normalized 1-D Gaussian taps used by gaussian_blur.
std::vector<double> gaussian_kernel(double sigma, int ksize);

// Threshold maximizing between-class variance; smallest maximizer wins.
// mask pixel is on iff value > threshold. A constant image yields its own
// value as threshold and an empty mask.
OtsuResult otsu_threshold(const Image& gray);

BinaryMask erode(const BinaryMask& mask, StructuringElement se, int iterations,
                 Border border = Border::kBackground);
BinaryMask dilate(const BinaryMask& mask, StructuringElement se, int iterations,
                  Border border = Border::kBackground);
// erode x iterations, then dilate x iterations.
BinaryMask morphological_open(const BinaryMask& mask, StructuringElement se,
                              int iterations);

// L1: exact city-block distance (two-pass chamfer, weights 1 and 2).
// L2: 5x5 chamfer with weights 1, sqrt(2), sqrt(5).
// A mask with no background pixel maps every pixel to width + height.
DistanceMap distance_transform(const BinaryMask& mask, DistanceMetric metric);

// on iff value > fraction * max(map). fraction must lie in (0, 1].
BinaryMask threshold_fraction(const DistanceMap& map, double fraction);

// Saturating per-pixel a - b.
BinaryMask mask_subtract(const BinaryMask& a, const BinaryMask& b);

// Coarse-to-fine mean-shift color filtering of an RGB image.
Image pyramid_mean_shift(const Image& img, const MeanShiftParams& params);

}  // namespace finclass::imgproc
