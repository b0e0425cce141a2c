#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "finclass/imgproc/image.hpp"
#include "finclass/imgproc/ops.hpp"

namespace finclass::imgproc {

struct PreprocessConfig {
  double blur_sigma = 1.0;
  int blur_ksize = 3;
  int open_iterations = 2;
  int dilate_iterations = 3;
  DistanceMetric dist_metric = DistanceMetric::kL1;
  double dist_fraction = 0.7;
  MeanShiftParams mean_shift;
  StructuringElement kernel;
};

// Applies one `key = value` setting. Returns false if the key is not a
// preprocessing key; throws InvalidConfig if the value does not parse.
bool set_preprocess_option(PreprocessConfig& cfg, std::string_view key,
                           std::string_view value);

// Canonical key/value rendering, in a fixed order.
std::vector<std::pair<std::string, std::string>> preprocess_options(
    const PreprocessConfig& cfg);

// Every intermediate map of the foreground pipeline.
struct SegmentationStages {
  Image mean_shifted;
  Image gray;
  Image blurred;
  std::uint8_t otsu_threshold = 0;
  BinaryMask binary;
  BinaryMask opened;
  BinaryMask sure_bg;
  DistanceMap distance;
  BinaryMask sure_fg;
  BinaryMask unknown;
};

// mean shift -> gray -> blur -> Otsu -> open; sure_bg = dilate(opened);
// sure_fg = distance(opened) > fraction * max; unknown = sure_bg - sure_fg.
SegmentationStages segment_stages(const Image& rgb, const PreprocessConfig& cfg);

// The sure-foreground map of segment_stages.
BinaryMask segment_foreground(const Image& rgb, const PreprocessConfig& cfg);

}  // namespace finclass::imgproc
