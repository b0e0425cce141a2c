#include "finclass/imgproc/segment.hpp"

#include <sstream>

#include "finclass/error.hpp"
#include "finclass/kvfile.hpp"

namespace finclass::imgproc {

namespace {

int parse_int(std::string_view key, std::string_view value) {
  return static_cast<int>(parse_long(key, value));
}

std::string format(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

bool set_preprocess_option(PreprocessConfig& cfg, std::string_view key,
                           std::string_view value) {
  if (key == "blur_sigma") {
    cfg.blur_sigma = parse_double(key, value);
  } else if (key == "blur_ksize") {
    cfg.blur_ksize = parse_int(key, value);
  } else if (key == "open_iterations") {
    cfg.open_iterations = parse_int(key, value);
  } else if (key == "dilate_iterations") {
    cfg.dilate_iterations = parse_int(key, value);
  } else if (key == "dist_metric") {
    if (value == "L1" || value == "l1") {
      cfg.dist_metric = DistanceMetric::kL1;
    } else if (value == "L2" || value == "l2") {
      cfg.dist_metric = DistanceMetric::kL2;
    } else {
      throw InvalidConfig("dist_metric must be L1 or L2, got '" +
                          std::string(value) + "'");
    }
  } else if (key == "dist_fraction") {
    cfg.dist_fraction = parse_double(key, value);
  } else if (key == "ms_spatial_radius") {
    cfg.mean_shift.spatial_radius = parse_int(key, value);
  } else if (key == "ms_color_radius") {
    cfg.mean_shift.color_radius = parse_double(key, value);
  } else if (key == "ms_pyramid_levels") {
    cfg.mean_shift.max_pyramid_level = parse_int(key, value);
  } else {
    return false;
  }
  return true;
}

std::vector<std::pair<std::string, std::string>> preprocess_options(
    const PreprocessConfig& cfg) {
  return {
      {"blur_sigma", format(cfg.blur_sigma)},
      {"blur_ksize", std::to_string(cfg.blur_ksize)},
      {"open_iterations", std::to_string(cfg.open_iterations)},
      {"dilate_iterations", std::to_string(cfg.dilate_iterations)},
      {"dist_metric", cfg.dist_metric == DistanceMetric::kL1 ? "L1" : "L2"},
      {"dist_fraction", format(cfg.dist_fraction)},
      {"ms_spatial_radius", std::to_string(cfg.mean_shift.spatial_radius)},
      {"ms_color_radius", format(cfg.mean_shift.color_radius)},
      {"ms_pyramid_levels", std::to_string(cfg.mean_shift.max_pyramid_level)},
  };
}

SegmentationStages segment_stages(const Image& rgb,
                                  const PreprocessConfig& cfg) {
  if (rgb.channels() != 3) {
    throw InvalidInput("segmentation expects an RGB image");
  }
  SegmentationStages s;
  s.mean_shifted = pyramid_mean_shift(rgb, cfg.mean_shift);
  s.gray = to_grayscale(s.mean_shifted);
  s.blurred = gaussian_blur(s.gray, cfg.blur_sigma, cfg.blur_ksize);
  auto otsu = otsu_threshold(s.blurred);
  s.otsu_threshold = otsu.threshold;
  s.binary = std::move(otsu.mask);
  s.opened = morphological_open(s.binary, cfg.kernel, cfg.open_iterations);
  s.sure_bg = dilate(s.opened, cfg.kernel, cfg.dilate_iterations);
  s.distance = distance_transform(s.opened, cfg.dist_metric);
  s.sure_fg = threshold_fraction(s.distance, cfg.dist_fraction);
  s.unknown = mask_subtract(s.sure_bg, s.sure_fg);
  return s;
}

BinaryMask segment_foreground(const Image& rgb, const PreprocessConfig& cfg) {
  return segment_stages(rgb, cfg).sure_fg;
}

}  // namespace finclass::imgproc
