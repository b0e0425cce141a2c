#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "finclass/imgproc/image.hpp"
#include "finclass/imgproc/segment.hpp"
#include "finclass/nn/tensor.hpp"

namespace finclass::data {

inline constexpr std::size_t kInputSide = 100;
inline constexpr std::size_t kInputChannels = 4;

// [100, 100, 4]: RGB / 255 in channels 0-2, foreground mask / 255 in 3.
struct Sample {
  nn::Tensor tensor;
  std::size_t label = 0;
  std::string source;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;

  std::size_t size() const { return samples.size(); }
  std::vector<std::size_t> class_counts() const;
};

// Bilinear resampling with half-pixel centers, source coordinates clamped.
imgproc::Image resize_bilinear(const imgproc::Image& img, std::size_t out_w,
                               std::size_t out_h);

// Resizes to 100x100 (gray replicated to RGB), segments, and stacks.
nn::Tensor make_input(const imgproc::Image& img,
                      const imgproc::PreprocessConfig& cfg);

// Stacks an RGB frame and a mask of the same size into [H, W, 4] in [0,1].
nn::Tensor stack_channels(const imgproc::Image& rgb,
                          const imgproc::BinaryMask& mask);

struct LoadOptions {
  imgproc::PreprocessConfig preprocess;
  unsigned threads = 1;
};

// Reads root/<class>/*.{png,ppm,pgm}. Files that fail to decode are
// skipped; each skip appends one message to `warnings` when given.
Dataset load_directory(const std::filesystem::path& root,
                       const LoadOptions& opts,
                       std::vector<std::string>* warnings = nullptr);

// One line per sample: path, label index, class name (tab separated).
void write_manifest(const std::filesystem::path& path, const Dataset& ds);

// Stratified split: each class gives ceil(count * fraction) samples to test.
// Classes with fewer than 2 samples stay in train and add a warning.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                  std::uint64_t seed,
                                  std::vector<std::string>* warnings = nullptr);

}  // namespace finclass::data
