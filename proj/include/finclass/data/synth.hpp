#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "finclass/data/dataset.hpp"
#include "finclass/imgproc/image.hpp"

namespace finclass::data {

enum class ShapeKind { kEllipse, kTriangle, kCrescent, kBar, kRing };

inline constexpr std::size_t kMaxSynthClasses = 5;

std::string shape_name(ShapeKind kind);

// Inclusive pixel bounds of the rendered shape.
struct BoundingBox {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::size_t area() const { return (x1 - x0 + 1) * (y1 - y0 + 1); }
};

struct SynthFrame {
  imgproc::Image rgb;
  imgproc::BinaryMask shape;  // ground-truth coverage
  BoundingBox box;
};

// Draws one 100x100 frame of `kind`; everything random comes from `seed`.
SynthFrame synth_render(ShapeKind kind, std::uint64_t seed);

// Shapes used for n_classes classes, in label (sorted name) order.
// Throws InvalidParameter unless 2 <= n_classes <= kMaxSynthClasses.
std::vector<ShapeKind> synth_classes(std::size_t n_classes);

// The first n_classes shapes, labelled by sorted name. Samples are ordered
// by label, then index; frame (label, i) is
// synth_render(kind, synth_sample_seed(seed, kind, i)).
Dataset synth_generate(std::size_t n_classes, std::size_t per_class,
                       std::uint64_t seed,
                       const imgproc::PreprocessConfig& cfg = {},
                       unsigned threads = 1);

// Per-sample seed used by synth_generate, exposed for tests.
std::uint64_t synth_sample_seed(std::uint64_t seed, std::size_t label,
                                std::size_t index);

}  // namespace finclass::data
