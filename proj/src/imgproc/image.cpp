#include "finclass/imgproc/image.hpp"

#include <algorithm>
#include <string>

#include "finclass/error.hpp"

namespace finclass::imgproc {

namespace {

void check_channels(std::size_t channels) {
  if (channels != 1 && channels != 3) {
    throw InvalidInput("image channel count must be 1 or 3, got " +
                       std::to_string(channels));
  }
}

}  // namespace

Image::Image(std::size_t width, std::size_t height, std::size_t channels,
             std::uint8_t fill)
    : width_(width), height_(height), channels_(channels),
      data_(width * height * channels, fill) {
  check_channels(channels);
}

Image::Image(std::size_t width, std::size_t height, std::size_t channels,
             std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels),
      data_(std::move(data)) {
  check_channels(channels);
  if (data_.size() != width * height * channels) {
    throw InvalidInput("image data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(width) + "x" +
                       std::to_string(height) + "x" +
                       std::to_string(channels));
  }
}

BinaryMask::BinaryMask(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height),
      data_(width * height, fill == kOff ? kOff : kOn) {}

BinaryMask::BinaryMask(std::size_t width, std::size_t height,
                       std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != width * height) {
    throw InvalidInput("mask data length does not match dimensions");
  }
  if (std::any_of(data_.begin(), data_.end(),
                  [](std::uint8_t v) { return v != kOff && v != kOn; })) {
    throw InvalidInput("mask samples must be 0 or 255");
  }
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(
      std::count(data_.begin(), data_.end(), kOn));
}

BinaryMask BinaryMask::complement() const {
  BinaryMask out = *this;
  for (auto& v : out.data_) v = v == kOn ? kOff : kOn;
  return out;
}

Image BinaryMask::to_image() const { return Image(width_, height_, 1, data_); }

float DistanceMap::max() const {
  if (data.empty()) return 0.0f;
  return *std::max_element(data.begin(), data.end());
}

}  // namespace finclass::imgproc
