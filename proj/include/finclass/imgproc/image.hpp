#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace finclass::imgproc {

// Row-major 8-bit raster with 1 (gray) or 3 (RGB, interleaved) channels.
class Image {
 public:
  Image() = default;
  Image(std::size_t width, std::size_t height, std::size_t channels,
        std::uint8_t fill = 0);
  Image(std::size_t width, std::size_t height, std::size_t channels,
        std::vector<std::uint8_t> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t channels() const { return channels_; }
  std::size_t pixel_count() const { return width_ * height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> data() const { return data_; }

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) {
    return data_[(y * width_ + x) * channels_ + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return data_[(y * width_ + x) * channels_ + c];
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 1;
  std::vector<std::uint8_t> data_;
};

// Single-channel mask whose samples are 0 (background) or 255 (foreground).
class BinaryMask {
 public:
  static constexpr std::uint8_t kOn = 255;
  static constexpr std::uint8_t kOff = 0;

  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height, std::uint8_t fill = kOff);
  // Throws InvalidInput if any sample is not 0 or 255.
  BinaryMask(std::size_t width, std::size_t height,
             std::vector<std::uint8_t> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  std::span<const std::uint8_t> data() const { return data_; }

  bool on(std::size_t x, std::size_t y) const {
    return data_[y * width_ + x] == kOn;
  }
  void set(std::size_t x, std::size_t y, bool value) {
    data_[y * width_ + x] = value ? kOn : kOff;
  }
  std::uint8_t operator[](std::size_t i) const { return data_[i]; }

  std::size_t count() const;
  BinaryMask complement() const;
  Image to_image() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Per-pixel distance to the nearest background pixel.
struct DistanceMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> data;

  float at(std::size_t x, std::size_t y) const { return data[y * width + x]; }
  float max() const;
};

}  // namespace finclass::imgproc
