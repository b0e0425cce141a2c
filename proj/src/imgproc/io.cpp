#include "finclass/imgproc/io.hpp"

#include <png.h>

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "finclass/error.hpp"

namespace finclass::imgproc {

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Netpbm header token reader; skips whitespace and `#` comments.
class PnmHeader {
 public:
  explicit PnmHeader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t next_number(const std::filesystem::path& path) {
    skip_space();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (++digits > 9) break;
    }
    if (digits == 0 || digits > 9) {
      throw FormatError("malformed netpbm header: " + path.string());
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() const { return pos_ + 1; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 2;
};

Image decode_pnm(const std::vector<std::uint8_t>& bytes,
                 const std::filesystem::path& path) {
  const std::size_t channels = bytes[1] == '6' ? 3 : 1;
  PnmHeader header(bytes);
  const auto width = header.next_number(path);
  const auto height = header.next_number(path);
  const auto maxval = header.next_number(path);
  if (width == 0 || height == 0 || maxval == 0 || maxval > 255) {
    throw FormatError("unsupported netpbm dimensions or maxval: " +
                      path.string());
  }
  const auto offset = header.raster_offset();
  const auto length = width * height * channels;
  if (offset > bytes.size() || bytes.size() - offset < length) {
    throw FormatError("truncated netpbm raster: " + path.string());
  }
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<long>(offset),
                                 bytes.begin() + static_cast<long>(offset + length));
  if (maxval != 255) {
    for (auto& v : data) {
      v = static_cast<std::uint8_t>((v * 255u + maxval / 2) / maxval);
    }
  }
  return Image(width, height, channels, std::move(data));
}

Image decode_png(const std::vector<std::uint8_t>& bytes,
                 const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError("invalid PNG " + path.string() + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(png));
  // Alpha is composited onto black.
  png_color black{0, 0, 0};
  if (!png_image_finish_read(&png, &black, data.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw FormatError("corrupt PNG " + path.string() + ": " + msg);
  }
  return Image(png.width, png.height, channels, std::move(data));
}

void write_pnm(const std::filesystem::path& path, const Image& img,
               char magic) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image: " + path.string());
  out << 'P' << magic << '\n'
      << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data().data()),
            static_cast<std::streamsize>(img.data().size()));
  if (!out) throw IoError("short write: " + path.string());
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' &&
      bytes[2] == 'N' && bytes[3] == 'G') {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' &&
      (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes, path);
  }
  throw FormatError("unrecognized image format: " + path.string());
}

void write_pgm(const std::filesystem::path& path, const Image& gray) {
  if (gray.channels() != 1) throw InvalidInput("PGM output needs 1 channel");
  write_pnm(path, gray, '5');
}

void write_ppm(const std::filesystem::path& path, const Image& rgb) {
  if (rgb.channels() != 3) throw InvalidInput("PPM output needs 3 channels");
  write_pnm(path, rgb, '6');
}

void write_png(const std::filesystem::path& path, const Image& img) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0,
                               img.data().data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + png.message);
  }
}

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.width(), img.height(), 3);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  }
  return out;
}

}  // namespace finclass::imgproc
