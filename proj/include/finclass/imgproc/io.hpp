#pragma once

#include <filesystem>

#include "finclass/imgproc/image.hpp"

namespace finclass::imgproc {

// Decodes PNG, binary PPM (P6) or binary PGM (P5), picked by file content.
// Color PNGs decode to 3 channels, gray ones to 1; alpha is dropped.
// Throws IoError if the file cannot be opened and FormatError if it is
// not a supported, well-formed image.
Image read_image(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const Image& gray);
void write_ppm(const std::filesystem::path& path, const Image& rgb);
void write_png(const std::filesystem::path& path, const Image& img);

// Replicates a gray image into RGB; RGB input is returned unchanged.
Image to_rgb(const Image& img);

}  // namespace finclass::imgproc
