#include "finclass/data/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <random>

#include "finclass/error.hpp"
#include "finclass/imgproc/io.hpp"
#include "finclass/parallel.hpp"

namespace finclass::data {

namespace fs = std::filesystem;
using imgproc::BinaryMask;
using imgproc::Image;

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const auto& s : samples) ++counts.at(s.label);
  return counts;
}

Image resize_bilinear(const Image& img, std::size_t out_w, std::size_t out_h) {
  if (out_w == 0 || out_h == 0) {
    throw InvalidParameter("resize target must be at least 1x1");
  }
  if (img.empty()) throw InvalidInput("cannot resize an empty image");
  const std::size_t in_w = img.width();
  const std::size_t in_h = img.height();
  const std::size_t ch = img.channels();

  struct Tap {
    std::size_t i0, i1;
    double f;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t d = 0; d < out; ++d) {
      double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const auto i0 = static_cast<std::size_t>(s);
      t[d] = {i0, std::min(i0 + 1, in - 1), s - static_cast<double>(i0)};
    }
    return t;
  };
  const auto tx = taps(in_w, out_w);
  const auto ty = taps(in_h, out_h);

  Image out(out_w, out_h, ch);
  for (std::size_t y = 0; y < out_h; ++y) {
    const Tap& ry = ty[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& rx = tx[x];
      for (std::size_t c = 0; c < ch; ++c) {
        const double top = img.at(rx.i0, ry.i0, c) * (1 - rx.f) +
                           img.at(rx.i1, ry.i0, c) * rx.f;
        const double bottom = img.at(rx.i0, ry.i1, c) * (1 - rx.f) +
                              img.at(rx.i1, ry.i1, c) * rx.f;
        const double v = top * (1 - ry.f) + bottom * ry.f;
        out.at(x, y, c) =
            static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return out;
}

nn::Tensor stack_channels(const Image& rgb, const BinaryMask& mask) {
  if (rgb.channels() != 3) throw InvalidInput("stacking needs an RGB image");
  if (mask.width() != rgb.width() || mask.height() != rgb.height()) {
    throw InvalidShape("mask and image sizes differ");
  }
  nn::Tensor t({rgb.height(), rgb.width(), kInputChannels});
  for (std::size_t y = 0; y < rgb.height(); ++y) {
    for (std::size_t x = 0; x < rgb.width(); ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        t.at(y, x, c) = static_cast<float>(rgb.at(x, y, c)) / 255.0f;
      }
      t.at(y, x, 3) = mask.on(x, y) ? 1.0f : 0.0f;
    }
  }
  return t;
}

nn::Tensor make_input(const Image& img, const imgproc::PreprocessConfig& cfg) {
  Image rgb = imgproc::to_rgb(img);
  if (rgb.width() != kInputSide || rgb.height() != kInputSide) {
    rgb = resize_bilinear(rgb, kInputSide, kInputSide);
  }
  return stack_channels(rgb, imgproc::segment_foreground(rgb, cfg));
}

namespace {

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : e.is_regular_file()) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Dataset load_directory(const fs::path& root, const LoadOptions& opts,
                       std::vector<std::string>* warnings) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw InvalidInput("dataset root '" + root.string() +
                       "' is not a directory");
  }
  Dataset ds;
  struct Job {
    fs::path path;
    std::size_t label;
  };
  std::vector<Job> jobs;
  for (const auto& dir : sorted_entries(root, true)) {
    const std::size_t label = ds.class_names.size();
    ds.class_names.push_back(dir.filename().string());
    for (const auto& file : sorted_entries(dir, false)) {
      if (has_image_extension(file)) jobs.push_back({file, label});
    }
  }
  if (ds.class_names.empty()) {
    throw InvalidInput("dataset root '" + root.string() +
                       "' has no class subdirectories");
  }

  std::vector<std::optional<Sample>> slots(jobs.size());
  std::vector<std::string> errors(jobs.size());
  parallel_for(jobs.size(), opts.threads, [&](std::size_t i) {
    try {
      const Image img = imgproc::read_image(jobs[i].path);
      slots[i] = Sample{make_input(img, opts.preprocess), jobs[i].label,
                        jobs[i].path.string()};
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (slots[i]) {
      ds.samples.push_back(std::move(*slots[i]));
    } else if (warnings) {
      warnings->push_back("skipped " + jobs[i].path.string() + ": " +
                          errors[i]);
    }
  }
  return ds;
}

void write_manifest(const fs::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  for (const auto& s : ds.samples) {
    out << s.source << '\t' << s.label << '\t' << ds.class_names.at(s.label)
        << '\n';
  }
  if (!out) throw IoError("failed writing manifest '" + path.string() + "'");
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                  std::uint64_t seed,
                                  std::vector<std::string>* warnings) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidParameter("test_fraction must be in (0, 1)");
  }
  std::vector<std::vector<std::size_t>> by_class(ds.class_names.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    by_class.at(ds.samples[i].label).push_back(i);
  }
  std::vector<bool> in_test(ds.samples.size(), false);
  std::mt19937_64 gen(seed);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.size() < 2) {
      if (warnings) {
        warnings->push_back("class '" + ds.class_names[c] + "' has " +
                            std::to_string(idx.size()) +
                            " sample(s); kept entirely in train");
      }
      continue;
    }
    // Tolerance keeps e.g. 10 * 0.2 from rounding up to 3.
    auto k = static_cast<std::size_t>(
        std::ceil(static_cast<double>(idx.size()) * test_fraction - 1e-9));
    k = std::min(k, idx.size() - 1);
    std::shuffle(idx.begin(), idx.end(), gen);
    for (std::size_t j = 0; j < k; ++j) in_test[idx[j]] = true;
  }
  Dataset train{{}, ds.class_names};
  Dataset test{{}, ds.class_names};
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    (in_test[i] ? test : train).samples.push_back(ds.samples[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace finclass::data
