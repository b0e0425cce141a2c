#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "finclass/imgproc/segment.hpp"
#include "finclass/optim/training.hpp"

namespace finclass::cli {

// Everything a command can be configured with. Values come from, in
// increasing precedence: defaults, a `key = value` file, command-line flags.
struct CliConfig {
  imgproc::PreprocessConfig preprocess;
  optim::TrainConfig train;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 7;
  std::size_t hidden_units = 512;
  double keep_prob = 0.8;
  std::string data_root;
  std::string checkpoint;
  std::string report_out;

  // Throws InvalidConfig for an unknown key or unparsable value.
  void set(std::string_view key, std::string_view value);
  void load_file(const std::filesystem::path& path);

  // Canonical rendering of every key, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

// All accepted keys, for usage text.
std::vector<std::string> config_keys();

// Value of FINCLASS_THREADS when set to a positive integer, else 1.
unsigned default_threads();

}  // namespace finclass::cli
