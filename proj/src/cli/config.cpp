#include "finclass/cli/config.hpp"

#include <cstdlib>
#include <sstream>

#include "finclass/error.hpp"
#include "finclass/kvfile.hpp"

namespace finclass::cli {

namespace {

std::string format(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::size_t parse_size(std::string_view key, std::string_view value) {
  const long v = parse_long(key, value);
  if (v < 0) {
    throw InvalidConfig(std::string(key) + " must not be negative");
  }
  return static_cast<std::size_t>(v);
}

template <typename Parse>
auto checked(std::string_view key, Parse parse) {
  try {
    return parse();
  } catch (const InvalidConfig&) {
    throw;
  } catch (const Error& e) {
    throw InvalidConfig(std::string(key) + ": " + e.what());
  }
}

}  // namespace

void CliConfig::set(std::string_view key, std::string_view value) {
  if (imgproc::set_preprocess_option(preprocess, key, value)) return;
  auto& t = train;
  if (key == "epochs") {
    t.epochs = parse_size(key, value);
  } else if (key == "batch_size") {
    t.batch_size = parse_size(key, value);
  } else if (key == "lr") {
    t.adam.lr = parse_double(key, value);
  } else if (key == "beta1") {
    t.adam.beta1 = parse_double(key, value);
  } else if (key == "beta2") {
    t.adam.beta2 = parse_double(key, value);
  } else if (key == "epsilon") {
    t.adam.epsilon = parse_double(key, value);
  } else if (key == "seed") {
    t.seed = parse_u64(key, value);
  } else if (key == "activation") {
    t.activation = checked(key, [&] { return nn::parse_activation(value); });
  } else if (key == "loss") {
    t.loss = checked(key, [&] { return nn::parse_loss_form(value); });
  } else if (key == "shuffle") {
    t.shuffle = parse_bool(key, value);
  } else if (key == "threads") {
    t.threads = static_cast<unsigned>(parse_size(key, value));
  } else if (key == "test_fraction") {
    test_fraction = parse_double(key, value);
  } else if (key == "split_seed") {
    split_seed = parse_u64(key, value);
  } else if (key == "hidden_units") {
    hidden_units = parse_size(key, value);
  } else if (key == "keep_prob") {
    keep_prob = parse_double(key, value);
  } else if (key == "data_root") {
    data_root = value;
  } else if (key == "checkpoint") {
    checkpoint = value;
  } else if (key == "report_out") {
    report_out = value;
  } else {
    throw InvalidConfig("unknown config key '" + std::string(key) + "'");
  }
}

void CliConfig::load_file(const std::filesystem::path& path) {
  for (const auto& kv : read_key_value_file(path)) {
    try {
      set(kv.key, kv.value);
    } catch (const InvalidConfig& e) {
      throw InvalidConfig(path.string() + ":" + std::to_string(kv.line) +
                          ": " + e.what());
    }
  }
}

std::vector<std::pair<std::string, std::string>> CliConfig::entries() const {
  auto out = imgproc::preprocess_options(preprocess);
  const auto& t = train;
  const std::vector<std::pair<std::string, std::string>> rest = {
      {"epochs", std::to_string(t.epochs)},
      {"batch_size", std::to_string(t.batch_size)},
      {"lr", format(t.adam.lr)},
      {"beta1", format(t.adam.beta1)},
      {"beta2", format(t.adam.beta2)},
      {"epsilon", format(t.adam.epsilon)},
      {"seed", std::to_string(t.seed)},
      {"activation", std::string(nn::activation_name(t.activation))},
      {"loss", std::string(nn::loss_form_name(t.loss))},
      {"shuffle", t.shuffle ? "true" : "false"},
      {"threads", std::to_string(t.threads)},
      {"test_fraction", format(test_fraction)},
      {"split_seed", std::to_string(split_seed)},
      {"hidden_units", std::to_string(hidden_units)},
      {"keep_prob", format(keep_prob)},
      {"data_root", data_root},
      {"checkpoint", checkpoint},
      {"report_out", report_out},
  };
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : CliConfig{}.entries()) keys.push_back(k);
  return keys;
}

unsigned default_threads() {
  const char* env = std::getenv("FINCLASS_THREADS");
  if (env == nullptr) return 1;
  try {
    const long v = parse_long("FINCLASS_THREADS", env);
    return v > 0 ? static_cast<unsigned>(v) : 1;
  } catch (const Error&) {
    return 1;
  }
}

}  // namespace finclass::cli
