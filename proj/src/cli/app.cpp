#include "finclass/cli/app.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "finclass/cli/config.hpp"
#include "finclass/data/dataset.hpp"
#include "finclass/data/synth.hpp"
#include "finclass/error.hpp"
#include "finclass/imgproc/io.hpp"
#include "finclass/kvfile.hpp"
#include "finclass/model/checkpoint.hpp"
#include "finclass/optim/training.hpp"
#include "finclass/parallel.hpp"

namespace finclass::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kReferenceSecondsPerFrame = 0.00183;
constexpr const char* kPreprocessPrefix = "preprocess.";

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_file, "key = value config file");
  sub->add_option("--set", c.sets, "override one config key (key=value)");
  sub->add_option("--threads", c.threads,
                  "worker threads (default: FINCLASS_THREADS or 1)");
}

void apply_sets(CliConfig& cfg, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw InvalidConfig("--set expects key=value, got '" + s + "'");
    }
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
}

// Defaults, then `base` pairs (e.g. checkpoint metadata), then the config
// file, then --set, then --threads.
CliConfig make_config(
    const Common& c,
    const std::vector<std::pair<std::string, std::string>>& base = {}) {
  CliConfig cfg;
  cfg.train.threads = default_threads();
  for (const auto& [k, v] : base) cfg.set(k, v);
  if (!c.config_file.empty()) cfg.load_file(c.config_file);
  apply_sets(cfg, c.sets);
  if (c.threads) cfg.train.threads = std::max(1u, *c.threads);
  return cfg;
}

const std::string& required(const std::string& value, const char* what) {
  if (value.empty()) throw InvalidConfig(std::string("missing ") + what);
  return value;
}

void print_warnings(const std::vector<std::string>& w, std::ostream& err) {
  for (const auto& line : w) err << "warning: " << line << '\n';
}

// ---- checkpoint metadata ----------------------------------------------

std::vector<std::pair<std::string, std::string>> make_metadata(
    const CliConfig& cfg, const std::vector<std::string>& class_names) {
  std::vector<std::pair<std::string, std::string>> meta;
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    meta.emplace_back("class." + std::to_string(i), class_names[i]);
  }
  for (const auto& [k, v] : imgproc::preprocess_options(cfg.preprocess)) {
    meta.emplace_back(kPreprocessPrefix + k, v);
  }
  std::ostringstream frac;
  frac.precision(17);
  frac << cfg.test_fraction;
  meta.emplace_back("split.test_fraction", frac.str());
  meta.emplace_back("split.seed", std::to_string(cfg.split_seed));
  return meta;
}

struct CheckpointInfo {
  std::vector<std::string> class_names;
  std::vector<std::pair<std::string, std::string>> settings;
};

CheckpointInfo read_metadata(const model::Network& net) {
  CheckpointInfo info;
  std::map<std::size_t, std::string> classes;
  for (const auto& [k, v] : net.architecture().metadata) {
    if (k.rfind("class.", 0) == 0) {
      classes[static_cast<std::size_t>(parse_long(k, k.substr(6)))] = v;
    } else if (k.rfind(kPreprocessPrefix, 0) == 0) {
      info.settings.emplace_back(k.substr(std::string(kPreprocessPrefix).size()),
                                 v);
    } else if (k == "split.test_fraction") {
      info.settings.emplace_back("test_fraction", v);
    } else if (k == "split.seed") {
      info.settings.emplace_back("split_seed", v);
    }
  }
  for (const auto& [i, name] : classes) info.class_names.push_back(name);
  if (info.class_names.size() != net.num_classes()) {
    info.class_names.clear();
    for (std::size_t i = 0; i < net.num_classes(); ++i) {
      info.class_names.push_back("class" + std::to_string(i));
    }
  }
  return info;
}

// ---- shared pieces -------------------------------------------------------

data::Dataset load_data(const CliConfig& cfg, std::ostream& err) {
  std::vector<std::string> warnings;
  data::LoadOptions opts{cfg.preprocess, cfg.train.threads};
  data::Dataset ds = data::load_directory(required(cfg.data_root, "--data"),
                                          opts, &warnings);
  print_warnings(warnings, err);
  if (ds.samples.empty()) {
    throw InvalidInput("no readable images under '" + cfg.data_root + "'");
  }
  return ds;
}

std::pair<data::Dataset, data::Dataset> split_data(const CliConfig& cfg,
                                                   const data::Dataset& ds,
                                                   std::ostream& err) {
  std::vector<std::string> warnings;
  auto parts = data::split(ds, cfg.test_fraction, cfg.split_seed, &warnings);
  print_warnings(warnings, err);
  return parts;
}

model::Network new_network(const CliConfig& cfg,
                           const std::vector<std::string>& class_names) {
  model::FishnetOptions fo;
  fo.num_classes = class_names.size();
  fo.activation = cfg.train.activation;
  fo.hidden_units = cfg.hidden_units;
  fo.keep_prob = cfg.keep_prob;
  model::ArchitectureSpec spec = model::fishnet_architecture(fo);
  spec.metadata = make_metadata(cfg, class_names);
  model::Network net(std::move(spec));
  net.initialize(cfg.train.seed);
  return net;
}

void print_metrics(std::ostream& out, const optim::Metrics& m,
                   const std::vector<std::string>& names) {
  out << std::fixed << std::setprecision(2);
  out << "accuracy: " << m.accuracy << "% (" << m.correct << '/' << m.total
      << ")\n";
  out << "confusion matrix (rows = true class, columns = predicted):\n";
  std::size_t width = 5;
  for (const auto& n : names) width = std::max(width, n.size());
  out << std::setw(static_cast<int>(width)) << "";
  for (std::size_t c = 0; c < names.size(); ++c) {
    out << ' ' << std::setw(static_cast<int>(width)) << names[c];
  }
  out << '\n';
  for (std::size_t r = 0; r < names.size(); ++r) {
    out << std::setw(static_cast<int>(width)) << names[r];
    for (std::size_t c = 0; c < names.size(); ++c) {
      out << ' ' << std::setw(static_cast<int>(width)) << m.confusion[r][c];
    }
    out << '\n';
  }
  out << "class,precision,recall\n";
  auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << *v;
    return os.str();
  };
  for (std::size_t c = 0; c < names.size(); ++c) {
    out << names[c] << ',' << fmt(m.precision[c]) << ',' << fmt(m.recall[c])
        << '\n';
  }
  out.unsetf(std::ios::floatfield);
  out << std::setprecision(6);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

fs::path history_path(const std::string& flag, const CliConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.report_out.empty()) return cfg.report_out;
  return cfg.checkpoint + ".history.csv";
}

imgproc::Image frame_100(const imgproc::Image& img) {
  imgproc::Image rgb = imgproc::to_rgb(img);
  if (rgb.width() != data::kInputSide || rgb.height() != data::kInputSide) {
    rgb = data::resize_bilinear(rgb, data::kInputSide, data::kInputSide);
  }
  return rgb;
}

// ---- commands ------------------------------------------------------------

int run_preprocess(const CliConfig& cfg, const std::string& image,
                   const std::string& out_dir, std::ostream& out) {
  const imgproc::Image rgb = frame_100(imgproc::read_image(image));
  const auto st = imgproc::segment_stages(rgb, cfg.preprocess);
  fs::create_directories(out_dir);
  const fs::path d(out_dir);

  imgproc::Image dist(st.distance.width, st.distance.height, 1);
  const float peak = st.distance.max();
  for (std::size_t i = 0; i < st.distance.data.size(); ++i) {
    const float v = peak > 0 ? st.distance.data[i] / peak * 255.0f : 0.0f;
    dist.data()[i] = static_cast<std::uint8_t>(std::lround(v));
  }
  imgproc::write_ppm(d / "00_input.ppm", rgb);
  imgproc::write_ppm(d / "01_mean_shift.ppm", st.mean_shifted);
  imgproc::write_pgm(d / "02_gray.pgm", st.gray);
  imgproc::write_pgm(d / "03_blurred.pgm", st.blurred);
  imgproc::write_pgm(d / "04_otsu.pgm", st.binary.to_image());
  imgproc::write_pgm(d / "05_opened.pgm", st.opened.to_image());
  imgproc::write_pgm(d / "06_sure_bg.pgm", st.sure_bg.to_image());
  imgproc::write_pgm(d / "07_distance.pgm", dist);
  imgproc::write_pgm(d / "08_sure_fg.pgm", st.sure_fg.to_image());
  imgproc::write_pgm(d / "09_unknown.pgm", st.unknown.to_image());
  out << "otsu threshold: " << static_cast<int>(st.otsu_threshold) << '\n'
      << "max distance: " << peak << '\n'
      << "sure_fg pixels: " << st.sure_fg.count() << '\n'
      << "wrote 10 stage images to " << out_dir << '\n';
  return kExitOk;
}

int run_synth(const CliConfig& cfg, std::size_t classes, std::size_t per_class,
              std::uint64_t seed, const std::string& out_dir,
              std::ostream& out) {
  const auto kinds = data::synth_classes(classes);
  if (per_class == 0) {
    throw InvalidParameter("--per-class must be at least 1");
  }
  const fs::path root(out_dir);
  data::Dataset manifest;
  for (auto k : kinds) {
    manifest.class_names.push_back(data::shape_name(k));
    fs::create_directories(root / data::shape_name(k));
  }
  manifest.samples.resize(kinds.size() * per_class);
  parallel_for(manifest.samples.size(), cfg.train.threads, [&](std::size_t n) {
    const std::size_t label = n / per_class;
    const std::size_t i = n % per_class;
    const auto kind = kinds[label];
    const auto frame = data::synth_render(
        kind, data::synth_sample_seed(seed, static_cast<std::size_t>(kind), i));
    std::ostringstream name;
    name << std::setw(4) << std::setfill('0') << i << ".png";
    const fs::path p = root / data::shape_name(kind) / name.str();
    imgproc::write_png(p, frame.rgb);
    manifest.samples[n] = {nn::Tensor{}, label, p.string()};
  });
  data::write_manifest(root / "manifest.tsv", manifest);
  out << "wrote " << manifest.samples.size() << " images in " << kinds.size()
      << " classes to " << out_dir << '\n';
  return kExitOk;
}

int run_train(const CliConfig& cfg, const std::string& history_flag,
              std::ostream& out, std::ostream& err) {
  const std::string& ckpt = required(cfg.checkpoint, "--checkpoint");
  optim::validate(cfg.train);
  const data::Dataset ds = load_data(cfg, err);
  const auto [train, test] = split_data(cfg, ds, err);
  model::Network net = new_network(cfg, ds.class_names);
  out << "train " << train.size() << " samples, test " << test.size()
      << " samples, " << ds.class_names.size() << " classes, activation "
      << nn::activation_name(cfg.train.activation) << '\n';

  const std::size_t steps_per_epoch =
      (train.size() + cfg.train.batch_size - 1) / cfg.train.batch_size;
  double epoch_loss = 0.0;
  const optim::History history = optim::fit(
      net, train, cfg.train, [&](const optim::HistoryRow& row) {
        epoch_loss += row.loss;
        if ((row.step + 1) % steps_per_epoch == 0) {
          out << "epoch " << row.epoch + 1 << '/' << cfg.train.epochs
              << " loss " << epoch_loss / static_cast<double>(steps_per_epoch)
              << " train_accuracy " << row.train_accuracy << '\n'
              << std::flush;
          epoch_loss = 0.0;
        }
      });

  model::save_checkpoint(net, ckpt);
  std::ostringstream csv;
  optim::write_history_csv(csv, history);
  const fs::path hist = history_path(history_flag, cfg);
  write_text(hist, csv.str());
  if (!test.samples.empty()) {
    const auto m = optim::evaluate(net, test, cfg.train.threads);
    out << "test accuracy: " << std::fixed << std::setprecision(2)
        << m.accuracy << "% (" << m.correct << '/' << m.total << ")\n";
    out.unsetf(std::ios::floatfield);
    out << std::setprecision(6);
  }
  out << "checkpoint: " << ckpt << "\nhistory: " << hist.string() << '\n';
  return kExitOk;
}

int run_eval(const Common& common, const std::string& checkpoint,
             const std::string& data_root, const std::string& subset,
             std::ostream& out, std::ostream& err) {
  const model::Network net = model::load_checkpoint(checkpoint);
  const CheckpointInfo info = read_metadata(net);
  CliConfig cfg = make_config(common, info.settings);
  if (!data_root.empty()) cfg.data_root = data_root;
  const data::Dataset ds = load_data(cfg, err);
  if (ds.class_names != info.class_names) {
    throw InvalidInput("class directories under '" + cfg.data_root +
                       "' do not match the checkpoint's classes");
  }
  data::Dataset chosen;
  if (subset == "all") {
    chosen = ds;
  } else {
    auto [train, test] = split_data(cfg, ds, err);
    chosen = subset == "test" ? std::move(test) : std::move(train);
  }
  out << "evaluating " << chosen.size() << " samples (" << subset << ")\n";
  print_metrics(out, optim::evaluate(net, chosen, cfg.train.threads),
                info.class_names);
  return kExitOk;
}

int run_predict(const Common& common, const std::string& checkpoint,
                const std::string& image, std::ostream& out) {
  const model::Network net = model::load_checkpoint(checkpoint);
  const CheckpointInfo info = read_metadata(net);
  const CliConfig cfg = make_config(common, info.settings);
  const nn::Tensor x =
      data::make_input(imgproc::read_image(image), cfg.preprocess);
  const model::Prediction p = model::predict(net, x);
  out << "class: " << info.class_names[p.label] << '\n';
  out << std::fixed << std::setprecision(6);
  for (std::size_t c = 0; c < p.probabilities.size(); ++c) {
    out << info.class_names[c] << ' ' << p.probabilities[c] << '\n';
  }
  out.unsetf(std::ios::floatfield);
  return kExitOk;
}

int run_bench(const Common& common, const std::string& checkpoint,
              std::size_t iters, const std::string& image, std::ostream& out) {
  if (iters == 0) throw InvalidParameter("--iters must be at least 1");
  const model::Network net = model::load_checkpoint(checkpoint);
  const CliConfig cfg = make_config(common, read_metadata(net).settings);
  // Decoding stays outside the timed region.
  const imgproc::Image frame =
      image.empty()
          ? data::synth_render(data::ShapeKind::kEllipse, 0).rgb
          : frame_100(imgproc::read_image(image));
  auto once = [&] {
    const nn::Tensor x = data::stack_channels(
        frame, imgproc::segment_foreground(frame, cfg.preprocess));
    return model::predict(net, x).label;
  };
  once();
  std::size_t sink = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < iters; ++i) sink += once();
  const auto t1 = std::chrono::steady_clock::now();
  const double mean =
      std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(iters);
  out << "iterations: " << iters << '\n'
      << "mean seconds per frame (segmentation + forward): " << mean << '\n'
      << "reference figure: " << kReferenceSecondsPerFrame
      << " s/frame (ratio " << mean / kReferenceSecondsPerFrame
      << "x; hardware differs)\n";
  (void)sink;
  return std::isfinite(mean) ? kExitOk : kExitRuntime;
}

int run_compare(const CliConfig& base, std::ostream& out, std::ostream& err) {
  optim::validate(base.train);
  const data::Dataset ds = load_data(base, err);
  const auto [train, test] = split_data(base, ds, err);
  if (test.samples.empty()) throw InvalidInput("test split is empty");
  std::ostringstream csv;
  csv << "activation,accuracy\n";
  for (auto kind : {nn::Activation::kRelu, nn::Activation::kTanh,
                    nn::Activation::kSigmoid, nn::Activation::kSoftmax}) {
    CliConfig cfg = base;
    cfg.train.activation = kind;
    model::Network net = new_network(cfg, ds.class_names);
    optim::fit(net, train, cfg.train);
    const auto m = optim::evaluate(net, test, cfg.train.threads);
    std::ostringstream row;
    row << nn::activation_name(kind) << ',' << std::fixed
        << std::setprecision(2) << m.accuracy << '\n';
    csv << row.str();
    err << "finished " << nn::activation_name(kind) << '\n';
  }
  out << csv.str();
  if (!base.report_out.empty()) write_text(base.report_out, csv.str());
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Fish image segmentation and classification toolkit",
               "finclass"};
  app.require_subcommand(1);
  app.fallthrough(false);

  Common common;

  std::string pre_image, pre_out;
  auto* pre = app.add_subcommand(
      "preprocess", "dump every segmentation stage of one image");
  pre->add_option("image", pre_image, "input image")->required();
  pre->add_option("--out-dir", pre_out, "output directory")->required();
  add_common(pre, common);

  std::size_t syn_classes = 3, syn_per = 0;
  std::uint64_t syn_seed = 0;
  std::string syn_out;
  auto* syn = app.add_subcommand("synth", "write a synthetic dataset tree");
  syn->add_option("--classes", syn_classes, "number of classes (2..5)")
      ->required();
  syn->add_option("--per-class", syn_per, "images per class")->required();
  syn->add_option("--seed", syn_seed, "generator seed")->required();
  syn->add_option("--out", syn_out, "output directory")->required();
  add_common(syn, common);

  std::string data_flag, ckpt_flag, act_flag, hist_flag;
  std::optional<std::size_t> epochs_flag;
  std::optional<std::uint64_t> seed_flag;
  auto* train = app.add_subcommand("train", "train a network on a data tree");
  train->add_option("--data", data_flag, "dataset root");
  train->add_option("--checkpoint", ckpt_flag, "output checkpoint");
  train->add_option("--activation", act_flag,
                    "hidden activation: relu|tanh|sigmoid|softmax");
  train->add_option("--epochs", epochs_flag, "training epochs");
  train->add_option("--seed", seed_flag, "training seed");
  train->add_option("--history", hist_flag, "history CSV path");
  add_common(train, common);

  std::string subset = "all";
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--data", data_flag, "dataset root");
  eval->add_option("--checkpoint", ckpt_flag, "checkpoint")->required();
  eval->add_option("--subset", subset, "all|train|test (split from training)")
      ->check(CLI::IsMember({"all", "train", "test"}));
  add_common(eval, common);

  std::string image_flag;
  auto* pred = app.add_subcommand("predict", "classify one image");
  pred->add_option("--image", image_flag, "input image")->required();
  pred->add_option("--checkpoint", ckpt_flag, "checkpoint")->required();
  add_common(pred, common);

  std::size_t iters = 100;
  auto* bench = app.add_subcommand(
      "bench", "time segmentation + inference per frame");
  bench->add_option("--checkpoint", ckpt_flag, "checkpoint")->required();
  bench->add_option("--iters", iters, "timed iterations");
  bench->add_option("--image", image_flag,
                    "frame to time (default: a synthetic frame)");
  add_common(bench, common);

  std::string report_flag;
  auto* cmp = app.add_subcommand(
      "compare-activations", "train once per hidden activation and report");
  cmp->add_option("--data", data_flag, "dataset root");
  cmp->add_option("--epochs", epochs_flag, "training epochs");
  cmp->add_option("--seed", seed_flag, "training seed");
  cmp->add_option("--out", report_flag, "report CSV path");
  add_common(cmp, common);

  if (!args.empty() && !args.front().empty() && args.front()[0] != '-' &&
      app.get_subcommand_no_throw(args.front()) == nullptr) {
    err << "error: unknown subcommand '" << args.front() << "'\n"
        << app.help();
    return kExitUsage;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    CliConfig cfg = make_config(common);
    if (!data_flag.empty()) cfg.data_root = data_flag;
    if (!ckpt_flag.empty()) cfg.checkpoint = ckpt_flag;
    if (!act_flag.empty()) cfg.set("activation", act_flag);
    if (epochs_flag) cfg.train.epochs = *epochs_flag;
    if (seed_flag) cfg.train.seed = *seed_flag;
    if (!report_flag.empty()) cfg.report_out = report_flag;

    if (pre->parsed()) return run_preprocess(cfg, pre_image, pre_out, out);
    if (syn->parsed()) {
      return run_synth(cfg, syn_classes, syn_per, syn_seed, syn_out, out);
    }
    if (train->parsed()) return run_train(cfg, hist_flag, out, err);
    if (eval->parsed()) {
      return run_eval(common, cfg.checkpoint, data_flag, subset, out, err);
    }
    if (pred->parsed()) {
      return run_predict(common, cfg.checkpoint, image_flag, out);
    }
    if (bench->parsed()) {
      return run_bench(common, cfg.checkpoint, iters, image_flag, out);
    }
    if (cmp->parsed()) return run_compare(cfg, out, err);
  } catch (const InvalidConfig& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace finclass::cli
