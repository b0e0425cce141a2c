#include "finclass/model/network.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "finclass/error.hpp"

namespace finclass::model {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string layer_name(const LayerSpec& spec) {
  return std::visit(
      Overloaded{
          [](const ConvSpec& c) {
            return "conv " + std::to_string(c.kernel) + "x" +
                   std::to_string(c.kernel) + "x" + std::to_string(c.filters) +
                   (c.padding == nn::Padding::kSame ? " same" : " valid");
          },
          [](const PoolSpec& p) {
            return "maxpool " + std::to_string(p.params.window) + "/" +
                   std::to_string(p.params.stride);
          },
          [](const ActivationSpec& a) {
            return std::string(nn::activation_name(a.kind));
          },
          [](const FlattenSpec&) { return std::string("flatten"); },
          [](const DenseSpec& d) { return "dense " + std::to_string(d.units); },
          [](const DropoutSpec& d) {
            std::ostringstream os;
            os << "dropout keep " << d.keep_prob;
            return os.str();
          },
      },
      spec);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string ArchitectureSpec::render() const {
  std::ostringstream os;
  os << "architecture 1\n";
  os << "input";
  for (auto d : input) os << ' ' << d;
  os << '\n';
  for (const auto& layer : layers) {
    std::visit(
        Overloaded{
            [&](const ConvSpec& c) {
              os << "conv " << c.kernel << ' ' << c.filters << ' '
                 << (c.padding == nn::Padding::kSame ? "same" : "valid") << '\n';
            },
            [&](const PoolSpec& p) {
              os << "pool " << p.params.window << ' ' << p.params.stride << '\n';
            },
            [&](const ActivationSpec& a) {
              os << "activation " << nn::activation_name(a.kind) << '\n';
            },
            [&](const FlattenSpec&) { os << "flatten\n"; },
            [&](const DenseSpec& d) { os << "dense " << d.units << '\n'; },
            [&](const DropoutSpec& d) {
              os << "dropout " << format_double(d.keep_prob) << '\n';
            },
        },
        layer);
  }
  for (const auto& [key, value] : metadata) {
    os << "meta " << key << '=' << value << '\n';
  }
  return os.str();
}

ArchitectureSpec parse_architecture(const std::string& text) {
  ArchitectureSpec spec;
  spec.input.clear();
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  auto fail = [&](const std::string& why) -> FormatError {
    return FormatError("architecture line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("meta ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw fail("meta entry without '='");
      spec.metadata.emplace_back(line.substr(5, eq - 5), line.substr(eq + 1));
      continue;
    }
    std::istringstream in(line);
    std::string kind;
    in >> kind;
    if (kind == "architecture") {
      int version = 0;
      if (!(in >> version) || version != 1) throw fail("unsupported architecture version");
      saw_header = true;
    } else if (kind == "input") {
      std::size_t d;
      while (in >> d) spec.input.push_back(d);
      if (spec.input.empty()) throw fail("input without extents");
    } else if (kind == "conv") {
      ConvSpec c;
      std::string pad;
      if (!(in >> c.kernel >> c.filters >> pad)) throw fail("bad conv");
      if (pad != "same" && pad != "valid") throw fail("bad conv padding");
      c.padding = pad == "same" ? nn::Padding::kSame : nn::Padding::kValid;
      spec.layers.emplace_back(c);
    } else if (kind == "pool") {
      PoolSpec p;
      if (!(in >> p.params.window >> p.params.stride)) throw fail("bad pool");
      spec.layers.emplace_back(p);
    } else if (kind == "activation") {
      std::string name;
      if (!(in >> name)) throw fail("bad activation");
      try {
        spec.layers.emplace_back(ActivationSpec{nn::parse_activation(name)});
      } catch (const InvalidParameter& e) {
        throw fail(e.what());
      }
    } else if (kind == "flatten") {
      spec.layers.emplace_back(FlattenSpec{});
    } else if (kind == "dense") {
      DenseSpec d;
      if (!(in >> d.units)) throw fail("bad dense");
      spec.layers.emplace_back(d);
    } else if (kind == "dropout") {
      DropoutSpec d;
      if (!(in >> d.keep_prob)) throw fail("bad dropout");
      spec.layers.emplace_back(d);
    } else {
      throw fail("unknown layer '" + kind + "'");
    }
  }
  if (!saw_header) throw FormatError("architecture header missing");
  if (spec.input.empty()) throw FormatError("architecture input shape missing");
  return spec;
}

ArchitectureSpec fishnet_architecture(const FishnetOptions& options) {
  if (options.num_classes < 2) {
    throw InvalidParameter("fishnet needs num_classes >= 2, got " +
                           std::to_string(options.num_classes));
  }
  if (options.hidden_units == 0) {
    throw InvalidParameter("fishnet hidden width must be >= 1");
  }
  const ActivationSpec act{options.activation};
  ArchitectureSpec spec;
  spec.input = {100, 100, 4};
  spec.layers = {
      ConvSpec{5, 32, nn::Padding::kValid}, act, PoolSpec{{5, 5}},
      ConvSpec{5, 64, nn::Padding::kValid}, act, PoolSpec{{5, 5}},
      ConvSpec{5, 32, nn::Padding::kSame},  act, FlattenSpec{},
      DenseSpec{options.hidden_units},      act, DropoutSpec{options.keep_prob},
      DenseSpec{options.num_classes},
  };
  return spec;
}

Network::Network(ArchitectureSpec spec) : spec_(std::move(spec)) {
  if (spec_.layers.empty()) throw InvalidShape("network has no layers");
  nn::Shape shape = spec_.input;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    Layer layer;
    layer.spec = spec_.layers[i];
    layer.input_shape = shape;
    const std::string where =
        "layer " + std::to_string(i) + " (" + layer_name(layer.spec) + ")";
    try {
      std::visit(
          Overloaded{
              [&](const ConvSpec& c) {
                const nn::Shape filters{c.kernel, c.kernel,
                                        shape.size() == 3 ? shape[2] : 0, c.filters};
                layer.output_shape = nn::conv2d_output_shape(shape, filters, c.padding);
                layer.weights = nn::Tensor(filters);
                layer.bias = nn::Tensor({c.filters});
                if (c.padding == nn::Padding::kSame) {
                  layer.note = "same padding keeps the spatial extent";
                }
              },
              [&](const PoolSpec& p) {
                layer.output_shape = nn::maxpool_output_shape(shape, p.params);
                const auto used = (layer.output_shape[0] - 1) * p.params.stride +
                                  p.params.window;
                if (used != shape[0]) {
                  layer.note = "floor pooling drops " +
                               std::to_string(shape[0] - used) +
                               " trailing rows/columns";
                }
              },
              [&](const ActivationSpec&) { layer.output_shape = shape; },
              [&](const FlattenSpec&) {
                layer.output_shape = {nn::element_count(shape)};
              },
              [&](const DenseSpec& d) {
                if (shape.size() != 1) {
                  throw InvalidShape("dense needs a rank-1 input, got " +
                                     nn::to_string(shape));
                }
                if (d.units == 0) throw InvalidShape("dense with zero units");
                layer.output_shape = {d.units};
                layer.weights = nn::Tensor({d.units, shape[0]});
                layer.bias = nn::Tensor({d.units});
              },
              [&](const DropoutSpec& d) {
                if (!(d.keep_prob > 0.0 && d.keep_prob <= 1.0)) {
                  throw InvalidShape("dropout keep_prob outside (0, 1]");
                }
                layer.output_shape = shape;
              },
          },
          layer.spec);
    } catch (const Error& e) {
      throw InvalidShape(where + ": " + e.what());
    }
    shape = layer.output_shape;
    layers_.push_back(std::move(layer));
  }
  if (shape.size() != 1 || shape[0] < 2) {
    throw InvalidShape("network output must be a rank-1 vector of >= 2 classes, got " +
                       nn::to_string(shape));
  }
}

std::vector<nn::Tensor*> Network::parameters() {
  std::vector<nn::Tensor*> out;
  for (auto& l : layers_) {
    if (!l.trainable()) continue;
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const nn::Tensor*> Network::parameters() const {
  std::vector<const nn::Tensor*> out;
  for (const auto& l : layers_) {
    if (!l.trainable()) continue;
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->size();
  return n;
}

void Network::initialize(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const Layer* classifier = nullptr;
  for (const auto& l : layers_) {
    if (l.trainable()) classifier = &l;
  }
  for (auto& l : layers_) {
    if (!l.trainable()) continue;
    const std::size_t fan_in = l.weights.size() / l.bias.size();
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    if (&l == classifier) limit *= kClassifierInitScale;
    for (auto& w : l.weights.data()) {
      const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      w = static_cast<float>((2.0 * u - 1.0) * limit);
    }
    l.bias.fill(0.0f);
  }
}

nn::Tensor Network::forward(const nn::Tensor& input, const PassOptions& options,
                            Trace* trace) const {
  if (input.shape() != spec_.input) {
    throw InvalidShape("network input must have shape " +
                       nn::to_string(spec_.input) + ", got " +
                       nn::to_string(input.shape()));
  }
  if (trace) {
    trace->values.clear();
    trace->values.reserve(layers_.size() + 1);
    trace->argmax.assign(layers_.size(), {});
    trace->dropout_masks.assign(layers_.size(), {});
  }
  nn::Tensor x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    nn::Tensor y = std::visit(
        Overloaded{
            [&](const ConvSpec& c) {
              // TODO: conv params are copied per call; pass filters/bias by view.
              return nn::conv2d_forward(x, nn::ConvParams<float>{l.weights, l.bias, c.padding});
            },
            [&](const PoolSpec& p) {
              auto r = nn::maxpool_forward(x, p.params);
              if (trace) trace->argmax[i] = std::move(r.argmax);
              return std::move(r.output);
            },
            [&](const ActivationSpec& a) {
              if (a.kind == nn::Activation::kSoftmax && x.rank() != 1) {
                return nn::softmax_last_axis(x);
              }
              return nn::activation_forward(a.kind, x);
            },
            [&](const FlattenSpec&) { return x.reshaped({x.size()}); },
            [&](const DenseSpec&) { return nn::dense_forward(x, l.weights, l.bias); },
            [&](const DropoutSpec& d) {
              const nn::DropoutState state{d.keep_prob, options.dropout_seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)),
                                           options.dropout_counter};
              auto r = nn::dropout_forward(x, state, options.training);
              if (trace) trace->dropout_masks[i] = std::move(r.mask);
              return std::move(r.output);
            },
        },
        l.spec);
    if (trace) trace->values.push_back(std::move(x));
    x = std::move(y);
  }
  if (trace) trace->values.push_back(x);
  return x;
}

Gradients Network::backward(const Trace& trace, const nn::Tensor& grad_logits) const {
  if (trace.values.size() != layers_.size() + 1) {
    throw InvalidInput("backward needs a trace recorded by forward");
  }
  if (grad_logits.shape() != output_shape()) {
    throw InvalidShape("logit gradient has shape " + nn::to_string(grad_logits.shape()));
  }
  Gradients grads(parameters().size());
  std::size_t slot = grads.size();
  nn::Tensor g = grad_logits;
  for (std::size_t idx = layers_.size(); idx-- > 0;) {
    const Layer& l = layers_[idx];
    const nn::Tensor& in = trace.values[idx];
    const nn::Tensor& out = trace.values[idx + 1];
    const bool need_input = idx > 0;
    std::visit(
        Overloaded{
            [&](const ConvSpec& c) {
              auto r = nn::conv2d_backward(
                  in, nn::ConvParams<float>{l.weights, l.bias, c.padding}, g, need_input);
              grads[--slot] = std::move(r.bias);
              grads[--slot] = std::move(r.filters);
              g = std::move(r.input);
            },
            [&](const PoolSpec&) {
              g = nn::maxpool_backward(in.shape(), trace.argmax[idx], g);
            },
            [&](const ActivationSpec& a) {
              if (a.kind == nn::Activation::kSoftmax && in.rank() != 1) {
                g = nn::softmax_last_axis_backward(out, g);
              } else {
                g = nn::activation_backward(a.kind, in, out, g);
              }
            },
            [&](const FlattenSpec&) { g = g.reshaped(in.shape()); },
            [&](const DenseSpec&) {
              auto r = nn::dense_backward(in, l.weights, g);
              grads[--slot] = std::move(r.bias);
              grads[--slot] = std::move(r.weights);
              g = std::move(r.input);
            },
            [&](const DropoutSpec& d) {
              g = nn::dropout_backward(g, trace.dropout_masks[idx], d.keep_prob);
            },
        },
        l.spec);
  }
  return grads;
}

Gradients Network::zero_gradients() const {
  Gradients out;
  for (const auto* p : parameters()) out.emplace_back(p->shape());
  return out;
}

std::string Network::shape_trace() const {
  std::ostringstream os;
  os << "input " << nn::to_string(spec_.input) << '\n';
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    os << i << ": " << layer_name(l.spec) << " -> " << nn::to_string(l.output_shape);
    if (l.trainable()) {
      os << "  params " << l.weights.size() + l.bias.size();
    }
    if (!l.note.empty()) os << "  (" << l.note << ')';
    os << '\n';
  }
  os << "trainable parameters: " << parameter_count() << '\n';
  return os.str();
}

Network build_fishnet(const FishnetOptions& options, std::uint64_t seed) {
  Network net(fishnet_architecture(options));
  net.initialize(seed);
  return net;
}

Network build_fishnet(std::size_t num_classes, nn::Activation activation,
                      std::uint64_t seed) {
  FishnetOptions options;
  options.num_classes = num_classes;
  options.activation = activation;
  return build_fishnet(options, seed);
}

std::size_t argmax(std::span<const float> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Prediction predict(const Network& network, const nn::Tensor& sample) {
  const auto logits = network.forward(sample, PassOptions{});
  auto probs = nn::softmax_last_axis(logits);
  Prediction p;
  p.probabilities = std::move(probs.values());
  p.label = argmax(p.probabilities);
  return p;
}

}  // namespace finclass::model
