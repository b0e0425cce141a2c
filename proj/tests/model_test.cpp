#include <cmath>
#include <random>

#include "doctest.h"
#include "finclass/error.hpp"
#include "finclass/model/checkpoint.hpp"
#include "finclass/model/network.hpp"

using namespace finclass;
using namespace finclass::model;

namespace {

nn::Tensor random_sample(std::mt19937_64& rng) {
  nn::Tensor x({100, 100, 4});
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = (i % 4 == 3) ? (u(rng) > 0.7f ? 1.0f : 0.0f) : u(rng);
  }
  return x;
}

}  // namespace

TEST_CASE("fishnet shape trace") {
  const auto net = build_fishnet(3, nn::Activation::kRelu, 1);
  const std::vector<nn::Shape> expected = {
      {96, 96, 32}, {96, 96, 32}, {19, 19, 32}, {15, 15, 64}, {15, 15, 64},
      {3, 3, 64},   {3, 3, 32},   {3, 3, 32},   {288},        {512},
      {512},        {512},        {3}};
  REQUIRE(net.layers().size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(net.layers()[i].output_shape == expected[i]);
  }
  CHECK(net.layers()[2].note.find("drops 1") != std::string::npos);
  CHECK(net.layers()[6].note.find("same padding") != std::string::npos);
  CHECK(net.shape_trace().find("[19,19,32]") != std::string::npos);
}

TEST_CASE("fishnet parameter count") {
  for (std::size_t k : {2u, 3u, 5u, 23u}) {
    const std::size_t closed = (5 * 5 * 4 * 32 + 32) + (5 * 5 * 32 * 64 + 64) +
                               (5 * 5 * 64 * 32 + 32) + (288 * 512 + 512) +
                               (512 * k + k);
    CHECK(build_fishnet(k, nn::Activation::kRelu, 0).parameter_count() == closed);
  }
  CHECK(build_fishnet(3, nn::Activation::kRelu, 0).parameter_count() == 255235);
}

TEST_CASE("fishnet rejects fewer than two classes") {
  CHECK_THROWS_AS(build_fishnet(1, nn::Activation::kRelu, 0), InvalidParameter);
}

TEST_CASE("every hidden activation builds") {
  for (auto kind : {nn::Activation::kRelu, nn::Activation::kTanh,
                    nn::Activation::kSigmoid, nn::Activation::kSoftmax}) {
    const auto net = build_fishnet(4, kind, 3);
    std::mt19937_64 rng(1);
    const auto p = predict(net, random_sample(rng));
    CHECK(p.probabilities.size() == 4);
    for (float v : p.probabilities) CHECK(std::isfinite(v));
  }
}

TEST_CASE("shape validation names the offending layer") {
  ArchitectureSpec spec;
  spec.input = {4, 4, 1};
  spec.layers = {ConvSpec{3, 2, nn::Padding::kValid}, PoolSpec{{5, 5}}, FlattenSpec{},
                 DenseSpec{2}};
  try {
    Network net(spec);
    FAIL("expected InvalidShape");
  } catch (const InvalidShape& e) {
    CHECK(std::string(e.what()).find("layer 1 (maxpool 5/5)") != std::string::npos);
  }
  spec.layers = {FlattenSpec{}, DenseSpec{1}};
  CHECK_THROWS_AS(Network{spec}, InvalidShape);
}

TEST_CASE("predict") {
  SUBCASE("untrained network is near uniform") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto net = build_fishnet(3, nn::Activation::kRelu, seed);
      std::mt19937_64 rng(seed + 100);
      const auto p = predict(net, random_sample(rng));
      for (float v : p.probabilities) CHECK(std::abs(v - 1.0f / 3.0f) <= 0.25f);
    }
  }
  SUBCASE("normalized and pure") {
    const auto net = build_fishnet(5, nn::Activation::kTanh, 4);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 5; ++i) {
      const auto x = random_sample(rng);
      const auto a = predict(net, x);
      const auto b = predict(net, x);
      CHECK(a.probabilities == b.probabilities);
      CHECK(a.label == b.label);
      double sum = 0.0;
      for (float v : a.probabilities) sum += v;
      CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
  }
  SUBCASE("wrong shape") {
    const auto net = build_fishnet(3, nn::Activation::kRelu, 0);
    CHECK_THROWS_AS(predict(net, nn::Tensor({100, 100, 3})), InvalidShape);
  }
  SUBCASE("argmax ties go to the smallest index") {
    const std::vector<float> v{0.2f, 0.4f, 0.4f};
    CHECK(argmax(v) == 1);
  }
}

TEST_CASE("network backward matches finite differences") {
  // Small stack exercising every layer kind; float precision, so the check
  // verifies wiring rather than kernel accuracy (kernels are checked in
  // double in nn_test).
  ArchitectureSpec spec;
  spec.input = {7, 7, 2};
  spec.layers = {ConvSpec{3, 3, nn::Padding::kValid}, ActivationSpec{nn::Activation::kTanh},
                 PoolSpec{{2, 2}}, ConvSpec{3, 2, nn::Padding::kSame},
                 ActivationSpec{nn::Activation::kSoftmax}, FlattenSpec{}, DenseSpec{5},
                 ActivationSpec{nn::Activation::kSigmoid}, DropoutSpec{0.7}, DenseSpec{3}};
  Network net(spec);
  net.initialize(9);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  nn::Tensor x({7, 7, 2});
  for (auto& v : x.data()) v = u(rng);
  nn::Tensor r({3}, {0.3f, -0.8f, 0.5f});
  const PassOptions opts{true, 77, 3};

  auto loss = [&] {
    const auto z = net.forward(x, opts);
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) s += double(z[i]) * r[i];
    return s;
  };
  Trace trace;
  net.forward(x, opts, &trace);
  const auto grads = net.backward(trace, r);
  auto params = net.parameters();
  REQUIRE(grads.size() == params.size());
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p]->size(); ++i) {
      float& w = (*params[p])[i];
      const float saved = w;
      const float h = 1e-2f;
      w = saved + h;
      const double up = loss();
      w = saved - h;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2.0 * (double(saved + h) - double(saved)));
      const double a = grads[p][i];
      worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-2}));
    }
  }
  CHECK(worst <= 2e-2);
}

TEST_CASE("checkpoint round trip") {
  auto net = build_fishnet(3, nn::Activation::kSigmoid, 42);
  net = Network([&] {
    auto spec = net.architecture();
    spec.metadata = {{"class.0", "bar"}, {"class.1", "Chromis chrysur"}, {"class.2", "ring"}};
    return spec;
  }());
  net.initialize(42);
  const auto bytes = serialize(net);
  const auto loaded = deserialize(bytes);
  CHECK(serialize(loaded) == bytes);
  CHECK(loaded.architecture().metadata == net.architecture().metadata);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 3; ++i) {
    const auto x = random_sample(rng);
    CHECK(predict(loaded, x).probabilities == predict(net, x).probabilities);
  }
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "FNET");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
}

TEST_CASE("checkpoint decoding errors") {
  const auto net = build_fishnet(2, nn::Activation::kRelu, 1);
  const auto good = serialize(net);

  auto bad_magic = good;
  std::copy_n("XXXX", 4, bad_magic.begin());
  CHECK_THROWS_AS(deserialize(bad_magic), FormatError);

  auto bad_version = good;
  bad_version[4] = 7;
  CHECK_THROWS_AS(deserialize(bad_version), VersionError);

  auto flipped = good;
  flipped[flipped.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(deserialize(flipped), CorruptionError);

  for (std::size_t keep : {0ul, 3ul, 10ul, good.size() / 3, good.size() - 1}) {
    const std::vector<std::uint8_t> truncated(good.begin(), good.begin() + static_cast<long>(keep));
    CHECK_THROWS_AS(deserialize(truncated), Error);
    if (keep >= 4) CHECK_THROWS_AS(deserialize(truncated), CorruptionError);
  }
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.fnet"), IoError);
}

TEST_CASE("architecture text round trip") {
  FishnetOptions o;
  o.num_classes = 7;
  o.activation = nn::Activation::kTanh;
  o.hidden_units = 128;
  o.keep_prob = 0.65;
  const auto spec = fishnet_architecture(o);
  CHECK(parse_architecture(spec.render()).render() == spec.render());
  CHECK_THROWS_AS(parse_architecture("architecture 1\ninput 3 3 1\nwarp 2\n"), FormatError);
  CHECK_THROWS_AS(parse_architecture("input 3 3 1\n"), FormatError);
}
