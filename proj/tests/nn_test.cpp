#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "finclass/error.hpp"
#include "finclass/nn/layers.hpp"
#include "oracle/gradcheck.hpp"

using namespace finclass;
using namespace finclass::nn;

namespace {

constexpr double kGradTol = 1e-4;
constexpr int kInstances = 20;

TensorD random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0,
                      double hi = 1.0) {
  const auto n = element_count(shape);
  return TensorD(std::move(shape), oracle::uniform(rng, n, lo, hi));
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + rng() % (hi - lo + 1);
}

// Direct quadruple loop, zero padding when `pad` > 0.
TensorD conv_oracle(const TensorD& in, const TensorD& w, const TensorD& b,
                    std::size_t pad) {
  const long h = static_cast<long>(in.dim(0)), wd = static_cast<long>(in.dim(1));
  const long c = static_cast<long>(in.dim(2)), k = static_cast<long>(w.dim(0));
  const long f = static_cast<long>(w.dim(3)), p = static_cast<long>(pad);
  const long oh = h + 2 * p - k + 1, ow = wd + 2 * p - k + 1;
  TensorD out({static_cast<std::size_t>(oh), static_cast<std::size_t>(ow),
               static_cast<std::size_t>(f)});
  for (long y = 0; y < oh; ++y)
    for (long x = 0; x < ow; ++x)
      for (long ff = 0; ff < f; ++ff) {
        double s = b[static_cast<std::size_t>(ff)];
        for (long dy = 0; dy < k; ++dy)
          for (long dx = 0; dx < k; ++dx)
            for (long cc = 0; cc < c; ++cc) {
              const long iy = y + dy - p, ix = x + dx - p;
              if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
              s += in[static_cast<std::size_t>((iy * wd + ix) * c + cc)] *
                   w[static_cast<std::size_t>(((dy * k + dx) * c + cc) * f + ff)];
            }
        out[static_cast<std::size_t>((y * ow + x) * f + ff)] = s;
      }
  return out;
}

}  // namespace

TEST_CASE("conv2d examples") {
  SUBCASE("first layer output shape") {
    Tensor in({100, 100, 4}, 0.5f);
    ConvParams<float> p{Tensor({5, 5, 4, 32}, 0.01f), Tensor({32}), Padding::kValid};
    CHECK(conv2d_forward(in, p).shape() == Shape{96, 96, 32});
  }
  SUBCASE("1x1 identity kernel") {
    std::mt19937_64 rng(1);
    const auto in = random_tensor(rng, {4, 5, 1});
    ConvParams<double> p{TensorD({1, 1, 1, 1}, 1.0), TensorD({1}), Padding::kValid};
    CHECK(conv2d_forward(in, p) == in);
  }
  SUBCASE("ones with 2x2 ones filter") {
    ConvParams<float> p{Tensor({2, 2, 1, 1}, 1.0f), Tensor({1}), Padding::kValid};
    const auto out = conv2d_forward(Tensor({3, 3, 1}, 1.0f), p);
    CHECK(out.shape() == Shape{2, 2, 1});
    for (auto v : out.data()) CHECK(v == 4.0f);
  }
  SUBCASE("shape errors") {
    ConvParams<float> p{Tensor({3, 3, 2, 1}), Tensor({1}), Padding::kValid};
    CHECK_THROWS_AS(conv2d_forward(Tensor({5, 5, 3}), p), InvalidShape);
    CHECK_THROWS_AS(conv2d_forward(Tensor({2, 5, 2}), p), InvalidShape);
    ConvParams<float> even{Tensor({2, 2, 1, 1}), Tensor({1}), Padding::kSame};
    CHECK_THROWS_AS(conv2d_forward(Tensor({4, 4, 1}), even), InvalidShape);
    ConvParams<float> bad_bias{Tensor({3, 3, 2, 2}), Tensor({3}), Padding::kValid};
    CHECK_THROWS_AS(conv2d_forward(Tensor({5, 5, 2}), bad_bias), InvalidShape);
  }
}

TEST_CASE("conv2d forward matches the quadruple-loop oracle") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < kInstances; ++i) {
    const std::size_t k = (i % 2) ? 3 : 1 + 2 * (rng() % 2);
    const std::size_t h = pick(rng, k, 7), w = pick(rng, k, 7), c = pick(rng, 1, 3),
                      f = pick(rng, 1, 4);
    const auto padding = (i % 3 == 0) ? Padding::kSame : Padding::kValid;
    ConvParams<double> p{random_tensor(rng, {k, k, c, f}), random_tensor(rng, {f}), padding};
    const auto in = random_tensor(rng, {h, w, c});
    const auto got = conv2d_forward(in, p);
    const auto want = conv_oracle(in, p.filters, p.bias, padding == Padding::kSame ? k / 2 : 0);
    REQUIRE(got.shape() == want.shape());
    for (std::size_t j = 0; j < got.size(); ++j) CHECK(got[j] == doctest::Approx(want[j]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d is linear in its input") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (int i = 0; i < 10; ++i) {
    Tensor x({9, 8, 3}), y({9, 8, 3}), w({3, 3, 3, 4});
    for (auto* t : {&x, &y, &w})
      for (auto& v : t->data()) v = u(rng);
    ConvParams<float> p{w, Tensor({4}), i % 2 ? Padding::kSame : Padding::kValid};
    const float a = u(rng), b = u(rng);
    Tensor mix(x.shape());
    for (std::size_t j = 0; j < mix.size(); ++j) mix[j] = a * x[j] + b * y[j];
    const auto lhs = conv2d_forward(mix, p);
    const auto cx = conv2d_forward(x, p), cy = conv2d_forward(y, p);
    double worst = 0.0;
    for (std::size_t j = 0; j < lhs.size(); ++j)
      worst = std::max(worst, double(std::abs(lhs[j] - (a * cx[j] + b * cy[j]))));
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("conv2d gradients match finite differences") {
  std::mt19937_64 rng(21);
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    const std::size_t k = (i % 2) ? 3 : 1;
    const std::size_t h = pick(rng, 3, 6), w = pick(rng, 3, 6), c = pick(rng, 1, 3),
                      f = pick(rng, 1, 3);
    const auto padding = (i % 4 < 2) ? Padding::kValid : Padding::kSame;
    ConvParams<double> p{random_tensor(rng, {k, k, c, f}), random_tensor(rng, {f}), padding};
    auto in = random_tensor(rng, {h, w, c});
    const auto out_shape = conv2d_output_shape(in.shape(), p.filters.shape(), padding);
    const auto r = oracle::uniform(rng, element_count(out_shape));
    auto loss = [&] { return oracle::dot(conv2d_forward(in, p).values(), r); };

    const auto g = conv2d_backward(in, p, TensorD(out_shape, r));
    worst = std::max(worst, oracle::max_relative_error(g.input.values(),
                                                       oracle::numeric_gradient(in.values(), loss)));
    worst = std::max(worst, oracle::max_relative_error(g.filters.values(),
                                                       oracle::numeric_gradient(p.filters.values(), loss)));
    worst = std::max(worst, oracle::max_relative_error(g.bias.values(),
                                                       oracle::numeric_gradient(p.bias.values(), loss)));
  }
  CHECK(worst <= kGradTol);
}

TEST_CASE("shared filter gradient equals the sum of per-position contributions") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 5; ++i) {
    const std::size_t c = pick(rng, 1, 3), f = pick(rng, 1, 3);
    ConvParams<double> p{random_tensor(rng, {3, 3, c, f}), random_tensor(rng, {f}), Padding::kValid};
    const auto in = random_tensor(rng, {5, 5, c});
    const auto up = random_tensor(rng, {3, 3, f});
    // Each output position contributes in[y+dy, x+dx, c] * up[y, x, f].
    TensorD summed({3, 3, c, f});
    for (std::size_t y = 0; y < 3; ++y)
      for (std::size_t x = 0; x < 3; ++x) {
        TensorD contribution({3, 3, c, f});
        for (std::size_t dy = 0; dy < 3; ++dy)
          for (std::size_t dx = 0; dx < 3; ++dx)
            for (std::size_t cc = 0; cc < c; ++cc)
              for (std::size_t ff = 0; ff < f; ++ff)
                contribution[((dy * 3 + dx) * c + cc) * f + ff] =
                    in.at(y + dy, x + dx, cc) * up.at(y, x, ff);
        for (std::size_t j = 0; j < summed.size(); ++j) summed[j] += contribution[j];
      }
    const auto g = conv2d_backward(in, p, up, false);
    CHECK(g.input.size() == 0);
    for (std::size_t j = 0; j < summed.size(); ++j)
      CHECK(g.filters[j] == doctest::Approx(summed[j]).epsilon(1e-12));
  }
}

TEST_CASE("maxpool examples") {
  CHECK(maxpool_output_shape({96, 96, 32}, {5, 5}) == Shape{19, 19, 32});
  CHECK(maxpool_output_shape({15, 15, 64}, {5, 5}) == Shape{3, 3, 64});

  const auto constant = maxpool_forward(Tensor({6, 6, 2}, 3.5f), {2, 2});
  for (auto v : constant.output.data()) CHECK(v == 3.5f);

  std::vector<float> seq(16);
  std::iota(seq.begin(), seq.end(), 1.0f);
  const auto r = maxpool_forward(Tensor({4, 4, 1}, seq), {2, 2});
  CHECK(r.output.values() == std::vector<float>{6, 8, 14, 16});

  CHECK_THROWS_AS(maxpool_forward(Tensor({3, 4, 1}), {4, 4}), InvalidShape);
  CHECK_THROWS_AS(maxpool_output_shape({3, 4}, {2, 2}), InvalidShape);
}

TEST_CASE("maxpool ties and backward routing") {
  const auto r = maxpool_forward(Tensor({2, 2, 1}, 1.0f), {2, 2});
  CHECK(r.argmax[0] == 0);

  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    const std::size_t win = pick(rng, 1, 3);
    const std::size_t h = pick(rng, win, 9), w = pick(rng, win, 9), c = pick(rng, 1, 3);
    const auto in = random_tensor(rng, {h, w, c});
    const auto fwd = maxpool_forward(in, {win, win});
    const auto up = random_tensor(rng, fwd.output.shape(), 0.5, 1.0);
    const auto g = maxpool_backward(in.shape(), fwd.argmax, up);
    // At most one nonzero per block, located at the recorded argmax.
    std::size_t o = 0;
    for (std::size_t oy = 0; oy < fwd.output.dim(0); ++oy)
      for (std::size_t ox = 0; ox < fwd.output.dim(1); ++ox)
        for (std::size_t cc = 0; cc < c; ++cc, ++o) {
          int nonzero = 0;
          for (std::size_t y = oy * win; y < (oy + 1) * win; ++y)
            for (std::size_t x = ox * win; x < (ox + 1) * win; ++x) {
              const std::size_t idx = (y * w + x) * c + cc;
              if (g[idx] != 0.0) {
                ++nonzero;
                CHECK(idx == fwd.argmax[o]);
              }
            }
          CHECK(nonzero <= 1);
        }
  }
}

TEST_CASE("maxpool gradients match finite differences") {
  std::mt19937_64 rng(22);
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    const std::size_t win = pick(rng, 1, 3);
    auto in = random_tensor(rng, {pick(rng, win, 6), pick(rng, win, 6), pick(rng, 1, 3)});
    const PoolParams p{win, win};
    const auto out_shape = maxpool_output_shape(in.shape(), p);
    const auto r = oracle::uniform(rng, element_count(out_shape));
    auto loss = [&] { return oracle::dot(maxpool_forward(in, p).output.values(), r); };
    const auto fwd = maxpool_forward(in, p);
    const auto g = maxpool_backward(in.shape(), fwd.argmax, TensorD(out_shape, r));
    worst = std::max(worst, oracle::max_relative_error(g.values(),
                                                       oracle::numeric_gradient(in.values(), loss)));
  }
  CHECK(worst <= kGradTol);
}

TEST_CASE("dense examples") {
  TensorD eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
  const TensorD x({3}, {0.5, -2.0, 4.0});
  CHECK(dense_forward(x, eye, TensorD({3})) == x);

  const Tensor w({2, 2}, {1, 2, 3, 4});
  const auto a = dense_forward(Tensor({2}, {1, 1}), w, Tensor({2}, {0.5f, -0.5f}));
  CHECK(a.values() == std::vector<float>{3.5f, 6.5f});

  const Tensor g({2}, {0.25f, -1.5f});
  CHECK(dense_backward(Tensor({2}, {1, 1}), w, g).bias == g);

  CHECK_THROWS_AS(dense_forward(Tensor({3}), w, Tensor({2})), InvalidShape);
  CHECK_THROWS_AS(dense_forward(Tensor({2}), w, Tensor({3})), InvalidShape);
}

TEST_CASE("dense gradients match finite differences") {
  std::mt19937_64 rng(23);
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    const std::size_t n = pick(rng, 1, 8), m = pick(rng, 1, 8);
    auto x = random_tensor(rng, {n});
    auto w = random_tensor(rng, {m, n});
    auto b = random_tensor(rng, {m});
    const auto r = oracle::uniform(rng, m);
    auto loss = [&] { return oracle::dot(dense_forward(x, w, b).values(), r); };
    const auto g = dense_backward(x, w, TensorD({m}, r));
    worst = std::max({worst,
                      oracle::max_relative_error(g.input.values(), oracle::numeric_gradient(x.values(), loss)),
                      oracle::max_relative_error(g.weights.values(), oracle::numeric_gradient(w.values(), loss)),
                      oracle::max_relative_error(g.bias.values(), oracle::numeric_gradient(b.values(), loss))});
  }
  CHECK(worst <= kGradTol);
}

TEST_CASE("activation examples") {
  const Tensor x({2}, {-2.0f, 3.5f});
  CHECK(activation_forward(Activation::kRelu, x).values() == std::vector<float>{0.0f, 3.5f});
  CHECK(activation_forward(Activation::kTanh, Tensor({1}))[0] == 0.0f);
  CHECK(activation_forward(Activation::kSigmoid, Tensor({1}))[0] == 0.5f);

  const auto half = activation_forward(Activation::kSoftmax, TensorD({2}));
  CHECK(half.values() == std::vector<double>{0.5, 0.5});
  const auto s = activation_forward(Activation::kSoftmax, TensorD({3}, {1, 2, 3}));
  CHECK(s[0] == doctest::Approx(0.09003057).epsilon(1e-7));
  CHECK(s[1] == doctest::Approx(0.24472847).epsilon(1e-7));
  CHECK(s[2] == doctest::Approx(0.66524096).epsilon(1e-7));

  CHECK(parse_activation("tanh") == Activation::kTanh);
  CHECK_THROWS_AS(parse_activation("swish"), InvalidParameter);
  CHECK_THROWS_AS(activation_forward(Activation::kSoftmax, Tensor({2, 2, 2})), InvalidShape);
  // Large magnitudes stay finite.
  const auto big = activation_forward(Activation::kSigmoid, Tensor({2}, {-200.0f, 200.0f}));
  CHECK(big[0] == 0.0f);
  CHECK(big[1] == 1.0f);
  const auto sm = activation_forward(Activation::kSoftmax, Tensor({2}, {1000.0f, 0.0f}));
  CHECK(sm[0] == 1.0f);
}

TEST_CASE("softmax normalization and shift invariance") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 50; ++i) {
    const std::size_t k = pick(rng, 2, 10);
    const auto z = random_tensor(rng, {k}, -20.0, 20.0);
    const double c = oracle::uniform(rng, 1, -50.0, 50.0)[0];
    TensorD shifted = z;
    for (auto& v : shifted.data()) v += c;
    const auto a = activation_forward(Activation::kSoftmax, z);
    const auto b = activation_forward(Activation::kSoftmax, shifted);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      sum += a[j];
      CHECK(std::abs(a[j] - b[j]) <= 1e-6);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

TEST_CASE("activation gradients match finite differences") {
  std::mt19937_64 rng(24);
  for (auto kind : {Activation::kRelu, Activation::kTanh, Activation::kSigmoid,
                    Activation::kSoftmax}) {
    double worst = 0.0;
    for (int i = 0; i < kInstances; ++i) {
      const Shape shape = kind == Activation::kSoftmax
                              ? Shape{pick(rng, 2, 8)}
                              : Shape{pick(rng, 1, 4), pick(rng, 1, 4), pick(rng, 1, 3)};
      auto x = random_tensor(rng, shape, -3.0, 3.0);
      if (kind == Activation::kRelu)
        for (auto& v : x.data()) if (std::abs(v) < 1e-3) v = 0.5;
      const auto r = oracle::uniform(rng, x.size());
      auto loss = [&] { return oracle::dot(activation_forward(kind, x).values(), r); };
      const auto y = activation_forward(kind, x);
      const auto g = activation_backward(kind, x, y, TensorD(shape, r));
      worst = std::max(worst, oracle::max_relative_error(g.values(),
                                                         oracle::numeric_gradient(x.values(), loss)));
    }
    INFO("activation " << activation_name(kind));
    CHECK(worst <= kGradTol);
  }
}

TEST_CASE("channel softmax gradients match finite differences") {
  std::mt19937_64 rng(25);
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    const Shape shape{pick(rng, 1, 4), pick(rng, 1, 4), pick(rng, 2, 5)};
    auto x = random_tensor(rng, shape, -3.0, 3.0);
    const auto r = oracle::uniform(rng, x.size());
    auto loss = [&] { return oracle::dot(softmax_last_axis(x).values(), r); };
    const auto g = softmax_last_axis_backward(softmax_last_axis(x), TensorD(shape, r));
    worst = std::max(worst, oracle::max_relative_error(g.values(),
                                                       oracle::numeric_gradient(x.values(), loss)));
  }
  CHECK(worst <= kGradTol);
}

TEST_CASE("dropout") {
  const Tensor ones({1000}, 1.0f);
  SUBCASE("inference and full keep are identities") {
    CHECK(dropout_forward(ones, {0.3, 1, 2}, false).output == ones);
    CHECK(dropout_forward(ones, {1.0, 1, 2}, true).output == ones);
  }
  SUBCASE("seeded pattern at keep 0.5") {
    const DropoutState state{0.5, 42, 7};
    const auto a = dropout_forward(ones, state, true);
    const auto b = dropout_forward(ones, state, true);
    CHECK(a.output == b.output);
    std::size_t kept = 0;
    for (auto v : a.output.data()) {
      CHECK((v == 2.0f || v == 0.0f));
      kept += v == 2.0f;
    }
    CHECK(kept > 400);
    CHECK(kept < 600);
    CHECK(dropout_forward(ones, {0.5, 42, 8}, true).output != a.output);
    CHECK(dropout_mask(1000, state) == a.mask);
  }
  SUBCASE("bad keep probability") {
    CHECK_THROWS_AS(dropout_forward(ones, {0.0, 1, 1}, true), InvalidParameter);
    CHECK_THROWS_AS(dropout_forward(ones, {1.5, 1, 1}, false), InvalidParameter);
  }
  SUBCASE("expectation over seeded draws") {
    const TensorD x({4}, {0.7, -1.3, 2.0, 0.05});
    const double keep = 0.8;
    const int draws = 20000;
    std::vector<double> sum(4, 0.0), sq(4, 0.0);
    for (int d = 0; d < draws; ++d) {
      const auto y = dropout_forward(x, {keep, 99, static_cast<std::uint64_t>(d)}, true).output;
      for (std::size_t j = 0; j < 4; ++j) {
        sum[j] += y[j];
        sq[j] += y[j] * y[j];
      }
    }
    for (std::size_t j = 0; j < 4; ++j) {
      const double mean = sum[j] / draws;
      const double var = sq[j] / draws - mean * mean;
      const double se = std::sqrt(var / draws);
      CHECK(std::abs(mean - x[j]) <= 3.0 * se);
    }
  }
}

TEST_CASE("dropout gradients match finite differences") {
  std::mt19937_64 rng(26);
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    auto x = random_tensor(rng, {pick(rng, 1, 30)});
    const DropoutState state{0.5 + 0.02 * i, rng(), rng()};
    const auto r = oracle::uniform(rng, x.size());
    auto loss = [&] { return oracle::dot(dropout_forward(x, state, true).output.values(), r); };
    const auto fwd = dropout_forward(x, state, true);
    const auto g = dropout_backward(TensorD(x.shape(), r), fwd.mask, state.keep_prob);
    worst = std::max(worst, oracle::max_relative_error(g.values(),
                                                       oracle::numeric_gradient(x.values(), loss)));
  }
  CHECK(worst <= kGradTol);
}

TEST_CASE("softmax cross-entropy") {
  SUBCASE("two-class uniform logits") {
    const TensorD z({2}), t({2}, {1, 0});
    CHECK(softmax_cross_entropy_loss(z, t) == doctest::Approx(1.3862943611198906).epsilon(1e-12));
    CHECK(softmax_cross_entropy_loss(z, t, LossForm::kCategorical) ==
          doctest::Approx(0.6931471805599453).epsilon(1e-12));
    auto zz = z;
    auto loss = [&] { return softmax_cross_entropy_loss(zz, t); };
    const auto numeric = oracle::numeric_gradient(zz.values(), loss);
    CHECK(oracle::max_relative_error(softmax_cross_entropy_grad(z, t).values(), numeric) <= 1e-6);
  }
  SUBCASE("perfect prediction is near zero") {
    for (std::size_t k : {2u, 3u, 7u}) {
      TensorD z({k}), t({k});
      z[1] = 100.0;
      t[1] = 1.0;
      const double bound = 2.0 * k * kProbabilityClamp * std::abs(std::log(kProbabilityClamp));
      CHECK(softmax_cross_entropy_loss(z, t) <= bound);
      CHECK(softmax_cross_entropy_loss(z, t) >= 0.0);
    }
  }
  SUBCASE("target validation") {
    const Tensor z({3});
    CHECK_THROWS_AS(softmax_cross_entropy_loss(z, Tensor({3}, {0.5f, 0.5f, 0.0f})), InvalidInput);
    CHECK_THROWS_AS(softmax_cross_entropy_loss(z, Tensor({3}, {1, 1, 0})), InvalidInput);
    CHECK_THROWS_AS(softmax_cross_entropy_loss(z, Tensor({3})), InvalidInput);
    CHECK_THROWS_AS(softmax_cross_entropy_grad(z, Tensor({2}, {1, 0})), InvalidInput);
    CHECK_THROWS_AS(softmax_cross_entropy_loss(Tensor({1}), Tensor({1}, {1})), InvalidInput);
    CHECK(parse_loss_form("categorical") == LossForm::kCategorical);
    CHECK_THROWS_AS(parse_loss_form("hinge"), InvalidParameter);
  }
  SUBCASE("non-negative and gradient-checked on random logits") {
    std::mt19937_64 rng(27);
    for (auto form : {LossForm::kTwoTerm, LossForm::kCategorical}) {
      double worst = 0.0;
      for (int i = 0; i < kInstances; ++i) {
        const std::size_t k = pick(rng, 2, 8);
        auto z = random_tensor(rng, {k}, -4.0, 4.0);
        TensorD t({k});
        t[rng() % k] = 1.0;
        CHECK(softmax_cross_entropy_loss(z, t, form) >= 0.0);
        auto loss = [&] { return softmax_cross_entropy_loss(z, t, form); };
        const auto g = softmax_cross_entropy_grad(z, t, form);
        worst = std::max(worst, oracle::max_relative_error(g.values(),
                                                           oracle::numeric_gradient(z.values(), loss)));
      }
      CHECK(worst <= kGradTol);
    }
  }
}
