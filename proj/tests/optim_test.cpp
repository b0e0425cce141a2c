#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "finclass/data/synth.hpp"
#include "finclass/error.hpp"
#include "finclass/optim/adam.hpp"
#include "finclass/optim/training.hpp"

using namespace finclass;
using namespace finclass::optim;
using nn::Tensor;
using nn::TensorD;

namespace {

// Scalar Adam written straight from the recurrence.
struct ScalarAdam {
  double m = 0, v = 0;
  int t = 0;
  double step(double theta, double g, const AdamHyper& h = {}) {
    ++t;
    m = h.beta1 * m + (1 - h.beta1) * g;
    v = h.beta2 * v + (1 - h.beta2) * g * g;
    const double mh = m / (1 - std::pow(h.beta1, t));
    const double vh = v / (1 - std::pow(h.beta2, t));
    return theta - h.lr * mh / (std::sqrt(vh) + h.epsilon);
  }
};

void step_one(TensorD& theta, const TensorD& g,
              BasicAdamState<double>& state) {
  TensorD* p = &theta;
  adam_step<double>(std::span<TensorD* const>(&p, 1),
                    std::span<const TensorD>(&g, 1), state);
}

// Two classes told apart by which quadrant holds a bright block.
data::Dataset toy_dataset(std::size_t n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> noise(0.0f, 0.2f);
  data::Dataset ds;
  ds.class_names = {"a", "b"};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    Tensor t({100, 100, 4});
    for (auto& x : t.data()) x = noise(rng);
    const std::size_t off = label == 0 ? 10 : 60;
    for (std::size_t y = off; y < off + 30; ++y)
      for (std::size_t x = off; x < off + 30; ++x)
        for (std::size_t c = 0; c < 4; ++c) t.at(y, x, c) = 1.0f;
    ds.samples.push_back({std::move(t), label, "toy/" + std::to_string(i)});
  }
  return ds;
}

}  // namespace

TEST_CASE("adam_step") {
  SUBCASE("zero gradient on a fresh state leaves parameters unchanged") {
    TensorD theta({3}, std::vector<double>{1.5, -2.0, 0.25});
    const TensorD before = theta;
    BasicAdamState<double> state;
    step_one(theta, TensorD({3}), state);
    CHECK(theta == before);
    CHECK(state.t == 1);
  }
  SUBCASE("first step closed form") {
    TensorD theta({1}, 1.0);
    BasicAdamState<double> state;
    step_one(theta, TensorD({1}, 0.1), state);
    const double expected = 1.0 - 1e-3 * 0.1 / (0.1 + 1e-8);
    CHECK(std::abs(theta[0] - expected) <= 1e-9);
    CHECK(std::abs(theta[0] - 0.999) <= 1e-9);
  }
  SUBCASE("constant gradient keeps step size near lr") {
    TensorD theta({1}, 1.0);
    BasicAdamState<double> state;
    step_one(theta, TensorD({1}, 0.1), state);
    const double after_one = theta[0];
    step_one(theta, TensorD({1}, 0.1), state);
    CHECK(std::abs((after_one - theta[0]) - 1e-3) <= 1e-9);
  }
  SUBCASE("matches the scalar recurrence and keeps invariants") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TensorD theta({5});
    for (auto& x : theta.data()) x = u(rng);
    std::vector<ScalarAdam> ref(5);
    std::vector<double> ref_theta(theta.values());
    BasicAdamState<double> state;
    state.hyper.lr = 0.01;
    for (int s = 0; s < 25; ++s) {
      TensorD g({5});
      for (auto& x : g.data()) x = u(rng);
      step_one(theta, g, state);
      for (std::size_t i = 0; i < 5; ++i)
        ref_theta[i] = ref[i].step(ref_theta[i], g[i], state.hyper);
      CHECK(state.t == static_cast<std::uint64_t>(s + 1));
      for (double v : state.v[0].data()) CHECK(v >= 0.0);
    }
    for (std::size_t i = 0; i < 5; ++i)
      CHECK(std::abs(theta[i] - ref_theta[i]) <= 1e-12);
  }
  SUBCASE("shape mismatch") {
    TensorD theta({3});
    BasicAdamState<double> state;
    CHECK_THROWS_AS(step_one(theta, TensorD({4}), state), InvalidInput);
  }
}

TEST_CASE("compute_metrics") {
  SUBCASE("all correct") {
    const std::vector<std::size_t> y{0, 1, 2, 1};
    const Metrics m = compute_metrics(y, y, 3);
    CHECK(m.accuracy == 100.0);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c)
        CHECK(m.confusion[r][c] == (r == c ? (r == 1 ? 2u : 1u) : 0u));
  }
  SUBCASE("hand-counted three-class case") {
    const std::vector<std::size_t> truth{0, 1, 1}, pred{0, 0, 1};
    const Metrics m = compute_metrics(truth, pred, 3);
    CHECK(m.accuracy == doctest::Approx(66.6667).epsilon(1e-5));
    CHECK(m.confusion[1][0] == 1);
    CHECK(m.precision[0].value() == doctest::Approx(0.5));
    CHECK(m.precision[1].value() == 1.0);
    CHECK_FALSE(m.precision[2].has_value());
    CHECK(m.recall[1].value() == 0.5);
    CHECK_FALSE(m.recall[2].has_value());
  }
  SUBCASE("single wrong sample") {
    const std::vector<std::size_t> truth{1}, pred{0};
    CHECK(compute_metrics(truth, pred, 2).accuracy == 0.0);
  }
  SUBCASE("accounting identities") {
    std::mt19937_64 rng(5);
    std::vector<std::size_t> truth(97), pred(97);
    for (auto& x : truth) x = rng() % 4;
    for (auto& x : pred) x = rng() % 4;
    const Metrics m = compute_metrics(truth, pred, 4);
    std::size_t sum = 0, trace = 0;
    for (std::size_t r = 0; r < 4; ++r) {
      trace += m.confusion[r][r];
      for (auto c : m.confusion[r]) sum += c;
    }
    CHECK(sum == 97);
    CHECK(trace == m.correct);
    const double errors = 97.0 - static_cast<double>(m.correct);
    CHECK(m.accuracy + 100.0 * errors / 97.0 == doctest::Approx(100.0));
  }
  SUBCASE("empty") {
    CHECK_THROWS_AS(compute_metrics({}, {}, 2), InvalidInput);
  }
}

TEST_CASE("fit") {
  const data::Dataset toy = toy_dataset(20);

  SUBCASE("separable toy set reaches 100% training accuracy") {
    auto net = model::build_fishnet(2, nn::Activation::kRelu, 4);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 4;
    cfg.seed = 4;
    const History h = fit(net, toy, cfg);
    CHECK(h.rows.size() == 50);
    CHECK(evaluate(net, toy).accuracy == 100.0);
  }
  SUBCASE("deterministic, and independent of the thread count") {
    const data::Dataset small = toy_dataset(6);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 3;
    cfg.seed = 9;
    auto run = [&](unsigned threads, model::Network& net) {
      cfg.threads = threads;
      std::ostringstream csv;
      write_history_csv(csv, fit(net, small, cfg));
      return csv.str();
    };
    auto a = model::build_fishnet(2, nn::Activation::kTanh, 1);
    auto b = model::build_fishnet(2, nn::Activation::kTanh, 1);
    auto c = model::build_fishnet(2, nn::Activation::kTanh, 1);
    const std::string ha = run(1, a);
    CHECK(ha == run(1, b));
    CHECK(ha == run(3, c));
    CHECK(ha.rfind("epoch,step,loss,train_accuracy\n", 0) == 0);
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    const auto pc = c.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(*pa[i] == *pb[i]);
      CHECK(*pa[i] == *pc[i]);
    }
  }
  SUBCASE("invalid configuration and data") {
    auto net = model::build_fishnet(2, nn::Activation::kRelu, 1);
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(fit(net, toy, cfg), InvalidConfig);
    cfg.epochs = 1;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(fit(net, toy, cfg), InvalidConfig);
    cfg.batch_size = 2;
    data::Dataset empty;
    empty.class_names = {"a", "b"};
    CHECK_THROWS_AS(fit(net, empty, cfg), InvalidInput);
    CHECK_THROWS_AS(evaluate(net, empty), InvalidInput);
  }
  SUBCASE("non-finite loss names the step") {
    data::Dataset bad = toy_dataset(4);
    bad.samples[2].tensor.fill(std::nanf(""));
    // tanh propagates NaN; relu's comparison would map it to zero.
    auto net = model::build_fishnet(2, nn::Activation::kTanh, 1);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 1;
    cfg.shuffle = false;
    try {
      fit(net, bad, cfg);
      FAIL("expected divergence");
    } catch (const DivergedError& e) {
      CHECK(std::string(e.what()).find("step 2") != std::string::npos);
    }
  }
}

TEST_CASE("relu, tanh and sigmoid networks reduce loss on synthetic data") {
  const data::Dataset ds = data::synth_generate(2, 8, 3);
  for (auto kind : {nn::Activation::kRelu, nn::Activation::kTanh,
                    nn::Activation::kSigmoid}) {
    auto net = model::build_fishnet(2, kind, 1);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 4;
    const auto losses = fit(net, ds, cfg).epoch_losses();
    INFO(nn::activation_name(kind));
    CHECK(losses.back() < losses.front());
  }
}
