#include <doctest.h>

#include "dgaimpute/error.hpp"
#include "dgaimpute/mlp.hpp"
#include "dgaimpute/rng.hpp"
#include "support.hpp"

#include <sstream>

using namespace dga;

namespace {

std::vector<LayerSpec> chain(std::vector<std::size_t> sizes, std::vector<Activation> acts) {
  std::vector<LayerSpec> out;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
    out.push_back({sizes[i], sizes[i + 1], acts[i]});
  return out;
}

std::vector<Pattern> random_batch(std::size_t n, std::size_t in, std::size_t out, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Pattern> batch(n);
  for (auto &p : batch) {
    for (std::size_t i = 0; i < in; ++i)
      p.input.push_back(rng.uniform(0.1, 0.9));
    for (std::size_t i = 0; i < out; ++i)
      p.target.push_back(rng.uniform(0.1, 0.9));
  }
  return batch;
}

// Plain-loop re-summation of the batch error, independent of the library.
double resum(const Network &net, const std::vector<Pattern> &batch) {
  double total = 0.0;
  for (const auto &p : batch) {
    const auto y = forward(net, p.input);
    double s = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j)
      s += (y[j] - p.target[j]) * (y[j] - p.target[j]);
    total += s / 2.0;
  }
  return total / static_cast<double>(batch.size());
}

Errc code_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected dga::Error");
  return Errc::IoError;
}

} // namespace

TEST_CASE("forward: zero sigmoid layer outputs one half") {
  Network net({{4, 3, Activation::sigmoid()}});
  const std::vector<double> x{1.0, -2.0, 3.0, 100.0};
  for (double y : forward(net, x))
    CHECK(y == 0.5);
}

TEST_CASE("forward: tanh of zero is zero") {
  Network net({{2, 2, Activation::tanh_c(1.0)}});
  for (double y : forward(net, std::vector<double>{5.0, -5.0}))
    CHECK(y == 0.0);
}

TEST_CASE("forward: 2-2-1 hand evaluation") {
  Network net(chain({2, 2, 1}, {Activation::tanh_c(1.0), Activation::sigmoid()}));
  auto p = net.parameters();
  std::fill(p.begin(), p.end(), 0.1);
  net.set_parameters(p);
  const std::vector<double> x{1.0, 2.0};
  const auto trace = forward_trace(net, x);
  REQUIRE(trace.size() == 3);
  const double h = std::tanh(0.4);
  CHECK(trace[1][0] == doctest::Approx(h).epsilon(1e-15));
  CHECK(trace[1][0] == doctest::Approx(0.3799489622552249).epsilon(1e-15));
  const double expected = 1.0 / (1.0 + std::exp(-(0.1 + 0.2 * h)));
  CHECK(trace[2][0] == doctest::Approx(expected).epsilon(1e-15));
  CHECK(forward(net, x)[0] == doctest::Approx(0.5438842398271495).epsilon(1e-15));
}

TEST_CASE("forward: gain inside tanh") {
  Network net({{1, 1, Activation::tanh_c(2.5)}});
  auto p = net.parameters();
  p = {0.3, 0.1};
  net.set_parameters(p);
  CHECK(forward(net, std::vector<double>{2.0})[0] == doctest::Approx(std::tanh(2.5 * 0.7)).epsilon(1e-15));
}

TEST_CASE("forward: dimension mismatch") {
  Network net({{3, 1, Activation::sigmoid()}});
  CHECK(code_of([&] { forward(net, std::vector<double>{1.0}); }) == Errc::DimensionMismatch);
  std::vector<LayerSpec> broken{{3, 2, Activation::sigmoid()}, {5, 1, Activation::sigmoid()}};
  CHECK(code_of([&] { Network{broken}; }) == Errc::DimensionMismatch);
}

TEST_CASE("forward: sigmoid-topped output stays in (0, 1)") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto net = Network::random(chain({10, 7, 10}, {Activation::tanh_c(), Activation::sigmoid()}), s);
    Rng rng(s + 100);
    std::vector<double> x(10);
    for (auto &v : x)
      v = rng.uniform(-50.0, 50.0);
    for (double y : forward(net, x)) {
      CHECK(y > 0.0);
      CHECK(y < 1.0);
    }
  }
}

TEST_CASE("forward: zero-bias tanh layer is odd") {
  auto net = Network::random({{10, 7, Activation::tanh_c(1.3)}}, 9);
  for (auto &b : net.layers()[0].bias)
    b = 0.0;
  Rng rng(3);
  std::vector<double> x(10), nx(10);
  for (std::size_t i = 0; i < 10; ++i) {
    x[i] = rng.uniform(-1, 1);
    nx[i] = -x[i];
  }
  const auto a = forward(net, x);
  const auto b = forward(net, nx);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(b[i] == -a[i]);
}

TEST_CASE("sse") {
  CHECK(sse(std::vector<double>{3.0, 4.0}, std::vector<double>{0.0, 0.0}) == 12.5);
  CHECK(sse(std::vector<double>{0.2, 0.7}, std::vector<double>{0.2, 0.7}) == 0.0);
  CHECK(code_of([] { sse(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}); }) ==
        Errc::DimensionMismatch);
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> y{rng.uniform(), rng.uniform()}, t{rng.uniform(), rng.uniform()};
    const double v = sse(y, t);
    CHECK(v >= 0.0);
    CHECK((v == 0.0) == (y == t));
  }
}

TEST_CASE("average_error") {
  auto net = Network::random(chain({10, 7, 10}, {Activation::tanh_c(), Activation::sigmoid()}), 4);
  auto batch = random_batch(30, 10, 10, 6);
  CHECK(average_error(net, std::span(batch).first(1)) ==
        doctest::Approx(sse(forward(net, batch[0].input), batch[0].target)).epsilon(1e-15));

  std::vector<Pattern> dup(5, batch[2]);
  CHECK(average_error(net, dup) == doctest::Approx(average_error(net, std::span(batch).subspan(2, 1))).epsilon(1e-14));

  CHECK(std::abs(average_error(net, batch) - resum(net, batch)) <= 1e-12);
  CHECK(code_of([&] { average_error(net, std::span<const Pattern>{}); }) == Errc::EmptyBatch);
}

TEST_CASE("gradient: zero at a perfect fit") {
  auto net = Network::random(chain({4, 3, 2}, {Activation::tanh_c(), Activation::sigmoid()}), 8);
  auto batch = random_batch(6, 4, 2, 1);
  for (auto &p : batch)
    p.target = forward(net, p.input);
  for (double g : gradient(net, batch))
    CHECK(g == 0.0);

  Network one({{1, 1, Activation::sigmoid()}});
  std::vector<Pattern> b1{{{1.0}, {0.5}}};
  for (double g : gradient(one, b1))
    CHECK(g == 0.0);
}

TEST_CASE("gradient matches central finite differences on random nets") {
  const std::vector<std::vector<LayerSpec>> shapes = {
      chain({10, 7, 10}, {Activation::tanh_c(), Activation::sigmoid()}),
      chain({10, 31, 1}, {Activation::tanh_c(), Activation::sigmoid()}),
      chain({3, 5, 4, 2}, {Activation::tanh_c(0.7), Activation::tanh_c(1.5), Activation::sigmoid()}),
      chain({4, 3, 2}, {Activation::sigmoid(), Activation::identity()}),
  };
  const double h = 1e-6;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const auto &specs = shapes[trial % shapes.size()];
    auto net = Network::random(specs, 1000 + trial);
    const auto batch = random_batch(8, specs.front().fan_in, specs.back().fan_out, 2000 + trial);
    const auto g = gradient(net, batch);
    auto p = net.parameters();
    REQUIRE(g.size() == p.size());
    std::size_t bad = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p[i];
      p[i] = orig + h;
      net.set_parameters(p);
      const double up = average_error(net, batch);
      p[i] = orig - h;
      net.set_parameters(p);
      const double down = average_error(net, batch);
      p[i] = orig;
      const double fd = (up - down) / (2.0 * h);
      // Below the floor the difference quotient is round-off dominated
      // (about eps * E / h), so tiny components are judged absolutely.
      const double rel = std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-4});
      if (rel >= 1e-5) {
        ++bad;
        MESSAGE("trial " << trial << " param " << i << " fd " << fd << " analytic " << g[i]);
      }
    }
    net.set_parameters(p);
    CHECK(bad == 0);
  }
}

TEST_CASE("random init range and determinism") {
  const auto specs = chain({10, 31, 1}, {Activation::tanh_c(), Activation::sigmoid()});
  const auto a = Network::random(specs, 77);
  CHECK(a == Network::random(specs, 77));
  CHECK_FALSE(a == Network::random(specs, 78));
  for (const auto &layer : a.layers()) {
    const double lim = 1.0 / std::sqrt(static_cast<double>(layer.spec.fan_in));
    for (double w : layer.weights)
      CHECK(std::abs(w) <= lim);
    for (double b : layer.bias)
      CHECK(std::abs(b) <= lim);
  }
}

namespace {

std::vector<Pattern> rank_one_identity(std::size_t n) {
  Rng rng(31);
  std::array<double, 10> load;
  for (auto &l : load)
    l = rng.uniform(0.2, 1.0);
  std::vector<Pattern> batch;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.uniform();
    Pattern p;
    for (double l : load)
      p.input.push_back(0.1 + 0.8 * z * l);
    p.target = p.input;
    batch.push_back(p);
  }
  return batch;
}

} // namespace

TEST_CASE("train: zero epochs returns the network unchanged") {
  const auto net = Network::random(chain({10, 7, 10}, {Activation::tanh_c(), Activation::sigmoid()}), 3);
  const auto batch = rank_one_identity(20);
  TrainConfig cfg;
  cfg.epochs = 0;
  for (auto m : {TrainMethod::SCG, TrainMethod::GD}) {
    cfg.method = m;
    const auto r = train(net, batch, cfg);
    CHECK(r.net == net);
    CHECK(r.loss_trace.empty());
  }
}

TEST_CASE("train: SCG learns a rank-one identity task") {
  const auto net = Network::random(chain({10, 7, 10}, {Activation::tanh_c(), Activation::sigmoid()}), 1);
  const auto batch = rank_one_identity(50);
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.target_error = 0.0;
  const auto r = train(net, batch, cfg);
  REQUIRE_FALSE(r.loss_trace.empty());
  CHECK(r.loss_trace.size() <= 500);
  CHECK(r.loss_trace.back() < 1e-3);
  CHECK(r.loss_trace.back() == doctest::Approx(average_error(r.net, batch)).epsilon(1e-12));
}

TEST_CASE("train: early stop at target error") {
  const auto net = Network::random(chain({10, 7, 10}, {Activation::tanh_c(), Activation::sigmoid()}), 1);
  const auto batch = rank_one_identity(50);
  TrainConfig cfg;
  cfg.epochs = 5000;
  cfg.target_error = 1e-2;
  const auto r = train(net, batch, cfg);
  CHECK(r.loss_trace.back() <= 1e-2);
  CHECK(r.loss_trace.size() < 5000);
  for (std::size_t i = 0; i + 1 < r.loss_trace.size(); ++i)
    CHECK(r.loss_trace[i] > 1e-2);
}

TEST_CASE("train: identical runs give identical weights") {
  const auto net = Network::random(chain({10, 7, 10}, {Activation::tanh_c(), Activation::sigmoid()}), 2);
  const auto batch = rank_one_identity(30);
  for (auto m : {TrainMethod::SCG, TrainMethod::GD}) {
    TrainConfig cfg;
    cfg.method = m;
    cfg.epochs = 100;
    const auto a = train(net, batch, cfg);
    const auto b = train(net, batch, cfg);
    CHECK(a.net == b.net);
    CHECK(a.loss_trace == b.loss_trace);
  }
}

TEST_CASE("train: small-step GD does not increase the loss") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto net = Network::random(chain({10, 7, 10}, {Activation::tanh_c(), Activation::sigmoid()}), s);
    const auto batch = rank_one_identity(40);
    TrainConfig cfg;
    cfg.method = TrainMethod::GD;
    cfg.learning_rate = 1e-3;
    cfg.momentum = 0.0;
    cfg.epochs = 200;
    cfg.target_error = 0.0;
    const double initial = average_error(net, batch);
    const auto r = train(net, batch, cfg);
    CHECK(r.loss_trace.back() <= initial);
  }
}

TEST_CASE("train: divergent learning rate raises NonFiniteLoss") {
  const auto net = Network::random({{10, 10, Activation::identity()}}, 2);
  const auto batch = rank_one_identity(20);
  TrainConfig cfg;
  cfg.method = TrainMethod::GD;
  cfg.learning_rate = 1e6;
  cfg.momentum = 0.5;
  cfg.epochs = 1000;
  cfg.target_error = 0.0;
  CHECK(code_of([&] { train(net, batch, cfg); }) == Errc::NonFiniteLoss);
}

TEST_CASE("train: invalid configs") {
  const auto net = Network::random({{10, 10, Activation::identity()}}, 2);
  const auto batch = rank_one_identity(5);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  CHECK(code_of([&] { train(net, batch, cfg); }) == Errc::InvalidConfig);
  cfg = {};
  cfg.momentum = 1.0;
  CHECK(code_of([&] { train(net, batch, cfg); }) == Errc::InvalidConfig);
}

TEST_CASE("network serialization round trip is exact") {
  const auto specs =
      chain({3, 5, 4, 2}, {Activation::tanh_c(0.7), Activation::identity(), Activation::sigmoid()});
  const auto net = Network::random(specs, 55);
  std::stringstream ss;
  write_network(ss, net);
  CHECK(ss.str().rfind("layers=3\n", 0) == 0);
  const auto back = read_network(ss);
  CHECK(back == net);

  std::stringstream bad("layers=1\nspec 2 1 sigmoid\n0.1\n");
  CHECK(code_of([&] { read_network(bad); }) == Errc::ParseError);
}

TEST_CASE("sigmoid stays strictly inside (0, 1) at extreme inputs") {
  const auto s = Activation::sigmoid();
  for (double a : {-1e6, -745.0, -40.0, 40.0, 745.0, 1e6}) {
    CHECK(s.apply(a) > 0.0);
    CHECK(s.apply(a) < 1.0);
  }
  CHECK(s.apply(0.0) == 0.5);
}
