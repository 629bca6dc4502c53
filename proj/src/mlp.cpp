#include "dgaimpute/mlp.hpp"

#include "dgaimpute/core_data.hpp"
#include "dgaimpute/error.hpp"
#include "dgaimpute/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace dga {

double Activation::apply(double a) const {
  switch (kind) {
  case ActivationKind::TanhC: return std::tanh(c * a);
  case ActivationKind::Sigmoid: {
    // Rounding would otherwise reach exactly 0 or 1 for |a| beyond ~37.
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    return std::clamp(1.0 / (1.0 + std::exp(-a)), lo, hi);
  }
  case ActivationKind::Identity: return a;
  }
  return a;
}

double Activation::derivative_from_output(double z) const {
  switch (kind) {
  case ActivationKind::TanhC: return c * (1.0 - z * z);
  case ActivationKind::Sigmoid: return z * (1.0 - z);
  case ActivationKind::Identity: return 1.0;
  }
  return 1.0;
}

std::string activation_name(ActivationKind kind) {
  switch (kind) {
  case ActivationKind::TanhC: return "tanh";
  case ActivationKind::Sigmoid: return "sigmoid";
  case ActivationKind::Identity: return "identity";
  }
  return "identity";
}

Network::Network(std::vector<LayerSpec> specs) {
  if (specs.empty())
    throw Error(Errc::DimensionMismatch, "network needs at least one layer");
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto &s = specs[l];
    if (s.fan_in == 0 || s.fan_out == 0)
      throw Error(Errc::DimensionMismatch, "layer dimensions must be >= 1");
    if (l > 0 && specs[l - 1].fan_out != s.fan_in)
      throw Error(Errc::DimensionMismatch, "layer " + std::to_string(l) +
                                               " fan_in does not match previous fan_out");
    if (s.activation.kind == ActivationKind::TanhC && !(s.activation.c > 0.0))
      throw Error(Errc::InvalidConfig, "tanh gain c must be positive");
    layers_.push_back({s, std::vector<double>(s.fan_in * s.fan_out, 0.0),
                       std::vector<double>(s.fan_out, 0.0)});
  }
}

Network Network::random(std::vector<LayerSpec> specs, std::uint64_t seed) {
  Network net(std::move(specs));
  Rng rng(seed);
  for (auto &layer : net.layers_) {
    const double r = 1.0 / std::sqrt(static_cast<double>(layer.spec.fan_in));
    for (auto &w : layer.weights)
      w = rng.uniform(-r, r);
    for (auto &b : layer.bias)
      b = rng.uniform(-r, r);
  }
  return net;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto &l : layers_)
    n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> Network::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto &l : layers_) {
    p.insert(p.end(), l.weights.begin(), l.weights.end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void Network::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count())
    throw Error(Errc::DimensionMismatch, "parameter vector has wrong length");
  std::size_t k = 0;
  for (auto &l : layers_) {
    for (auto &w : l.weights)
      w = params[k++];
    for (auto &b : l.bias)
      b = params[k++];
  }
}

namespace {

void layer_forward(const Layer &layer, std::span<const double> x, std::vector<double> &out) {
  const auto &s = layer.spec;
  out.resize(s.fan_out);
  for (std::size_t j = 0; j < s.fan_out; ++j) {
    double a = layer.bias[j];
    const double *row = layer.weights.data() + j * s.fan_in;
    for (std::size_t i = 0; i < s.fan_in; ++i)
      a += row[i] * x[i];
    out[j] = s.activation.apply(a);
  }
}

void check_input(const Network &net, std::span<const double> x) {
  if (net.layers().empty())
    throw Error(Errc::DimensionMismatch, "empty network");
  if (x.size() != net.input_size())
    throw Error(Errc::DimensionMismatch, "input has " + std::to_string(x.size()) +
                                             " entries, network expects " +
                                             std::to_string(net.input_size()));
}

} // namespace

std::vector<double> forward(const Network &net, std::span<const double> x) {
  check_input(net, x);
  std::vector<double> cur(x.begin(), x.end()), next;
  for (const auto &layer : net.layers()) {
    layer_forward(layer, cur, next);
    cur.swap(next);
  }
  return cur;
}

std::vector<std::vector<double>> forward_trace(const Network &net, std::span<const double> x) {
  check_input(net, x);
  std::vector<std::vector<double>> acts;
  acts.reserve(net.layers().size() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (const auto &layer : net.layers()) {
    std::vector<double> out;
    layer_forward(layer, acts.back(), out);
    acts.push_back(std::move(out));
  }
  return acts;
}

double sse(std::span<const double> y, std::span<const double> t) {
  if (y.size() != t.size())
    throw Error(Errc::DimensionMismatch, "output and target lengths differ");
  double s = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double e = y[j] - t[j];
    s += e * e;
  }
  return 0.5 * s;
}

double average_error(const Network &net, std::span<const Pattern> batch) {
  if (batch.empty())
    throw Error(Errc::EmptyBatch, "average_error needs at least one pattern");
  double total = 0.0;
  for (const auto &p : batch)
    total += sse(forward(net, p.input), p.target);
  return total / static_cast<double>(batch.size());
}

std::vector<double> gradient(const Network &net, std::span<const Pattern> batch) {
  if (batch.empty())
    throw Error(Errc::EmptyBatch, "gradient needs at least one pattern");
  const auto &layers = net.layers();
  const std::size_t L = layers.size();

  // Offsets of each layer's block in the flattened parameter vector.
  std::vector<std::size_t> offset(L);
  std::size_t total = 0;
  for (std::size_t l = 0; l < L; ++l) {
    offset[l] = total;
    total += layers[l].weights.size() + layers[l].bias.size();
  }
  std::vector<double> grad(total, 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  std::vector<double> delta, prev_delta;
  for (const auto &p : batch) {
    if (p.target.size() != net.output_size())
      throw Error(Errc::DimensionMismatch, "target length does not match network output");
    const auto acts = forward_trace(net, p.input);

    // dE/da at the output layer.
    const auto &out = acts[L];
    const auto &out_act = layers[L - 1].spec.activation;
    delta.resize(out.size());
    for (std::size_t j = 0; j < out.size(); ++j)
      delta[j] = (out[j] - p.target[j]) * out_act.derivative_from_output(out[j]) * inv_n;

    for (std::size_t l = L; l-- > 0;) {
      const auto &layer = layers[l];
      const auto &x = acts[l];
      const std::size_t fi = layer.spec.fan_in, fo = layer.spec.fan_out;
      double *gw = grad.data() + offset[l];
      double *gb = gw + fi * fo;
      for (std::size_t j = 0; j < fo; ++j) {
        const double d = delta[j];
        double *row = gw + j * fi;
        for (std::size_t i = 0; i < fi; ++i)
          row[i] += d * x[i];
        gb[j] += d;
      }
      if (l == 0)
        break;
      const auto &below = layers[l - 1].spec.activation;
      prev_delta.assign(fi, 0.0);
      for (std::size_t j = 0; j < fo; ++j) {
        const double d = delta[j];
        const double *wrow = layer.weights.data() + j * fi;
        for (std::size_t i = 0; i < fi; ++i)
          prev_delta[i] += wrow[i] * d;
      }
      for (std::size_t i = 0; i < fi; ++i)
        prev_delta[i] *= below.derivative_from_output(x[i]);
      delta.swap(prev_delta);
    }
  }
  return grad;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw Error(Errc::InvalidConfig, "learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw Error(Errc::InvalidConfig, "momentum must be in [0, 1)");
  if (!(target_error >= 0.0))
    throw Error(Errc::InvalidConfig, "target error must be non-negative");
}

namespace {

double dot(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

class Objective {
public:
  Objective(Network net, std::span<const Pattern> batch) : net_(std::move(net)), batch_(batch) {}

  double value(const std::vector<double> &w) {
    net_.set_parameters(w);
    return average_error(net_, batch_);
  }
  std::vector<double> grad(const std::vector<double> &w) {
    net_.set_parameters(w);
    return gradient(net_, batch_);
  }
  Network network(const std::vector<double> &w) {
    net_.set_parameters(w);
    return net_;
  }

private:
  Network net_;
  std::span<const Pattern> batch_;
};

void check_finite(double loss, std::size_t epoch) {
  if (!std::isfinite(loss))
    throw Error(Errc::NonFiniteLoss,
                "loss became non-finite at epoch " + std::to_string(epoch + 1));
}

TrainResult train_gd(const Network &net, std::span<const Pattern> batch, const TrainConfig &cfg) {
  Objective obj(net, batch);
  std::vector<double> w = net.parameters();
  std::vector<double> step(w.size(), 0.0);
  std::vector<double> trace;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto g = obj.grad(w);
    for (std::size_t i = 0; i < w.size(); ++i) {
      step[i] = cfg.momentum * step[i] - cfg.learning_rate * g[i];
      w[i] += step[i];
    }
    const double loss = obj.value(w);
    check_finite(loss, epoch);
    trace.push_back(loss);
    if (loss <= cfg.target_error)
      break;
  }
  return {obj.network(w), std::move(trace)};
}

// Moller's scaled conjugate gradient. One epoch is one iteration of the
// algorithm, successful or not.
TrainResult train_scg(const Network &net, std::span<const Pattern> batch, const TrainConfig &cfg) {
  constexpr double sigma0 = 1e-4;
  constexpr double lambda_min = 1e-15;
  constexpr double lambda_max = 1e100;

  Objective obj(net, batch);
  const std::size_t n = net.parameter_count();
  std::vector<double> w = net.parameters();
  std::vector<double> trace;
  if (cfg.epochs == 0)
    return {net, trace};

  double lambda = 1e-6;
  double f = obj.value(w);
  check_finite(f, 0);
  auto g = obj.grad(w);
  std::vector<double> r(n), p(n), wtmp(n), s(n);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = -g[i];
  p = r;
  bool success = true;
  std::size_t successes = 0;
  double delta = 0.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double p2 = dot(p, p);
    if (p2 < 1e-300) {
      trace.push_back(f);
      break;
    }
    if (success) {
      const double sigma = sigma0 / std::sqrt(p2);
      for (std::size_t i = 0; i < n; ++i)
        wtmp[i] = w[i] + sigma * p[i];
      const auto g2 = obj.grad(wtmp);
      for (std::size_t i = 0; i < n; ++i)
        s[i] = (g2[i] + r[i]) / sigma; // r = -E'(w)
      delta = dot(p, s);
    }
    // Scaled curvature along p; raising lambda makes it positive.
    double d = delta + lambda * p2;
    if (d <= 0.0) {
      lambda = 2.0 * (lambda - d / p2);
      d = delta + lambda * p2;
    }
    double mu = dot(p, r);
    if (mu <= 0.0) {
      // Lost the descent direction; restart along steepest descent.
      p = r;
      success = true;
      trace.push_back(f);
      continue;
    }
    const double alpha = mu / d;
    for (std::size_t i = 0; i < n; ++i)
      wtmp[i] = w[i] + alpha * p[i];
    const double fnew = obj.value(wtmp);
    const double comparison = std::isfinite(fnew) ? 2.0 * d * (f - fnew) / (mu * mu) : -1.0;

    if (comparison >= 0.0) {
      w = wtmp;
      f = fnew;
      const auto gnew = obj.grad(w);
      std::vector<double> rnew(n);
      for (std::size_t i = 0; i < n; ++i)
        rnew[i] = -gnew[i];
      success = true;
      ++successes;
      if (successes % n == 0) {
        p = rnew;
      } else {
        const double beta = (dot(rnew, rnew) - dot(rnew, r)) / mu;
        for (std::size_t i = 0; i < n; ++i)
          p[i] = rnew[i] + beta * p[i];
      }
      r.swap(rnew);
      if (comparison >= 0.75)
        lambda = std::max(lambda / 4.0, lambda_min);
    } else {
      success = false;
    }
    if (comparison < 0.25)
      lambda = std::min(lambda + d * (1.0 - comparison) / p2, lambda_max);

    check_finite(f, epoch);
    trace.push_back(f);
    if (f <= cfg.target_error)
      break;
  }
  return {obj.network(w), std::move(trace)};
}

} // namespace

TrainResult train(const Network &net, std::span<const Pattern> batch, const TrainConfig &config) {
  config.validate();
  if (config.epochs == 0)
    return {net, {}};
  if (batch.empty())
    throw Error(Errc::EmptyBatch, "training batch is empty");
  return config.method == TrainMethod::GD ? train_gd(net, batch, config)
                                          : train_scg(net, batch, config);
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string next_token(std::istream &in, const char *what) {
  std::string tok;
  if (!(in >> tok))
    throw Error(Errc::ParseError, std::string("network file truncated while reading ") + what);
  return tok;
}

std::size_t parse_count(const std::string &tok) {
  std::size_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw Error(Errc::ParseError, "expected a count, got '" + tok + "'");
  return v;
}

} // namespace

void write_network(std::ostream &out, const Network &net) {
  out << "layers=" << net.layers().size() << '\n';
  for (const auto &layer : net.layers()) {
    const auto &s = layer.spec;
    out << "spec " << s.fan_in << ' ' << s.fan_out << ' ' << activation_name(s.activation.kind);
    if (s.activation.kind == ActivationKind::TanhC)
      out << ' ' << fmt17(s.activation.c);
    out << '\n';
    for (std::size_t j = 0; j < s.fan_out; ++j) {
      for (std::size_t i = 0; i < s.fan_in; ++i)
        out << (i ? " " : "") << fmt17(layer.w(j, i));
      out << '\n';
    }
    for (std::size_t j = 0; j < s.fan_out; ++j)
      out << (j ? " " : "") << fmt17(layer.bias[j]);
    out << '\n';
  }
}

Network read_network(std::istream &in) {
  const auto header = next_token(in, "header");
  if (header.rfind("layers=", 0) != 0)
    throw Error(Errc::ParseError, "network file must start with layers=<n>");
  const std::size_t n_layers = parse_count(header.substr(7));
  if (n_layers == 0)
    throw Error(Errc::ParseError, "network has no layers");

  std::vector<LayerSpec> specs;
  std::vector<std::vector<double>> values;
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (next_token(in, "spec") != "spec")
      throw Error(Errc::ParseError, "expected 'spec' line for layer " + std::to_string(l));
    LayerSpec s;
    s.fan_in = parse_count(next_token(in, "fan_in"));
    s.fan_out = parse_count(next_token(in, "fan_out"));
    const auto act = next_token(in, "activation");
    if (act == "tanh")
      s.activation = Activation::tanh_c(parse_double(next_token(in, "tanh gain")));
    else if (act == "sigmoid")
      s.activation = Activation::sigmoid();
    else if (act == "identity")
      s.activation = Activation::identity();
    else
      throw Error(Errc::ParseError, "unknown activation '" + act + "'");
    std::vector<double> v(s.fan_in * s.fan_out + s.fan_out);
    for (auto &x : v)
      x = parse_double(next_token(in, "parameters"));
    specs.push_back(s);
    values.push_back(std::move(v));
  }
  Network net(specs);
  for (std::size_t l = 0; l < n_layers; ++l) {
    auto &layer = net.layers()[l];
    const auto nw = layer.weights.size();
    std::copy(values[l].begin(), values[l].begin() + static_cast<std::ptrdiff_t>(nw),
              layer.weights.begin());
    std::copy(values[l].begin() + static_cast<std::ptrdiff_t>(nw), values[l].end(),
              layer.bias.begin());
  }
  return net;
}

} // namespace dga
