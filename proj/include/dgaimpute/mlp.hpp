#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dga {

enum class ActivationKind { TanhC, Sigmoid, Identity };

struct Activation {
  ActivationKind kind = ActivationKind::Identity;
  double c = 1.0; // gain inside tanh(c * a); ignored by the other kinds

  static Activation tanh_c(double c = 1.0) { return {ActivationKind::TanhC, c}; }
  static Activation sigmoid() { return {ActivationKind::Sigmoid, 1.0}; }
  static Activation identity() { return {ActivationKind::Identity, 1.0}; }

  double apply(double a) const;
  // Derivative expressed through the activation output z = apply(a).
  double derivative_from_output(double z) const;

  bool operator==(const Activation &) const = default;
};

struct LayerSpec {
  std::size_t fan_in = 1;
  std::size_t fan_out = 1;
  Activation activation;

  bool operator==(const LayerSpec &) const = default;
};

struct Layer {
  LayerSpec spec;
  std::vector<double> weights; // fan_out x fan_in, row-major
  std::vector<double> bias;    // fan_out

  double &w(std::size_t row, std::size_t col) { return weights[row * spec.fan_in + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * spec.fan_in + col]; }

  bool operator==(const Layer &) const = default;
};

/// Dense feed-forward network. Each layer computes a = W x + b and then its
/// activation. Parameters flatten layer by layer as weights (row-major)
/// followed by biases.
class Network {
public:
  Network() = default;
  /// Zero-initialised parameters.
  explicit Network(std::vector<LayerSpec> specs);

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
  static Network random(std::vector<LayerSpec> specs, std::uint64_t seed);

  const std::vector<Layer> &layers() const { return layers_; }
  std::vector<Layer> &layers() { return layers_; }
  std::size_t input_size() const { return layers_.front().spec.fan_in; }
  std::size_t output_size() const { return layers_.back().spec.fan_out; }

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  bool operator==(const Network &) const = default;

private:
  std::vector<Layer> layers_;
};

struct Pattern {
  std::vector<double> input;
  std::vector<double> target;
};

std::vector<double> forward(const Network &net, std::span<const double> x);

/// Per-layer activations for one input; front() is the input itself.
std::vector<std::vector<double>> forward_trace(const Network &net, std::span<const double> x);

/// Half the summed squared output error of one pattern.
double sse(std::span<const double> y, std::span<const double> t);

/// Mean of sse over a batch.
double average_error(const Network &net, std::span<const Pattern> batch);

/// Exact gradient of average_error, flattened in Network::parameters() order.
std::vector<double> gradient(const Network &net, std::span<const Pattern> batch);

enum class TrainMethod { GD, SCG };

struct TrainConfig {
  std::size_t epochs = 1000;
  double learning_rate = 0.1;
  double momentum = 0.9;
  TrainMethod method = TrainMethod::SCG;
  std::uint64_t seed = 1;
  double target_error = 1e-4;

  void validate() const;
};

struct TrainResult {
  Network net;
  std::vector<double> loss_trace; // average_error after each epoch
};

TrainResult train(const Network &net, std::span<const Pattern> batch, const TrainConfig &config);

void write_network(std::ostream &out, const Network &net);
Network read_network(std::istream &in);

std::string activation_name(ActivationKind kind);

} // namespace dga
