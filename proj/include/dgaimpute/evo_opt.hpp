#pragma once

#include "dgaimpute/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace dga {

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const { return lower.size(); }
  void validate() const;
  bool contains(std::span<const double> x) const;
  double range(std::size_t d) const { return upper[d] - lower[d]; }
};

using ObjectiveFn = std::function<double(std::span<const double>)>;

struct GAConfig {
  std::size_t population = 20;
  std::size_t generations = 25;
  double crossover_prob = 0.8;
  double mutation_prob = 0.1; // per gene
  double shape_b = 3.0;       // non-uniform mutation decay exponent
  std::uint64_t seed = 1;

  void validate() const;
};

struct PSOConfig {
  std::size_t swarm = 20;
  std::size_t iterations = 50;
  double c1 = 2.0;
  double c2 = 2.0;
  double inertia = 1.0;
  double vmax_fraction = 0.5; // of each dimension's range
  std::uint64_t seed = 1;

  void validate() const;
};

struct BestResult {
  std::vector<double> point;
  double value = 0.0;
  std::size_t evaluations = 0;
  std::vector<double> trace; // best-so-far after each generation / iteration
};

/// Selection probabilities for a minimisation objective. Values are shifted
/// to fit_i = (max - f_i) + 0.01 (max - min + 1e-12) so the best individual
/// carries the most roulette mass and every individual keeps some.
std::vector<double> roulette_probabilities(std::span<const double> objectives);

std::size_t roulette_select(std::span<const double> objectives, UniformSource &rng);

/// child1 = a p1 + (1 - a) p2, child2 = (1 - a) p1 + a p2 with a ~ U(0, 1).
std::pair<std::vector<double>, std::vector<double>>
arithmetic_crossover(std::span<const double> p1, std::span<const double> p2, UniformSource &rng);

/// Each gene mutates with probability `mutation_prob`: it moves toward the
/// upper or lower bound (equiprobably) by y (1 - r^((1 - t/T)^b)), y being the
/// distance to that bound. Draw order per gene: fire, direction, r.
std::vector<double> nonuniform_mutate(std::span<const double> x, std::size_t t, std::size_t T,
                                      double shape_b, double mutation_prob, const Bounds &bounds,
                                      UniformSource &rng);

/// Real-coded GA: roulette selection, arithmetic crossover, non-uniform
/// mutation, elitism of one. Uses exactly population * generations objective
/// evaluations; the elite replaces the worst child without re-evaluation.
/// `initial` points (clamped to bounds) seed the first population.
BestResult ga_minimize(const ObjectiveFn &objective, const Bounds &bounds, const GAConfig &config,
                       std::span<const std::vector<double>> initial = {});

struct Particle {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> best_position;
  double best_value = 0.0;
};

/// One gbest velocity/position update for every particle:
///   v = inertia v + c1 r1 (pbest - x) + c2 r2 (gbest - x), clamped to +-vmax
///   x = x + v, clamped to bounds (velocity component zeroed on clamp).
/// Draws r1 then r2 per particle per dimension.
void pso_step(std::span<Particle> particles, std::span<const double> gbest, const Bounds &bounds,
              const PSOConfig &config, UniformSource &rng);

/// gbest PSO with zero initial velocity. Uses exactly swarm * iterations
/// evaluations; the first iteration evaluates the initial positions.
BestResult pso_minimize(const ObjectiveFn &objective, const Bounds &bounds,
                        const PSOConfig &config,
                        std::span<const std::vector<double>> initial = {});

void write_trace_csv(std::ostream &out, const BestResult &result);

} // namespace dga
