#include "dgaimpute/evo_opt.hpp"

#include "dgaimpute/core_data.hpp"
#include "dgaimpute/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace dga {

void Bounds::validate() const {
  if (lower.empty() || lower.size() != upper.size())
    throw Error(Errc::DimensionMismatch, "bounds need matching, non-empty lower/upper");
  for (std::size_t d = 0; d < lower.size(); ++d)
    if (!std::isfinite(lower[d]) || !std::isfinite(upper[d]) || !(lower[d] < upper[d]))
      throw Error(Errc::InvalidConfig, "bounds must be finite with lower < upper");
}

bool Bounds::contains(std::span<const double> x) const {
  if (x.size() != lower.size())
    return false;
  for (std::size_t d = 0; d < x.size(); ++d)
    if (!(x[d] >= lower[d] && x[d] <= upper[d]))
      return false;
  return true;
}

void GAConfig::validate() const {
  if (population == 0 || generations == 0)
    throw Error(Errc::BudgetZero, "GA needs a positive population and generation count");
  if (population < 2)
    throw Error(Errc::InvalidConfig, "GA population must be >= 2");
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0) ||
      !(mutation_prob >= 0.0 && mutation_prob <= 1.0))
    throw Error(Errc::InvalidConfig, "GA probabilities must be in [0, 1]");
  if (!(shape_b > 0.0))
    throw Error(Errc::InvalidConfig, "non-uniform mutation shape must be positive");
}

void PSOConfig::validate() const {
  if (swarm == 0 || iterations == 0)
    throw Error(Errc::BudgetZero, "PSO needs a positive swarm and iteration count");
  if (!(c1 > 0.0) || !(c2 > 0.0))
    throw Error(Errc::InvalidConfig, "PSO learning factors must be positive");
  if (!(vmax_fraction > 0.0 && vmax_fraction <= 1.0))
    throw Error(Errc::InvalidConfig, "vmax fraction must be in (0, 1]");
  if (!(inertia >= 0.0))
    throw Error(Errc::InvalidConfig, "inertia must be non-negative");
}

std::vector<double> roulette_probabilities(std::span<const double> objectives) {
  if (objectives.empty())
    throw Error(Errc::EmptyPopulation, "roulette over an empty population");
  const auto [lo, hi] = std::minmax_element(objectives.begin(), objectives.end());
  const double floor_mass = 0.01 * (*hi - *lo + 1e-12);
  std::vector<double> p(objectives.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = (*hi - objectives[i]) + floor_mass;
    total += p[i];
  }
  for (auto &v : p)
    v /= total;
  return p;
}

namespace {

std::size_t spin(std::span<const double> probs, UniformSource &rng) {
  double u = rng.uniform();
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    if (u < probs[i])
      return i;
    u -= probs[i];
  }
  return probs.size() - 1;
}

std::vector<double> clamp_to(std::span<const double> x, const Bounds &b) {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t d = 0; d < out.size(); ++d)
    out[d] = std::clamp(out[d], b.lower[d], b.upper[d]);
  return out;
}

std::vector<double> uniform_point(const Bounds &b, Rng &rng) {
  std::vector<double> x(b.size());
  for (std::size_t d = 0; d < x.size(); ++d)
    x[d] = rng.uniform(b.lower[d], b.upper[d]);
  return x;
}

std::vector<std::vector<double>> initial_points(const Bounds &bounds, std::size_t count,
                                                std::span<const std::vector<double>> seeds,
                                                Rng &rng) {
  std::vector<std::vector<double>> pts;
  for (const auto &s : seeds) {
    if (pts.size() == count)
      break;
    if (s.size() != bounds.size())
      throw Error(Errc::DimensionMismatch, "initial point dimension differs from bounds");
    pts.push_back(clamp_to(s, bounds));
  }
  while (pts.size() < count)
    pts.push_back(uniform_point(bounds, rng));
  return pts;
}

} // namespace

std::size_t roulette_select(std::span<const double> objectives, UniformSource &rng) {
  const auto probs = roulette_probabilities(objectives);
  return spin(probs, rng);
}

std::pair<std::vector<double>, std::vector<double>>
arithmetic_crossover(std::span<const double> p1, std::span<const double> p2, UniformSource &rng) {
  if (p1.size() != p2.size())
    throw Error(Errc::DimensionMismatch, "crossover parents differ in length");
  const double a = rng.uniform();
  std::vector<double> c1(p1.size()), c2(p1.size());
  for (std::size_t d = 0; d < p1.size(); ++d) {
    c1[d] = a * p1[d] + (1.0 - a) * p2[d];
    c2[d] = (1.0 - a) * p1[d] + a * p2[d];
  }
  return {std::move(c1), std::move(c2)};
}

std::vector<double> nonuniform_mutate(std::span<const double> x, std::size_t t, std::size_t T,
                                      double shape_b, double mutation_prob, const Bounds &bounds,
                                      UniformSource &rng) {
  if (x.size() != bounds.size())
    throw Error(Errc::DimensionMismatch, "mutation vector differs from bounds");
  const double progress = T == 0 ? 1.0 : std::min(1.0, static_cast<double>(t) / T);
  const double exponent = std::pow(1.0 - progress, shape_b);
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t d = 0; d < out.size(); ++d) {
    if (!(rng.uniform() < mutation_prob))
      continue;
    const bool up = rng.uniform() < 0.5;
    const double r = rng.uniform();
    const double y = up ? bounds.upper[d] - out[d] : out[d] - bounds.lower[d];
    const double delta = y * (1.0 - std::pow(r, exponent));
    out[d] = up ? std::min(out[d] + delta, bounds.upper[d])
                : std::max(out[d] - delta, bounds.lower[d]);
  }
  return out;
}

BestResult ga_minimize(const ObjectiveFn &objective, const Bounds &bounds, const GAConfig &config,
                       std::span<const std::vector<double>> initial) {
  config.validate();
  bounds.validate();
  Rng rng(config.seed);
  const std::size_t n = config.population;

  BestResult best;
  auto evaluate = [&](const std::vector<double> &x) {
    const double v = objective(x);
    ++best.evaluations;
    return v;
  };

  auto pop = initial_points(bounds, n, initial, rng);
  std::vector<double> fit(n);
  for (std::size_t i = 0; i < n; ++i)
    fit[i] = evaluate(pop[i]);

  auto argmin = [](const std::vector<double> &f) {
    return static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
  };
  std::size_t b = argmin(fit);
  best.point = pop[b];
  best.value = fit[b];
  best.trace.push_back(best.value);

  for (std::size_t gen = 1; gen < config.generations; ++gen) {
    const auto probs = roulette_probabilities(fit);
    std::vector<std::vector<double>> children;
    children.reserve(n);
    while (children.size() < n) {
      const auto &a = pop[spin(probs, rng)];
      const auto &c = pop[spin(probs, rng)];
      std::vector<double> k1, k2;
      if (rng.uniform() < config.crossover_prob) {
        std::tie(k1, k2) = arithmetic_crossover(a, c, rng);
      } else {
        k1 = a;
        k2 = c;
      }
      children.push_back(nonuniform_mutate(k1, gen, config.generations, config.shape_b,
                                           config.mutation_prob, bounds, rng));
      if (children.size() < n)
        children.push_back(nonuniform_mutate(k2, gen, config.generations, config.shape_b,
                                             config.mutation_prob, bounds, rng));
    }
    std::vector<double> child_fit(n);
    for (std::size_t i = 0; i < n; ++i)
      child_fit[i] = evaluate(children[i]);

    // Elitism: the previous generation's best replaces the worst child.
    const std::size_t elite = argmin(fit);
    const auto worst = static_cast<std::size_t>(
        std::max_element(child_fit.begin(), child_fit.end()) - child_fit.begin());
    children[worst] = pop[elite];
    child_fit[worst] = fit[elite];

    pop = std::move(children);
    fit = std::move(child_fit);
    b = argmin(fit);
    if (fit[b] < best.value) {
      best.value = fit[b];
      best.point = pop[b];
    }
    best.trace.push_back(best.value);
  }
  return best;
}

void pso_step(std::span<Particle> particles, std::span<const double> gbest, const Bounds &bounds,
              const PSOConfig &config, UniformSource &rng) {
  const std::size_t dim = bounds.size();
  if (gbest.size() != dim)
    throw Error(Errc::DimensionMismatch, "gbest dimension differs from bounds");
  for (auto &p : particles) {
    if (p.position.size() != dim || p.velocity.size() != dim || p.best_position.size() != dim)
      throw Error(Errc::DimensionMismatch, "particle dimension differs from bounds");
    for (std::size_t d = 0; d < dim; ++d) {
      const double r1 = rng.uniform();
      const double r2 = rng.uniform();
      const double vmax = config.vmax_fraction * bounds.range(d);
      double v = config.inertia * p.velocity[d] +
                 config.c1 * r1 * (p.best_position[d] - p.position[d]) +
                 config.c2 * r2 * (gbest[d] - p.position[d]);
      v = std::clamp(v, -vmax, vmax);
      double x = p.position[d] + v;
      if (x < bounds.lower[d]) {
        x = bounds.lower[d];
        v = 0.0;
      } else if (x > bounds.upper[d]) {
        x = bounds.upper[d];
        v = 0.0;
      }
      p.position[d] = x;
      p.velocity[d] = v;
    }
  }
}

BestResult pso_minimize(const ObjectiveFn &objective, const Bounds &bounds,
                        const PSOConfig &config, std::span<const std::vector<double>> initial) {
  config.validate();
  bounds.validate();
  Rng rng(config.seed);

  BestResult best;
  std::vector<Particle> swarm;
  for (auto &x : initial_points(bounds, config.swarm, initial, rng)) {
    Particle p;
    p.velocity.assign(x.size(), 0.0);
    p.best_position = x;
    p.position = std::move(x);
    swarm.push_back(std::move(p));
  }

  std::size_t g = 0;
  for (std::size_t i = 0; i < swarm.size(); ++i) {
    swarm[i].best_value = objective(swarm[i].position);
    ++best.evaluations;
    if (swarm[i].best_value < swarm[g].best_value)
      g = i;
  }
  best.point = swarm[g].best_position;
  best.value = swarm[g].best_value;
  best.trace.push_back(best.value);

  for (std::size_t it = 1; it < config.iterations; ++it) {
    pso_step(swarm, best.point, bounds, config, rng);
    for (auto &p : swarm) {
      const double v = objective(p.position);
      ++best.evaluations;
      if (v < p.best_value) {
        p.best_value = v;
        p.best_position = p.position;
      }
      if (v < best.value) {
        best.value = v;
        best.point = p.position;
      }
    }
    best.trace.push_back(best.value);
  }
  return best;
}

void write_trace_csv(std::ostream &out, const BestResult &result) {
  out << "iteration,best_value\n";
  for (std::size_t i = 0; i < result.trace.size(); ++i)
    out << i + 1 << ',' << format_double(result.trace[i]) << '\n';
}

} // namespace dga
