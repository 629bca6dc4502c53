#include "dgaimpute/imputer.hpp"

#include "dgaimpute/error.hpp"
#include "dgaimpute/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dga {

std::string_view optimizer_name(OptimizerKind kind) {
  switch (kind) {
  case OptimizerKind::GA: return "ga";
  case OptimizerKind::PSO: return "pso";
  case OptimizerKind::MeanBaseline: return "mean";
  case OptimizerKind::ZeroBaseline: return "zero";
  }
  return "ga";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "ga")
    return OptimizerKind::GA;
  if (name == "pso")
    return OptimizerKind::PSO;
  if (name == "mean")
    return OptimizerKind::MeanBaseline;
  if (name == "zero")
    return OptimizerKind::ZeroBaseline;
  throw Error(Errc::InvalidConfig, "unknown optimizer '" + std::string(name) + "'");
}

void ImputeConfig::validate() const {
  if (!(tolerance > 0.0))
    throw Error(Errc::InvalidConfig, "tolerance must be positive");
  if (max_restarts < 1)
    throw Error(Errc::InvalidConfig, "max_restarts must be >= 1");
  if (optimizer == OptimizerKind::GA)
    ga.validate();
  if (optimizer == OptimizerKind::PSO)
    pso.validate();
}

double em_objective(const AutoencoderModel &model, const GasRecord &record,
                    std::span<const double> candidate, ObjectiveMode mode) {
  if (mode == ObjectiveMode::KnownOnly)
    return known_error(model, record, candidate);
  const auto x = assemble_input(model, record, candidate);
  const auto y = forward(model.net, x);
  double s = 0.0;
  for (std::size_t j = 0; j < kNumVars; ++j) {
    const double e = x[j] - y[j];
    s += e * e;
  }
  return s;
}

Bounds imputation_bounds(const AutoencoderModel &model, const GasRecord &record) {
  Bounds b;
  for (auto j : record.missing_indices()) {
    const auto &s = model.stats.vars[j];
    b.lower.push_back(normalize_value(0.0, s));
    b.upper.push_back(normalize_value(1.1 * s.max, s));
  }
  return b;
}

GasRecord impute_baseline(const GasRecord &record, const NormStats &stats, BaselineKind kind) {
  GasRecord out = record;
  for (std::size_t j = 0; j < kNumVars; ++j) {
    if (!record.mask[j])
      continue;
    out.values[j] = kind == BaselineKind::Mean ? stats.vars[j].mean : 0.0;
    out.mask[j] = false;
  }
  return out;
}

namespace {

GasRecord complete_from_candidate(const AutoencoderModel &model, const GasRecord &record,
                                  std::span<const double> candidate) {
  GasRecord out = record;
  std::size_t c = 0;
  for (std::size_t j = 0; j < kNumVars; ++j) {
    if (!record.mask[j])
      continue;
    out.values[j] = std::max(0.0, denormalize_value(candidate[c++], model.stats.vars[j]));
    out.mask[j] = false;
  }
  return out;
}

std::optional<double> known_error_if_any(const AutoencoderModel &model, const GasRecord &record,
                                         std::span<const double> candidate) {
  if (record.missing_count() == kNumVars)
    return std::nullopt;
  return known_error(model, record, candidate);
}

} // namespace

ImputeResult impute(const AutoencoderModel &model, const GasRecord &record,
                    const ImputeConfig &config) {
  config.validate();
  if (model.net.input_size() != kNumVars || model.net.output_size() != kNumVars)
    throw Error(Errc::ModelMismatch, "model width does not match the 10-variable record");

  ImputeResult res;
  const auto missing = record.missing_indices();
  if (missing.empty()) {
    res.completed = record;
    res.objective = em_objective(model, record, {}, config.mode);
    res.known_error = known_error(model, record, {});
    res.converged = true;
    return res;
  }

  if (config.optimizer == OptimizerKind::MeanBaseline ||
      config.optimizer == OptimizerKind::ZeroBaseline) {
    const auto kind =
        config.optimizer == OptimizerKind::MeanBaseline ? BaselineKind::Mean : BaselineKind::Zero;
    res.completed = impute_baseline(record, model.stats, kind);
    std::vector<double> cand;
    for (auto j : missing)
      cand.push_back(normalize_value(res.completed.values[j], model.stats.vars[j]));
    if (config.mode == ObjectiveMode::FullReconstruction || missing.size() < kNumVars)
      res.objective = em_objective(model, record, cand, config.mode);
    res.known_error = known_error_if_any(model, record, cand);
    res.converged = res.known_error && *res.known_error <= config.tolerance;
    return res;
  }

  const Bounds bounds = imputation_bounds(model, record);
  std::vector<std::vector<double>> seeds(1);
  for (auto j : missing)
    seeds[0].push_back(normalize_value(model.stats.vars[j].mean, model.stats.vars[j]));

  const ObjectiveFn objective = [&](std::span<const double> cand) {
    return em_objective(model, record, cand, config.mode);
  };

  BestResult chosen;
  chosen.value = std::numeric_limits<double>::infinity();
  std::optional<double> chosen_known;
  for (std::size_t run = 0; run < config.max_restarts; ++run) {
    BestResult r;
    if (config.optimizer == OptimizerKind::GA) {
      GAConfig ga = config.ga;
      ga.seed = derive_seed(config.seed, run);
      r = ga_minimize(objective, bounds, ga, seeds);
    } else {
      PSOConfig pso = config.pso;
      pso.seed = derive_seed(config.seed, run);
      r = pso_minimize(objective, bounds, pso, seeds);
    }
    res.evaluations += r.evaluations;
    ++res.restarts_used;
    const auto ke = known_error_if_any(model, record, r.point);
    if (r.value < chosen.value) {
      chosen = std::move(r);
      chosen_known = ke;
    }
    // Without observed components the tolerance check cannot be made.
    if (!ke || *ke <= config.tolerance)
      break;
  }

  res.completed = complete_from_candidate(model, record, chosen.point);
  res.objective = chosen.value;
  res.known_error = chosen_known;
  res.converged = chosen_known && *chosen_known <= config.tolerance;
  return res;
}

GridResult grid_search(const ObjectiveFn &objective, std::size_t dims, double step) {
  if (!(step > 0.0 && step <= 0.5))
    throw Error(Errc::InvalidConfig, "grid step must be in (0, 0.5]");
  if (dims == 0)
    throw Error(Errc::DimensionMismatch, "grid needs at least one dimension");
  // Number of intervals; snaps to 1/step when step divides 1 up to rounding.
  const double ratio = 1.0 / step;
  const auto nearest = std::llround(ratio);
  const auto intervals = static_cast<std::size_t>(
      std::abs(ratio - static_cast<double>(nearest)) < 1e-9 ? nearest : std::floor(ratio));
  const std::size_t points = intervals + 1;
  auto coord = [&](std::size_t i) {
    return i == intervals && static_cast<double>(intervals) * step > 1.0 - 1e-9
               ? 1.0
               : static_cast<double>(i) * step;
  };

  GridResult best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> x(dims);
  while (true) {
    for (std::size_t d = 0; d < dims; ++d)
      x[d] = coord(idx[d]);
    const double v = objective(x);
    ++best.evaluations;
    if (v < best.value) {
      best.value = v;
      best.candidate = x;
    }
    std::size_t d = dims;
    while (d > 0) {
      --d;
      if (++idx[d] < points)
        break;
      idx[d] = 0;
      if (d == 0)
        return best;
    }
  }
}

GridResult grid_oracle(const AutoencoderModel &model, const GasRecord &record, double step,
                       ObjectiveMode mode) {
  const std::size_t m = record.missing_count();
  if (m > 2)
    throw Error(Errc::TooManyMissing, "grid oracle supports at most 2 missing values");
  if (m == 0)
    throw Error(Errc::DimensionMismatch, "grid oracle needs at least one missing value");
  return grid_search(
      [&](std::span<const double> c) { return em_objective(model, record, c, mode); }, m, step);
}

} // namespace dga
