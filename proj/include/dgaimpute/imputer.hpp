#pragma once

#include "dgaimpute/autoenc.hpp"
#include "dgaimpute/core_data.hpp"
#include "dgaimpute/evo_opt.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dga {

enum class OptimizerKind { GA, PSO, MeanBaseline, ZeroBaseline };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

enum class ObjectiveMode {
  FullReconstruction, // squared reconstruction norm over all ten components
  KnownOnly,          // known_error: mean squared error over observed components
};

struct ImputeConfig {
  OptimizerKind optimizer = OptimizerKind::GA;
  GAConfig ga;
  PSOConfig pso;
  ObjectiveMode mode = ObjectiveMode::FullReconstruction;
  double tolerance = 1e-3; // on known_error, normalised units
  std::size_t max_restarts = 3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ImputeResult {
  GasRecord completed; // raw ppm, empty mask
  double objective = 0.0;
  std::optional<double> known_error; // absent when nothing was observed
  std::size_t evaluations = 0;
  bool converged = false;
  std::size_t restarts_used = 0; // optimizer runs performed
};

/// Candidate values are normalised and listed in mask order.
double em_objective(const AutoencoderModel &model, const GasRecord &record,
                    std::span<const double> candidate, ObjectiveMode mode);

/// Search box for the masked slots: raw [0, 1.1 * observed max] mapped into
/// normalised units.
Bounds imputation_bounds(const AutoencoderModel &model, const GasRecord &record);

/// Recovers the masked values of `record`. Each optimizer run starts from a
/// population containing the mean-fill point; runs repeat with fresh derived
/// seeds while known_error exceeds the tolerance, up to max_restarts runs, and
/// the lowest-objective run wins. Imputed raw values are clamped at 0.
ImputeResult impute(const AutoencoderModel &model, const GasRecord &record,
                    const ImputeConfig &config);

enum class BaselineKind { Mean, Zero };

GasRecord impute_baseline(const GasRecord &record, const NormStats &stats, BaselineKind kind);

struct GridResult {
  std::vector<double> candidate;
  double value = 0.0;
  std::size_t evaluations = 0;
};

/// Exhaustive search over {0, step, 2 step, ...} ∩ [0, 1] in each of `dims`
/// coordinates, lexicographic order, first minimum wins.
GridResult grid_search(const ObjectiveFn &objective, std::size_t dims, double step);

/// grid_search of em_objective over the normalised missing slots (1 or 2).
GridResult grid_oracle(const AutoencoderModel &model, const GasRecord &record, double step,
                       ObjectiveMode mode);

} // namespace dga
