#pragma once

#include "dgaimpute/core_data.hpp"
#include "dgaimpute/mlp.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace dga {

/// Autoencoder bound to the normalisation fitted on its training data.
/// Inputs and outputs live in normalised units.
struct AutoencoderModel {
  Network net;
  NormStats stats;
};

struct AutoencoderTraining {
  AutoencoderModel model;
  std::vector<double> loss_trace;
};

inline constexpr std::size_t kDefaultAutoencoderHidden = 7;

/// 10 -> hidden (TanhC) -> 10 (Sigmoid), identity targets on normalised data.
/// Weights are initialised from cfg.seed.
AutoencoderTraining train_autoencoder(const Dataset &dataset,
                                      std::size_t hidden = kDefaultAutoencoderHidden,
                                      const TrainConfig &cfg = {});

std::vector<Pattern> identity_patterns(const Dataset &dataset, const NormStats &stats);

/// Normalised input with masked slots filled from `candidate_missing` (in
/// mask order). Values stored under the mask are never read.
std::array<double, kNumVars> assemble_input(const AutoencoderModel &model,
                                            const GasRecord &record,
                                            std::span<const double> candidate_missing);

/// Mean squared input/output difference over the known (unmasked) positions.
double known_error(const AutoencoderModel &model, const GasRecord &record,
                   std::span<const double> candidate_missing);

struct ContractivityReport {
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  std::size_t pairs_used = 0;
};

/// Ratio ||f(x) - f(y)|| / ||x - y|| over normalised pairs; pairs closer than
/// 1e-12 are skipped.
ContractivityReport
contractivity_probe(const AutoencoderModel &model,
                    std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs);

void write_stats(std::ostream &out, const NormStats &stats);
NormStats read_stats(std::istream &in);

void save_autoencoder(const AutoencoderModel &model, const std::filesystem::path &path);
AutoencoderModel load_autoencoder(const std::filesystem::path &path);

} // namespace dga
