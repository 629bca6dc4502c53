#pragma once

#include "dgaimpute/autoenc.hpp"
#include "dgaimpute/classifier.hpp"
#include "dgaimpute/imputer.hpp"
#include "dgaimpute/synthgen.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace dga {

struct SweepConfig {
  // Data: files when given, otherwise generated from `gen` with derived seeds.
  std::optional<std::filesystem::path> train_data;
  std::optional<std::filesystem::path> test_data;
  GenConfig gen;
  std::size_t n_train = 1000;
  std::size_t n_test = 200;

  // Pre-trained models; trained from the training data when absent.
  std::optional<std::filesystem::path> autoencoder_model;
  std::optional<std::filesystem::path> classifier_model;
  TrainConfig ae_train{.epochs = 2000, .target_error = 1e-5};
  TrainConfig clf_train{.epochs = 1500, .target_error = 1e-4};
  std::size_t ae_hidden = kDefaultAutoencoderHidden;
  std::size_t clf_hidden = kDefaultClassifierHidden;

  std::vector<std::size_t> k_values{0, 1, 2, 3, 4};
  std::vector<OptimizerKind> optimizers{OptimizerKind::GA, OptimizerKind::PSO};
  ImputeConfig impute; // optimizer and seed are overridden per run
  std::size_t trials = 3;
  std::uint64_t seed = 7;
  std::size_t jobs = 1;

  void validate() const;
};

struct BenchInputs {
  AutoencoderModel autoencoder;
  ClassifierModel classifier;
  Dataset test; // complete, labelled ground truth
};

/// Loads or trains everything run_sweep needs.
BenchInputs prepare_inputs(const SweepConfig &config);

struct TrialRow {
  OptimizerKind optimizer = OptimizerKind::GA;
  std::size_t k = 0;
  std::size_t trial = 0;
  std::string record_id;
  std::size_t masked = 0;
  std::size_t correct = 0; // masked slots passing within_std_correct
  bool class_correct = false;
  double objective = 0.0;
  std::optional<double> known_error;
  std::size_t evaluations = 0;
  bool converged = false;
  double seconds = 0.0; // wall time of the impute call; not persisted to trials.csv
};

struct SweepRow {
  OptimizerKind optimizer = OptimizerKind::GA;
  std::size_t k = 0;
  std::optional<double> est_accuracy; // absent when nothing was masked
  double class_accuracy = 0.0;
  double mean_time_s = 0.0;
  double mean_evaluations = 0.0;
  std::size_t masked_slots = 0;
  std::size_t records = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<TrialRow> trials;
  bool all_nonnegative = true;     // every imputed raw value >= 0
  bool ground_truth_isolated = true; // NaN-poisoned masked slots never reached an output

  const SweepRow *find(OptimizerKind optimizer, std::size_t k) const;
};

/// For every (optimizer, k, trial): MCAR-mask k variables of each test record,
/// impute from a NaN-poisoned copy, score each slot with within_std_correct
/// against the autoencoder's training std and classify the completed record.
/// Results depend only on the config and seed, never on `jobs`.
SweepReport run_sweep(const SweepConfig &config, const BenchInputs &inputs);
SweepReport run_sweep(const SweepConfig &config);

/// Rebuilds the aggregate rows from trial rows (fixed order summation).
std::vector<SweepRow> aggregate(std::span<const TrialRow> trials,
                                std::span<const OptimizerKind> optimizers,
                                std::span<const std::size_t> k_values);

struct OptimizerComparison {
  std::size_t k = 0;
  std::optional<double> time_ratio; // GA / PSO mean wall time
  std::optional<double> est_delta;  // GA - PSO
  double class_delta = 0.0;         // GA - PSO
};

std::vector<OptimizerComparison> compare_optimizers(const SweepReport &report);

struct PaperReference {
  std::size_t k;
  double ga_est, ga_class, ga_time;
  double pso_est, pso_class, pso_time;
};

/// Published figures for k = 1..4 (fractions and seconds); annotations only.
std::span<const PaperReference> paper_reference();
inline constexpr double kPaperCleanClassAccuracy = 0.97;

void write_sweep_report_csv(const SweepReport &report, std::ostream &out);
void write_trials_csv(const SweepReport &report, std::ostream &out);
void write_timing_csv(const SweepReport &report, std::ostream &out);
void render_table(const SweepReport &report, std::ostream &out);

/// Writes sweep_report.csv, trials.csv, timing.csv and table.txt into `dir`.
void write_sweep_outputs(const SweepReport &report, const std::filesystem::path &dir);

std::vector<TrialRow> read_trials_csv(std::istream &in);

} // namespace dga
