#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dga {

inline constexpr std::size_t kNumVars = 10;

inline constexpr std::array<std::string_view, kNumVars> kVarNames = {
    "H2", "CH4", "C2H6", "C2H4", "C2H2", "CO", "CO2", "O2", "N2", "TDCG"};

enum class Label { Acceptable, Unusable };

std::string_view label_name(Label label);
Label parse_label(std::string_view text);

/// One bushing observation: ten gas concentrations in ppm, a missingness mask
/// (true = missing) and an optional condition label. Values stored under a
/// set mask bit are never read by any consumer.
struct GasRecord {
  std::string id;
  std::array<double, kNumVars> values{};
  std::array<bool, kNumVars> mask{};
  std::optional<Label> label;

  std::size_t missing_count() const;
  bool complete() const { return missing_count() == 0; }
  std::vector<std::size_t> missing_indices() const;
};

struct Dataset {
  std::array<std::string, kNumVars> schema;
  std::vector<GasRecord> records;

  Dataset();
  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

/// Per-variable summary in raw ppm. std is the sample (n-1) estimator.
struct VarStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

struct NormStats {
  std::array<VarStats, kNumVars> vars{};
};

NormStats fit_normalizer(const Dataset &dataset);

inline constexpr double kNormLow = 0.1;
inline constexpr double kNormHigh = 0.9;

// Affine maps between raw ppm and the [0.1, 0.9] training range. Values
// outside [min, max] extrapolate linearly.
double normalize_value(double raw, const VarStats &s);
double denormalize_value(double scaled, const VarStats &s);

GasRecord normalize(const GasRecord &record, const NormStats &stats);
GasRecord denormalize(const GasRecord &record, const NormStats &stats);

/// Accuracy criterion for an imputed value: within one standard deviation of
/// the truth and non-negative.
bool within_std_correct(double imputed_raw, double true_raw, double var_std);

Dataset read_records(const std::filesystem::path &path);
void write_records(const Dataset &dataset, const std::filesystem::path &path);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);

} // namespace dga
