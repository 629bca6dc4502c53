#pragma once

#include "dgaimpute/core_data.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace dga {

// Per-variable ppm thresholds; a record is Unusable when any thresholded gas
// strictly exceeds its limit.
struct RuleTable {
  std::array<std::optional<double>, kNumVars> thresholds{};

  static RuleTable defaults();
  void validate() const;
};

RuleTable read_rule_table(const std::filesystem::path &path);
void write_rule_table(const RuleTable &rule, const std::filesystem::path &path);

struct GenConfig {
  std::size_t n_records = 500;
  std::size_t latent_rank = 3;
  std::uint64_t loading_seed = 2005;
  std::array<double, kNumVars> scales = default_scales();
  double noise_fraction = 0.05;
  RuleTable rule = RuleTable::defaults();
  std::uint64_t seed = 42;

  static std::array<double, kNumVars> default_scales();
  void validate() const;
};

/// Loading matrix used by generate(): one row of latent_rank entries per
/// variable, all positive, fixed by loading_seed.
std::array<std::vector<double>, kNumVars> loading_matrix(const GenConfig &config);

/// Log-normal latent-factor records: values = scale * exp(L z + eps) with
/// z ~ N(0, I_rank) and eps ~ N(0, noise_fraction^2). Record i draws from its
/// own stream seeded by derive_seed(seed, i), so any index range can be
/// generated independently.
Dataset generate(const GenConfig &config);

Label apply_rule(const GasRecord &record, const RuleTable &rule);

enum class Mechanism { MCAR, MAR };

/// Sets exactly k mask bits per record. MCAR picks positions uniformly without
/// replacement. MAR never masks variable 0 and weights variable j in 1..9 by
/// (1 - q) * (10 - j) + q * j, where q in [0, 1] is the rank percentile of the
/// record's variable-0 value within the dataset; k must then be <= 9. Values under the mask are kept so the
/// ground truth stays available for scoring.
Dataset mask_missing(const Dataset &dataset, std::size_t k, Mechanism mechanism,
                     std::uint64_t seed);

} // namespace dga
