#include "dgaimpute/synthgen.hpp"

#include "dgaimpute/error.hpp"
#include "dgaimpute/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace dga {

RuleTable RuleTable::defaults() {
  // Combustible gases only; CO2, O2 and N2 are left unthresholded.
  RuleTable t;
  t.thresholds[0] = 70.0;  // H2
  t.thresholds[1] = 40.0;  // CH4
  t.thresholds[2] = 35.0;  // C2H6
  t.thresholds[3] = 20.0;  // C2H4
  t.thresholds[4] = 1.8;   // C2H2
  t.thresholds[5] = 420.0; // CO
  t.thresholds[9] = 600.0; // TDCG
  return t;
}

void RuleTable::validate() const {
  bool any = false;
  for (const auto &t : thresholds) {
    if (!t)
      continue;
    if (!(*t > 0.0) || !std::isfinite(*t))
      throw Error(Errc::InvalidConfig, "rule thresholds must be positive and finite");
    any = true;
  }
  if (!any)
    throw Error(Errc::InvalidConfig, "rule table defines no thresholds");
}

RuleTable read_rule_table(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::IoError, "cannot open " + path.string());
  RuleTable t;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
      return std::string_view{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos)
      view = view.substr(0, hash);
    view = trim(view);
    if (view.empty())
      continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) +
                                        ": expected NAME=THRESHOLD");
    const auto name = trim(view.substr(0, eq));
    const auto value = trim(view.substr(eq + 1));
    const auto it = std::find(kVarNames.begin(), kVarNames.end(), name);
    if (it == kVarNames.end())
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) +
                                        ": unknown variable '" + std::string(name) + "'");
    double v;
    try {
      v = parse_double(value);
    } catch (const Error &) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) +
                                        ": malformed threshold '" + std::string(value) + "'");
    }
    t.thresholds[static_cast<std::size_t>(it - kVarNames.begin())] = v;
  }
  t.validate();
  return t;
}

void write_rule_table(const RuleTable &rule, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(Errc::IoError, "cannot write " + path.string());
  out << "# any listed gas strictly above its threshold (ppm) => unusable\n";
  for (std::size_t j = 0; j < kNumVars; ++j)
    if (rule.thresholds[j])
      out << kVarNames[j] << '=' << format_double(*rule.thresholds[j]) << '\n';
}

std::array<double, kNumVars> GenConfig::default_scales() {
  return {40.0, 25.0, 20.0, 12.0, 1.0, 250.0, 2000.0, 4000.0, 5000.0, 350.0};
}

void GenConfig::validate() const {
  if (latent_rank < 1 || latent_rank > kNumVars)
    throw Error(Errc::InvalidConfig, "latent_rank must be in [1, 10]");
  for (double s : scales)
    if (!(s > 0.0) || !std::isfinite(s))
      throw Error(Errc::InvalidConfig, "scales must be positive and finite");
  if (!(noise_fraction >= 0.0 && noise_fraction < 1.0))
    throw Error(Errc::InvalidConfig, "noise_fraction must be in [0, 1)");
  rule.validate();
}

std::array<std::vector<double>, kNumVars> loading_matrix(const GenConfig &config) {
  Rng rng(config.loading_seed);
  std::array<std::vector<double>, kNumVars> L;
  // Keep the log-space spread of each variable near 0.55 regardless of rank.
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.latent_rank));
  for (auto &row : L) {
    row.resize(config.latent_rank);
    for (auto &v : row)
      v = scale * rng.uniform(0.3, 0.8);
  }
  return L;
}

Label apply_rule(const GasRecord &record, const RuleTable &rule) {
  bool exceeded = false;
  for (std::size_t j = 0; j < kNumVars; ++j) {
    if (!rule.thresholds[j])
      continue;
    if (record.mask[j])
      throw Error(Errc::IncompleteRecord,
                  "rule needs " + std::string(kVarNames[j]) + " but it is missing");
    if (record.values[j] > *rule.thresholds[j])
      exceeded = true;
  }
  return exceeded ? Label::Unusable : Label::Acceptable;
}

Dataset generate(const GenConfig &config) {
  config.validate();
  const auto L = loading_matrix(config);
  Dataset ds;
  ds.records.resize(config.n_records);
  std::vector<double> z(config.latent_rank);
  for (std::size_t i = 0; i < config.n_records; ++i) {
    Rng rng(derive_seed(config.seed, i));
    for (auto &zi : z)
      zi = rng.normal();
    GasRecord &r = ds.records[i];
    r.id = "b" + std::to_string(i + 1);
    for (std::size_t j = 0; j < kNumVars; ++j) {
      double a = 0.0;
      for (std::size_t q = 0; q < config.latent_rank; ++q)
        a += L[j][q] * z[q];
      const double eps = config.noise_fraction * rng.normal();
      r.values[j] = config.scales[j] * std::exp(a + eps);
    }
    r.label = apply_rule(r, config.rule);
  }
  return ds;
}

namespace {

// Weighted sampling of k distinct items; weights of drawn items are zeroed.
std::vector<std::size_t> weighted_without_replacement(std::vector<double> weights,
                                                      std::size_t k, Rng &rng) {
  std::vector<std::size_t> chosen;
  for (std::size_t draw = 0; draw < k; ++draw) {
    double total = 0.0;
    for (double w : weights)
      total += w;
    double u = rng.uniform() * total;
    std::size_t pick = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0)
        continue;
      pick = i;
      if (u < weights[i])
        break;
      u -= weights[i];
    }
    chosen.push_back(pick);
    weights[pick] = 0.0;
  }
  return chosen;
}

} // namespace

Dataset mask_missing(const Dataset &dataset, std::size_t k, Mechanism mechanism,
                     std::uint64_t seed) {
  if (k > kNumVars)
    throw Error(Errc::InvalidK, "k must be in [0, 10]");
  if (mechanism == Mechanism::MAR && k > kNumVars - 1)
    throw Error(Errc::InvalidK, "MAR keeps variable 0 observed, so k must be <= 9");

  Dataset out = dataset;
  const std::size_t n = out.records.size();

  std::vector<double> percentile(n, 0.0);
  if (mechanism == Mechanism::MAR && n > 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dataset.records[a].values[0] < dataset.records[b].values[0];
    });
    for (std::size_t r = 0; r < n; ++r)
      percentile[order[r]] = static_cast<double>(r) / static_cast<double>(n - 1);
  }

  for (std::size_t i = 0; i < n; ++i) {
    GasRecord &rec = out.records[i];
    rec.mask.fill(false);
    if (k == 0)
      continue;
    Rng rng(derive_seed(seed, i));
    if (mechanism == Mechanism::MCAR) {
      std::array<std::size_t, kNumVars> idx;
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t d = 0; d < k; ++d) {
        const auto pick = d + rng.index(kNumVars - d);
        std::swap(idx[d], idx[pick]);
        rec.mask[idx[d]] = true;
      }
    } else {
      const double q = percentile[i];
      std::vector<double> w(kNumVars - 1);
      for (std::size_t j = 1; j < kNumVars; ++j)
        w[j - 1] = (1.0 - q) * static_cast<double>(kNumVars - j) + q * static_cast<double>(j);
      for (auto pick : weighted_without_replacement(std::move(w), k, rng))
        rec.mask[pick + 1] = true;
    }
  }
  return out;
}

} // namespace dga
