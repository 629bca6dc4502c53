#include <doctest.h>

#include "dgaimpute/error.hpp"
#include "dgaimpute/synthgen.hpp"
#include "support.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include <fstream>

using namespace dga;
using dga::testing::TempDir;

namespace {

double pearson(const std::vector<double> &a, const std::vector<double> &b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> log_column(const Dataset &ds, std::size_t j) {
  std::vector<double> out;
  for (const auto &r : ds.records)
    out.push_back(std::log(r.values[j]));
  return out;
}

GasRecord flat_record(double v) {
  GasRecord r;
  r.values.fill(v);
  return r;
}

} // namespace

TEST_CASE("generate: zero records") {
  GenConfig g;
  g.n_records = 0;
  CHECK(generate(g).empty());
}

TEST_CASE("generate: invalid configs") {
  auto bad = [](auto mutate) {
    GenConfig g;
    mutate(g);
    try {
      generate(g);
    } catch (const Error &e) {
      return e.code() == Errc::InvalidConfig;
    }
    return false;
  };
  CHECK(bad([](GenConfig &g) { g.latent_rank = 0; }));
  CHECK(bad([](GenConfig &g) { g.latent_rank = 11; }));
  CHECK(bad([](GenConfig &g) { g.noise_fraction = 1.0; }));
  CHECK(bad([](GenConfig &g) { g.noise_fraction = -0.1; }));
  CHECK(bad([](GenConfig &g) { g.scales[3] = 0.0; }));
  CHECK(bad([](GenConfig &g) { g.rule.thresholds.fill(std::nullopt); }));
  CHECK(bad([](GenConfig &g) { g.rule.thresholds[0] = -1.0; }));
}

TEST_CASE("generate: rank one without noise gives perfectly correlated log columns") {
  GenConfig g;
  g.latent_rank = 1;
  g.noise_fraction = 0.0;
  g.n_records = 300;
  const auto ds = generate(g);
  const auto base = log_column(ds, 0);
  for (std::size_t j = 1; j < kNumVars; ++j)
    CHECK(pearson(base, log_column(ds, j)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("generate: deterministic per seed, different across seeds") {
  GenConfig g;
  g.n_records = 200;
  const auto a = generate(g);
  const auto b = generate(g);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.records[i].values == b.records[i].values);
    CHECK(a.records[i].label == b.records[i].label);
    CHECK(a.records[i].id == b.records[i].id);
  }
  g.seed = 43;
  CHECK(generate(g).records[0].values != a.records[0].values);
}

TEST_CASE("generate: record ranges are independent of the total count") {
  GenConfig g;
  g.n_records = 50;
  const auto small = generate(g);
  g.n_records = 120;
  const auto big = generate(g);
  for (std::size_t i = 0; i < small.size(); ++i)
    CHECK(small.records[i].values == big.records[i].values);
}

TEST_CASE("generate: values strictly positive across seeds and configs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GenConfig g;
    g.seed = seed;
    g.n_records = 200;
    g.latent_rank = 1 + seed % 10;
    g.noise_fraction = 0.9 * static_cast<double>(seed % 3) / 2.0;
    for (const auto &r : generate(g).records) {
      CHECK(r.complete());
      for (double v : r.values)
        CHECK(v > 0.0);
    }
  }
}

TEST_CASE("generate: noise-free log matrix has numerical rank equal to latent rank") {
  for (std::size_t rank : {1u, 2u, 3u, 5u, 8u}) {
    GenConfig g;
    g.latent_rank = rank;
    g.noise_fraction = 0.0;
    g.n_records = 400;
    const auto ds = generate(g);
    Eigen::MatrixXd m(ds.size(), kNumVars);
    for (std::size_t i = 0; i < ds.size(); ++i)
      for (std::size_t j = 0; j < kNumVars; ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::log(ds.records[i].values[j]);
    // Each column carries a constant log(scale) offset; centering removes it.
    m.rowwise() -= m.colwise().mean();
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
    CAPTURE(rank);
    CHECK(sv(static_cast<Eigen::Index>(rank) - 1) > 1e-8 * sv(0));
    for (Eigen::Index i = static_cast<Eigen::Index>(rank); i < sv.size(); ++i)
      CHECK(sv(i) < 1e-8 * sv(0));
  }
}

TEST_CASE("loading matrix is positive and fixed by its seed") {
  GenConfig g;
  const auto a = loading_matrix(g);
  g.seed = 999; // data seed must not affect loadings
  CHECK(loading_matrix(g) == a);
  for (const auto &row : a) {
    CHECK(row.size() == g.latent_rank);
    for (double v : row)
      CHECK(v > 0.0);
  }
  g.loading_seed = 1;
  CHECK(loading_matrix(g) != a);
}

TEST_CASE("default labels give a mixed class balance") {
  const auto ds = dga::testing::desk_test_set(2000, 42);
  std::size_t unusable = 0;
  for (const auto &r : ds.records) {
    REQUIRE(r.label.has_value());
    CHECK(*r.label == apply_rule(r, GenConfig{}.rule));
    unusable += *r.label == Label::Unusable;
  }
  const double frac = static_cast<double>(unusable) / 2000.0;
  CHECK(frac > 0.1);
  CHECK(frac < 0.5);
}

TEST_CASE("apply_rule: strict any-exceeds") {
  RuleTable rule;
  rule.thresholds[0] = 100.0;
  rule.thresholds[4] = 2.0;
  CHECK(apply_rule(flat_record(1.0), rule) == Label::Acceptable);
  auto r = flat_record(1.0);
  r.values[0] = 100.0;
  CHECK(apply_rule(r, rule) == Label::Acceptable);
  r.values[0] = std::nextafter(100.0, 200.0);
  CHECK(apply_rule(r, rule) == Label::Unusable);
  r = flat_record(1.0);
  r.values[4] = 2.5;
  CHECK(apply_rule(r, rule) == Label::Unusable);
}

TEST_CASE("apply_rule: depends only on thresholded variables") {
  RuleTable rule;
  rule.thresholds[2] = 10.0;
  auto r = flat_record(5.0);
  r.values[7] = 1e9;
  r.mask[9] = true; // unthresholded missing gas is fine
  CHECK(apply_rule(r, rule) == Label::Acceptable);
  r.mask[2] = true;
  try {
    apply_rule(r, rule);
    FAIL("expected IncompleteRecord");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::IncompleteRecord);
  }
}

TEST_CASE("mask_missing: k bounds and exact counts") {
  const auto ds = dga::testing::desk_test_set(100, 5);
  for (auto mech : {Mechanism::MCAR, Mechanism::MAR}) {
    for (const auto &r : mask_missing(ds, 0, mech, 1).records)
      CHECK(r.missing_count() == 0);
    for (std::size_t k = 1; k <= 9; ++k)
      for (const auto &r : mask_missing(ds, k, mech, k).records)
        CHECK(r.missing_count() == k);
  }
  for (const auto &r : mask_missing(ds, 10, Mechanism::MCAR, 1).records)
    CHECK(r.missing_count() == 10);
  auto code = [&](std::size_t k, Mechanism m) {
    try {
      mask_missing(ds, k, m, 1);
    } catch (const Error &e) {
      return e.code();
    }
    return Errc::IoError;
  };
  CHECK(code(11, Mechanism::MCAR) == Errc::InvalidK);
  CHECK(code(10, Mechanism::MAR) == Errc::InvalidK);
}

TEST_CASE("mask_missing: keeps values and labels under the mask") {
  const auto ds = dga::testing::desk_test_set(100, 6);
  const auto masked = mask_missing(ds, 4, Mechanism::MCAR, 2);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(masked.records[i].values == ds.records[i].values);
    CHECK(masked.records[i].label == ds.records[i].label);
  }
  CHECK(mask_missing(ds, 4, Mechanism::MCAR, 2).records[7].mask == masked.records[7].mask);
}

TEST_CASE("mask_missing: MAR never masks variable 0 and tracks its rank") {
  const auto ds = dga::testing::desk_test_set(2000, 8);
  const auto masked = mask_missing(ds, 1, Mechanism::MAR, 3);
  // Low-H2 records favour low-index gases and high-H2 records high-index gases.
  std::vector<double> h2;
  for (const auto &r : ds.records)
    h2.push_back(r.values[0]);
  auto sorted = h2;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  double low_sum = 0, high_sum = 0;
  std::size_t low_n = 0, high_n = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto &r = masked.records[i];
    CHECK_FALSE(r.mask[0]);
    const double j = static_cast<double>(r.missing_indices().front());
    if (h2[i] < median) {
      low_sum += j;
      ++low_n;
    } else {
      high_sum += j;
      ++high_n;
    }
  }
  CHECK(low_sum / static_cast<double>(low_n) + 1.0 < high_sum / static_cast<double>(high_n));
}

TEST_CASE("mask_missing: MCAR single position is uniform (chi-square, alpha 0.01)") {
  GenConfig g;
  g.n_records = 10000;
  const auto masked = mask_missing(generate(g), 1, Mechanism::MCAR, 12345);
  std::array<double, kNumVars> counts{};
  for (const auto &r : masked.records)
    for (std::size_t j = 0; j < kNumVars; ++j)
      counts[j] += r.mask[j];
  const double expected = 10000.0 / kNumVars;
  double stat = 0.0;
  for (double c : counts)
    stat += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(kNumVars - 1);
  CHECK(stat < boost::math::quantile(dist, 0.99));
}

TEST_CASE("rule table file round trip") {
  TempDir tmp("rules");
  const auto path = tmp.path / "rules.txt";
  const auto rule = RuleTable::defaults();
  write_rule_table(rule, path);
  CHECK(read_rule_table(path).thresholds == rule.thresholds);

  {
    std::ofstream f(path);
    f << "# comment\n\nH2=50\nC2H2 = 2.5 # trailing\n";
  }
  const auto r = read_rule_table(path);
  CHECK(r.thresholds[0] == 50.0);
  CHECK(r.thresholds[4] == 2.5);
  CHECK_FALSE(r.thresholds[1].has_value());

  std::ofstream(path) << "XX=1\n";
  CHECK_THROWS_AS(read_rule_table(path), Error);
}
