#include "dgaimpute/autoenc.hpp"

#include "dgaimpute/error.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace dga {

std::vector<Pattern> identity_patterns(const Dataset &dataset, const NormStats &stats) {
  std::vector<Pattern> batch;
  batch.reserve(dataset.size());
  for (const auto &r : dataset.records) {
    const auto n = normalize(r, stats);
    Pattern p;
    p.input.assign(n.values.begin(), n.values.end());
    p.target = p.input;
    batch.push_back(std::move(p));
  }
  return batch;
}

AutoencoderTraining train_autoencoder(const Dataset &dataset, std::size_t hidden,
                                      const TrainConfig &cfg) {
  if (dataset.size() < 50)
    throw Error(Errc::IncompleteTrainingData, "autoencoder training needs >= 50 records");
  for (const auto &r : dataset.records)
    if (!r.complete())
      throw Error(Errc::IncompleteTrainingData,
                  "record " + r.id + " has missing values; train on complete records only");
  if (hidden == 0 || hidden >= kNumVars)
    throw Error(Errc::InvalidConfig, "hidden layer must be a bottleneck (1..9 units)");

  const NormStats stats = fit_normalizer(dataset);
  Network net = Network::random({{kNumVars, hidden, Activation::tanh_c()},
                                 {hidden, kNumVars, Activation::sigmoid()}},
                                cfg.seed);
  const auto batch = identity_patterns(dataset, stats);
  auto result = train(net, batch, cfg);
  return {{std::move(result.net), stats}, std::move(result.loss_trace)};
}

std::array<double, kNumVars> assemble_input(const AutoencoderModel &model,
                                            const GasRecord &record,
                                            std::span<const double> candidate_missing) {
  if (model.net.input_size() != kNumVars)
    throw Error(Errc::ModelMismatch, "autoencoder width differs from record width");
  if (candidate_missing.size() != record.missing_count())
    throw Error(Errc::DimensionMismatch, "candidate has " +
                                             std::to_string(candidate_missing.size()) +
                                             " values for " +
                                             std::to_string(record.missing_count()) +
                                             " missing slots");
  std::array<double, kNumVars> x{};
  std::size_t c = 0;
  for (std::size_t j = 0; j < kNumVars; ++j)
    x[j] = record.mask[j] ? candidate_missing[c++]
                          : normalize_value(record.values[j], model.stats.vars[j]);
  return x;
}

double known_error(const AutoencoderModel &model, const GasRecord &record,
                   std::span<const double> candidate_missing) {
  const std::size_t known = kNumVars - record.missing_count();
  if (known == 0)
    throw Error(Errc::AllMissing, "no known components to score");
  const auto x = assemble_input(model, record, candidate_missing);
  const auto y = forward(model.net, x);
  double s = 0.0;
  for (std::size_t j = 0; j < kNumVars; ++j) {
    if (record.mask[j])
      continue;
    const double e = x[j] - y[j];
    s += e * e;
  }
  return s / static_cast<double>(known);
}

ContractivityReport
contractivity_probe(const AutoencoderModel &model,
                    std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs) {
  ContractivityReport rep;
  double sum = 0.0;
  for (const auto &[x, y] : pairs) {
    if (x.size() != y.size())
      throw Error(Errc::DimensionMismatch, "pair members differ in length");
    double din = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      din += (x[i] - y[i]) * (x[i] - y[i]);
    din = std::sqrt(din);
    if (din < 1e-12)
      continue;
    const auto fx = forward(model.net, x);
    const auto fy = forward(model.net, y);
    double dout = 0.0;
    for (std::size_t i = 0; i < fx.size(); ++i)
      dout += (fx[i] - fy[i]) * (fx[i] - fy[i]);
    const double ratio = std::sqrt(dout) / din;
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    sum += ratio;
    ++rep.pairs_used;
  }
  if (rep.pairs_used == 0)
    throw Error(Errc::NoValidPairs, "every pair was degenerate");
  rep.mean_ratio = sum / static_cast<double>(rep.pairs_used);
  return rep;
}

void write_stats(std::ostream &out, const NormStats &stats) {
  out << "stats " << kNumVars << '\n';
  for (std::size_t j = 0; j < kNumVars; ++j) {
    const auto &v = stats.vars[j];
    out << kVarNames[j] << ' ' << format_double(v.min) << ' ' << format_double(v.max) << ' '
        << format_double(v.mean) << ' ' << format_double(v.std) << '\n';
  }
}

NormStats read_stats(std::istream &in) {
  std::string tag;
  std::size_t n = 0;
  if (!(in >> tag >> n) || tag != "stats" || n != kNumVars)
    throw Error(Errc::ParseError, "expected 'stats 10' section");
  NormStats stats;
  for (std::size_t j = 0; j < kNumVars; ++j) {
    std::string name, lo, hi, mean, sd;
    if (!(in >> name >> lo >> hi >> mean >> sd))
      throw Error(Errc::ParseError, "stats section truncated");
    if (name != kVarNames[j])
      throw Error(Errc::ParseError, "stats row " + std::to_string(j) + " names '" + name +
                                        "', expected " + std::string(kVarNames[j]));
    stats.vars[j] = {parse_double(lo), parse_double(hi), parse_double(mean), parse_double(sd)};
  }
  return stats;
}

void save_autoencoder(const AutoencoderModel &model, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(Errc::IoError, "cannot write " + path.string());
  write_network(out, model.net);
  write_stats(out, model.stats);
}

AutoencoderModel load_autoencoder(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::IoError, "cannot open " + path.string());
  AutoencoderModel m;
  m.net = read_network(in);
  m.stats = read_stats(in);
  if (m.net.input_size() != kNumVars || m.net.output_size() != kNumVars)
    throw Error(Errc::ModelMismatch, path.string() + " is not a 10-variable autoencoder");
  return m;
}

} // namespace dga
