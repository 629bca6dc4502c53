#include "dgaimpute/core_data.hpp"

#include "dgaimpute/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dga {

std::string_view errc_name(Errc code) {
  switch (code) {
  case Errc::DegenerateVariable: return "DegenerateVariable";
  case Errc::ParseError: return "ParseError";
  case Errc::SchemaError: return "SchemaError";
  case Errc::InvalidConfig: return "InvalidConfig";
  case Errc::IncompleteRecord: return "IncompleteRecord";
  case Errc::InvalidK: return "InvalidK";
  case Errc::DimensionMismatch: return "DimensionMismatch";
  case Errc::EmptyBatch: return "EmptyBatch";
  case Errc::NonFiniteLoss: return "NonFiniteLoss";
  case Errc::IncompleteTrainingData: return "IncompleteTrainingData";
  case Errc::AllMissing: return "AllMissing";
  case Errc::NoValidPairs: return "NoValidPairs";
  case Errc::EmptyPopulation: return "EmptyPopulation";
  case Errc::BudgetZero: return "BudgetZero";
  case Errc::ModelMismatch: return "ModelMismatch";
  case Errc::TooManyMissing: return "TooManyMissing";
  case Errc::SingleClassData: return "SingleClassData";
  case Errc::MissingModel: return "MissingModel";
  case Errc::MissingOptimizer: return "MissingOptimizer";
  case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

std::string_view label_name(Label label) {
  return label == Label::Acceptable ? "acceptable" : "unusable";
}

Label parse_label(std::string_view text) {
  if (text == "acceptable")
    return Label::Acceptable;
  if (text == "unusable")
    return Label::Unusable;
  throw Error(Errc::ParseError, "unknown label '" + std::string(text) + "'");
}

std::size_t GasRecord::missing_count() const {
  std::size_t n = 0;
  for (bool m : mask)
    n += m ? 1 : 0;
  return n;
}

std::vector<std::size_t> GasRecord::missing_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < kNumVars; ++j)
    if (mask[j])
      idx.push_back(j);
  return idx;
}

Dataset::Dataset() {
  for (std::size_t j = 0; j < kNumVars; ++j)
    schema[j] = std::string(kVarNames[j]);
}

NormStats fit_normalizer(const Dataset &dataset) {
  NormStats stats;
  for (std::size_t j = 0; j < kNumVars; ++j) {
    std::size_t n = 0;
    double lo = INFINITY, hi = -INFINITY, sum = 0.0;
    for (const auto &r : dataset.records) {
      if (r.mask[j])
        continue;
      const double v = r.values[j];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
      ++n;
    }
    if (n < 2)
      throw Error(Errc::DegenerateVariable,
                  dataset.schema[j] + " has fewer than 2 observed values");
    if (!(hi > lo))
      throw Error(Errc::DegenerateVariable, dataset.schema[j] + " has zero spread");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto &r : dataset.records) {
      if (r.mask[j])
        continue;
      const double d = r.values[j] - mean;
      ss += d * d;
    }
    stats.vars[j] = {lo, hi, mean, std::sqrt(ss / static_cast<double>(n - 1))};
  }
  return stats;
}

namespace {

void check_nondegenerate(const VarStats &s) {
  if (!(s.max > s.min))
    throw Error(Errc::DegenerateVariable, "max must exceed min");
}

} // namespace

double normalize_value(double raw, const VarStats &s) {
  check_nondegenerate(s);
  return kNormLow + (kNormHigh - kNormLow) * (raw - s.min) / (s.max - s.min);
}

double denormalize_value(double scaled, const VarStats &s) {
  check_nondegenerate(s);
  return s.min + (scaled - kNormLow) * (s.max - s.min) / (kNormHigh - kNormLow);
}

GasRecord normalize(const GasRecord &record, const NormStats &stats) {
  GasRecord out = record;
  for (std::size_t j = 0; j < kNumVars; ++j)
    if (!record.mask[j])
      out.values[j] = normalize_value(record.values[j], stats.vars[j]);
  return out;
}

GasRecord denormalize(const GasRecord &record, const NormStats &stats) {
  GasRecord out = record;
  for (std::size_t j = 0; j < kNumVars; ++j)
    if (!record.mask[j])
      out.values[j] = denormalize_value(record.values[j], stats.vars[j]);
  return out;
}

bool within_std_correct(double imputed_raw, double true_raw, double var_std) {
  return std::abs(imputed_raw - true_raw) <= var_std && imputed_raw >= 0.0;
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const char *first = text.data();
  const char *last = first + text.size();
  if (first != last && *first == '+')
    ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || first == last)
    throw Error(Errc::ParseError, "malformed number '" + std::string(text) + "'");
  return v;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string header_line() {
  std::string h = "id";
  for (auto name : kVarNames) {
    h += ',';
    h += name;
  }
  return h + ",label";
}

} // namespace

Dataset read_records(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::IoError, "cannot open " + path.string());

  Dataset ds;
  std::string line;
  if (!std::getline(in, line))
    throw Error(Errc::SchemaError, path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  if (line != header_line())
    throw Error(Errc::SchemaError, path.string() + ": unexpected header '" + line + "'");

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    const auto cells = split(line, ',');
    if (cells.size() != kNumVars + 2)
      throw Error(Errc::SchemaError, "row " + std::to_string(row) + ": expected " +
                                         std::to_string(kNumVars + 2) + " columns, got " +
                                         std::to_string(cells.size()));
    GasRecord r;
    r.id = std::string(cells[0]);
    for (std::size_t j = 0; j < kNumVars; ++j) {
      const auto cell = cells[j + 1];
      if (cell.empty()) {
        r.mask[j] = true;
        r.values[j] = 0.0;
        continue;
      }
      double v;
      try {
        v = parse_double(cell);
      } catch (const Error &) {
        throw Error(Errc::ParseError, "row " + std::to_string(row) + ", column " +
                                          std::to_string(j + 2) + ": malformed number '" +
                                          std::string(cell) + "'");
      }
      if (!std::isfinite(v) || v < 0.0)
        throw Error(Errc::ParseError, "row " + std::to_string(row) + ", column " +
                                          std::to_string(j + 2) +
                                          ": concentration must be finite and >= 0");
      r.values[j] = v;
    }
    const auto lab = cells[kNumVars + 1];
    if (!lab.empty()) {
      try {
        r.label = parse_label(lab);
      } catch (const Error &) {
        throw Error(Errc::ParseError, "row " + std::to_string(row) + ", column " +
                                          std::to_string(kNumVars + 2) + ": unknown label '" +
                                          std::string(lab) + "'");
      }
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

void write_records(const Dataset &dataset, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(Errc::IoError, "cannot write " + path.string());
  out << header_line() << '\n';
  for (const auto &r : dataset.records) {
    out << r.id;
    for (std::size_t j = 0; j < kNumVars; ++j) {
      out << ',';
      if (!r.mask[j])
        out << format_double(r.values[j]);
    }
    out << ',';
    if (r.label)
      out << label_name(*r.label);
    out << '\n';
  }
  if (!out)
    throw Error(Errc::IoError, "write failed for " + path.string());
}

} // namespace dga
