#include "dgaimpute/bench.hpp"

#include "dgaimpute/error.hpp"
#include "dgaimpute/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace dga {

namespace {

// Stream tags for derive_seed so each consumer gets an independent stream.
constexpr std::uint64_t kTrainDataStream = 1;
constexpr std::uint64_t kTestDataStream = 2;
constexpr std::uint64_t kMaskStream = 3;
constexpr std::uint64_t kImputeStream = 4;

} // namespace

void SweepConfig::validate() const {
  if (trials < 1)
    throw Error(Errc::InvalidConfig, "trials must be >= 1");
  if (k_values.empty())
    throw Error(Errc::InvalidK, "no k values requested");
  for (auto k : k_values)
    if (k > kNumVars)
      throw Error(Errc::InvalidK, "k must be in [0, 10], got " + std::to_string(k));
  if (optimizers.empty())
    throw Error(Errc::MissingOptimizer, "no optimizers requested");
  if (jobs < 1)
    throw Error(Errc::InvalidConfig, "jobs must be >= 1");
}

const SweepRow *SweepReport::find(OptimizerKind optimizer, std::size_t k) const {
  for (const auto &r : rows)
    if (r.optimizer == optimizer && r.k == k)
      return &r;
  return nullptr;
}

BenchInputs prepare_inputs(const SweepConfig &config) {
  config.validate();
  BenchInputs in;

  std::optional<Dataset> train;
  auto training_data = [&]() -> const Dataset & {
    if (!train) {
      if (config.train_data) {
        train = read_records(*config.train_data);
      } else if (!config.test_data) {
        GenConfig g = config.gen;
        g.n_records = config.n_train;
        g.seed = derive_seed(config.seed, kTrainDataStream);
        train = generate(g);
      } else {
        throw Error(Errc::MissingModel,
                    "test data given without training data or pre-trained models");
      }
    }
    return *train;
  };

  if (config.autoencoder_model) {
    in.autoencoder = load_autoencoder(*config.autoencoder_model);
  } else {
    TrainConfig cfg = config.ae_train;
    cfg.seed = derive_seed(config.seed, 11);
    in.autoencoder = train_autoencoder(training_data(), config.ae_hidden, cfg).model;
  }
  if (config.classifier_model) {
    in.classifier = load_classifier(*config.classifier_model);
  } else {
    TrainConfig cfg = config.clf_train;
    cfg.seed = derive_seed(config.seed, 12);
    in.classifier = train_classifier(training_data(), cfg, config.clf_hidden).model;
  }

  if (config.test_data) {
    in.test = read_records(*config.test_data);
  } else {
    GenConfig g = config.gen;
    g.n_records = config.n_test;
    g.seed = derive_seed(config.seed, kTestDataStream);
    in.test = generate(g);
  }
  for (const auto &r : in.test.records)
    if (!r.complete() || !r.label)
      throw Error(Errc::IncompleteRecord,
                  "test record " + r.id + " must be complete and labelled (ground truth)");
  if (in.test.empty())
    throw Error(Errc::EmptyBatch, "test set is empty");
  return in;
}

namespace {

struct RecordOutcome {
  TrialRow row;
  bool nonnegative = true;
  bool isolated = true;
};

RecordOutcome run_record(const BenchInputs &in, const GasRecord &truth, const GasRecord &masked,
                         const ImputeConfig &cfg) {
  RecordOutcome out;
  GasRecord poisoned = masked;
  for (std::size_t j = 0; j < kNumVars; ++j)
    if (poisoned.mask[j])
      poisoned.values[j] = std::numeric_limits<double>::quiet_NaN();

  const auto t0 = std::chrono::steady_clock::now();
  const ImputeResult res = impute(in.autoencoder, poisoned, cfg);
  const auto t1 = std::chrono::steady_clock::now();

  TrialRow &row = out.row;
  row.record_id = truth.id;
  row.masked = masked.missing_count();
  row.objective = res.objective;
  row.known_error = res.known_error;
  row.evaluations = res.evaluations;
  row.converged = res.converged;
  row.seconds = std::chrono::duration<double>(t1 - t0).count();

  out.isolated = std::isfinite(res.objective) &&
                 (!res.known_error || std::isfinite(*res.known_error));
  for (std::size_t j = 0; j < kNumVars; ++j) {
    const double v = res.completed.values[j];
    if (!std::isfinite(v) || res.completed.mask[j])
      out.isolated = false;
    if (!masked.mask[j])
      continue;
    if (v < 0.0)
      out.nonnegative = false;
    if (within_std_correct(v, truth.values[j], in.autoencoder.stats.vars[j].std))
      ++row.correct;
  }
  if (out.isolated)
    row.class_correct = classify(in.classifier, res.completed).label == *truth.label;
  return out;
}

template <typename Fn> void parallel_for(std::size_t n, std::size_t jobs, Fn &&fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n)
          return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true))
            failure = std::current_exception();
        }
      }
    });
  for (auto &th : pool)
    th.join();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace

std::vector<SweepRow> aggregate(std::span<const TrialRow> trials,
                                std::span<const OptimizerKind> optimizers,
                                std::span<const std::size_t> k_values) {
  std::vector<SweepRow> rows;
  for (auto opt : optimizers) {
    for (auto k : k_values) {
      SweepRow row;
      row.optimizer = opt;
      row.k = k;
      std::size_t correct = 0, class_correct = 0;
      double evals = 0.0, seconds = 0.0;
      for (const auto &t : trials) {
        if (t.optimizer != opt || t.k != k)
          continue;
        ++row.records;
        row.masked_slots += t.masked;
        correct += t.correct;
        class_correct += t.class_correct ? 1 : 0;
        evals += static_cast<double>(t.evaluations);
        seconds += t.seconds;
      }
      if (row.records == 0)
        continue;
      const double n = static_cast<double>(row.records);
      if (row.masked_slots > 0)
        row.est_accuracy =
            static_cast<double>(correct) / static_cast<double>(row.masked_slots);
      row.class_accuracy = static_cast<double>(class_correct) / n;
      row.mean_evaluations = evals / n;
      row.mean_time_s = seconds / n;
      rows.push_back(row);
    }
  }
  return rows;
}

SweepReport run_sweep(const SweepConfig &config, const BenchInputs &inputs) {
  config.validate();
  SweepReport report;
  const std::size_t n = inputs.test.size();

  for (auto k : config.k_values) {
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
      const Dataset masked = mask_missing(inputs.test, k, Mechanism::MCAR,
                                          derive_seed(config.seed, kMaskStream + 16 * k, trial));
      for (auto opt : config.optimizers) {
        std::vector<RecordOutcome> outcomes(n);
        parallel_for(n, config.jobs, [&](std::size_t i) {
          ImputeConfig cfg = config.impute;
          cfg.optimizer = opt;
          cfg.seed = derive_seed(derive_seed(config.seed, kImputeStream + 16 * k, trial), i);
          outcomes[i] = run_record(inputs, inputs.test.records[i], masked.records[i], cfg);
        });
        for (auto &o : outcomes) {
          o.row.optimizer = opt;
          o.row.k = k;
          o.row.trial = trial;
          report.all_nonnegative = report.all_nonnegative && o.nonnegative;
          report.ground_truth_isolated = report.ground_truth_isolated && o.isolated;
          report.trials.push_back(std::move(o.row));
        }
      }
    }
  }
  report.rows = aggregate(report.trials, config.optimizers, config.k_values);
  return report;
}

SweepReport run_sweep(const SweepConfig &config) {
  return run_sweep(config, prepare_inputs(config));
}

std::vector<OptimizerComparison> compare_optimizers(const SweepReport &report) {
  std::vector<std::size_t> ks;
  bool has_ga = false, has_pso = false;
  for (const auto &r : report.rows) {
    has_ga = has_ga || r.optimizer == OptimizerKind::GA;
    has_pso = has_pso || r.optimizer == OptimizerKind::PSO;
    if (std::find(ks.begin(), ks.end(), r.k) == ks.end())
      ks.push_back(r.k);
  }
  if (!has_ga || !has_pso)
    throw Error(Errc::MissingOptimizer, "comparison needs both GA and PSO rows");

  std::vector<OptimizerComparison> out;
  for (auto k : ks) {
    const auto *ga = report.find(OptimizerKind::GA, k);
    const auto *pso = report.find(OptimizerKind::PSO, k);
    if (!ga || !pso)
      continue;
    OptimizerComparison c;
    c.k = k;
    if (pso->mean_time_s > 0.0)
      c.time_ratio = ga->mean_time_s / pso->mean_time_s;
    else if (ga->mean_time_s == 0.0)
      c.time_ratio = 1.0;
    if (ga->est_accuracy && pso->est_accuracy)
      c.est_delta = *ga->est_accuracy - *pso->est_accuracy;
    c.class_delta = ga->class_accuracy - pso->class_accuracy;
    out.push_back(c);
  }
  return out;
}

std::span<const PaperReference> paper_reference() {
  static constexpr PaperReference table[] = {
      {1, 0.95, 0.96, 4608, 0.95, 0.96, 1050},
      {2, 0.84, 0.89, 4799, 0.66, 0.64, 1057},
      {3, 0.76, 0.87, 5006, 0.68, 0.60, 1071},
      {4, 0.54, 0.79, 499, 0.51, 0.48, 1061},
  };
  return table;
}

void write_sweep_report_csv(const SweepReport &report, std::ostream &out) {
  out << "optimizer,k,est_acc,class_acc,evals\n";
  for (const auto &r : report.rows) {
    out << optimizer_name(r.optimizer) << ',' << r.k << ','
        << (r.est_accuracy ? format_double(*r.est_accuracy) : "NA") << ','
        << format_double(r.class_accuracy) << ',' << format_double(r.mean_evaluations) << '\n';
  }
}

void write_trials_csv(const SweepReport &report, std::ostream &out) {
  out << "optimizer,k,trial,record_id,masked,correct,class_correct,objective,known_error,"
         "evaluations,converged\n";
  for (const auto &t : report.trials) {
    out << optimizer_name(t.optimizer) << ',' << t.k << ',' << t.trial << ',' << t.record_id
        << ',' << t.masked << ',' << t.correct << ',' << (t.class_correct ? 1 : 0) << ','
        << format_double(t.objective) << ','
        << (t.known_error ? format_double(*t.known_error) : "") << ',' << t.evaluations << ','
        << (t.converged ? 1 : 0) << '\n';
  }
}

void write_timing_csv(const SweepReport &report, std::ostream &out) {
  out << "optimizer,k,records,mean_time_s\n";
  for (const auto &r : report.rows)
    out << optimizer_name(r.optimizer) << ',' << r.k << ',' << r.records << ','
        << format_double(r.mean_time_s) << '\n';
}

namespace {

std::string pct(std::optional<double> v) {
  if (!v)
    return "N/A";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * *v);
  return buf;
}

std::string secs(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

const PaperReference *paper_row(std::size_t k) {
  for (const auto &p : paper_reference())
    if (p.k == k)
      return &p;
  return nullptr;
}

} // namespace

void render_table(const SweepReport &report, std::ostream &out) {
  std::vector<std::size_t> ks;
  std::vector<OptimizerKind> opts;
  for (const auto &r : report.rows) {
    if (std::find(ks.begin(), ks.end(), r.k) == ks.end())
      ks.push_back(r.k);
    if (std::find(opts.begin(), opts.end(), r.optimizer) == opts.end())
      opts.push_back(r.optimizer);
  }
  auto cell = [](const std::string &s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-22s", s.c_str());
    return std::string(buf);
  };

  out << "Accuracy of imputed variables and post-imputation classification\n";
  out << "measured (published reference in brackets; reference times are 2005 hardware)\n\n";
  out << cell("Missing data");
  for (auto k : ks)
    out << cell(std::to_string(k));
  out << '\n';
  for (auto opt : opts) {
    const bool ga = opt == OptimizerKind::GA, pso = opt == OptimizerKind::PSO;
    auto ref = [&](std::size_t k, int what) -> std::string {
      const auto *p = paper_row(k);
      if (k == 0 && what == 1 && (ga || pso))
        return " [" + pct(kPaperCleanClassAccuracy) + "]";
      if (!p || !(ga || pso))
        return "";
      switch (what) {
      case 0: return " [" + pct(ga ? p->ga_est : p->pso_est) + "]";
      case 1: return " [" + pct(ga ? p->ga_class : p->pso_class) + "]";
      default: return " [" + secs(ga ? p->ga_time : p->pso_time) + "]";
      }
    };
    const std::string name(optimizer_name(opt));
    out << cell("Est. Accuracy " + name);
    for (auto k : ks) {
      const auto *r = report.find(opt, k);
      out << cell(r ? pct(r->est_accuracy) + ref(k, 0) : "-");
    }
    out << '\n' << cell("Class. Accuracy " + name);
    for (auto k : ks) {
      const auto *r = report.find(opt, k);
      out << cell(r ? pct(r->class_accuracy) + ref(k, 1) : "-");
    }
    out << '\n' << cell("Time (s) " + name);
    for (auto k : ks) {
      const auto *r = report.find(opt, k);
      out << cell(r ? secs(r->mean_time_s) + ref(k, 2) : "-");
    }
    out << '\n';
  }
  out << "\nnon-negative imputations: " << (report.all_nonnegative ? "yes" : "NO") << '\n';
  out << "ground truth isolated: " << (report.ground_truth_isolated ? "yes" : "NO") << '\n';

  try {
    const auto cmp = compare_optimizers(report);
    out << "\nGA/PSO mean time ratio per k:";
    for (const auto &c : cmp)
      out << "  k=" << c.k << ": "
          << (c.time_ratio ? secs(*c.time_ratio) : std::string("n/a"));
    out << '\n';
    for (const auto &c : cmp)
      if (c.k > 0 && c.time_ratio && *c.time_ratio < 1.0)
        out << "FLAG: PSO slower than GA at k=" << c.k << " (ratio " << secs(*c.time_ratio)
            << ")\n";
  } catch (const Error &) {
    // single-optimizer sweeps have nothing to compare
  }
}

void write_sweep_outputs(const SweepReport &report, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char *name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f)
      throw Error(Errc::IoError, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("sweep_report.csv");
    write_sweep_report_csv(report, f);
  }
  {
    auto f = open("trials.csv");
    write_trials_csv(report, f);
  }
  {
    auto f = open("timing.csv");
    write_timing_csv(report, f);
  }
  {
    auto f = open("table.txt");
    render_table(report, f);
  }
}

std::vector<TrialRow> read_trials_csv(std::istream &in) {
  std::vector<TrialRow> rows;
  std::string line;
  if (!std::getline(in, line))
    throw Error(Errc::SchemaError, "trials.csv is empty");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
      cells.emplace_back();
    if (cells.size() != 11)
      throw Error(Errc::SchemaError, "trials.csv line " + std::to_string(lineno) +
                                         ": expected 11 columns");
    TrialRow t;
    t.optimizer = parse_optimizer(cells[0]);
    t.k = std::stoul(cells[1]);
    t.trial = std::stoul(cells[2]);
    t.record_id = cells[3];
    t.masked = std::stoul(cells[4]);
    t.correct = std::stoul(cells[5]);
    t.class_correct = cells[6] == "1";
    t.objective = parse_double(cells[7]);
    if (!cells[8].empty())
      t.known_error = parse_double(cells[8]);
    t.evaluations = std::stoul(cells[9]);
    t.converged = cells[10] == "1";
    rows.push_back(std::move(t));
  }
  return rows;
}

} // namespace dga
