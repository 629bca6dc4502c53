// Command-line front end: gen, train ae, train clf, impute, bench.
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include "dgaimpute/bench.hpp"
#include "dgaimpute/error.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char *kVersion = "1.0.0";

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// key=value lines, '#' comments. Keys are long option names without dashes.
std::vector<std::string> config_args(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Usage("cannot open config file " + path.string());
  std::vector<std::string> args;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos)
      continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Usage("config line '" + line + "' is not key=value");
    auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

// Splices --config file contents in right after the command words so that
// explicit flags, which come later, take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> cfg;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string file;
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + 2));
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      continue;
    }
    auto more = config_args(file);
    cfg.insert(cfg.end(), more.begin(), more.end());
    --i;
  }
  // Drop config keys given explicitly; list options would otherwise merge.
  auto key_of = [](const std::string &a) { return a.substr(0, a.find('=')); };
  std::erase_if(cfg, [&](const std::string &c) {
    const auto key = key_of(c);
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string &a) { return key_of(a) == key; });
  });
  std::size_t pos = 0;
  while (pos < args.size() && (args[pos] == "gen" || args[pos] == "train" || args[pos] == "ae" ||
                               args[pos] == "clf" || args[pos] == "impute" || args[pos] == "bench"))
    ++pos;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(pos), cfg.begin(), cfg.end());
  return args;
}

json resolved_options(const CLI::App *app) {
  json j = json::object();
  for (const auto *opt : app->get_options()) {
    const auto name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config")
      continue;
    const auto &res = opt->results();
    if (!res.empty())
      j[name] = res.size() == 1 ? json(res.front()) : json(res);
    else if (!opt->get_default_str().empty())
      j[name] = opt->get_default_str();
  }
  return j;
}

void write_manifest(const fs::path &path, const std::string &command, const CLI::App *app,
                    const std::vector<std::string> &args, const json &inputs,
                    const json &outputs, const json &seeds, double seconds) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["args"] = args;
  m["config"] = resolved_options(app);
  m["seeds"] = seeds;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["wall_time_s"] = seconds;
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw dga::Error(dga::Errc::IoError, "cannot write " + path.string());
  out << m.dump(2) << '\n';
}

fs::path sibling(const fs::path &file, const std::string &suffix) {
  return fs::path(file.string() + suffix);
}

void write_loss_trace(const fs::path &path, const std::vector<double> &trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw dga::Error(dga::Errc::IoError, "cannot write " + path.string());
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << i + 1 << ',' << dga::format_double(trace[i]) << '\n';
}

dga::TrainMethod parse_method(const std::string &s) {
  return s == "gd" ? dga::TrainMethod::GD : dga::TrainMethod::SCG;
}

dga::ObjectiveMode parse_mode(const std::string &s) {
  return s == "known" ? dga::ObjectiveMode::KnownOnly : dga::ObjectiveMode::FullReconstruction;
}

struct TrainFlags {
  std::string data, out, method = "scg";
  std::size_t hidden = 0, epochs = 0;
  std::uint64_t seed = 1;
  double lr = 0.1, momentum = 0.9, target = 1e-4;
};

void add_train_flags(CLI::App *cmd, TrainFlags &f, std::size_t hidden, std::size_t epochs) {
  f.hidden = hidden;
  f.epochs = epochs;
  cmd->add_option("--data", f.data, "Training CSV (complete records)")->required();
  cmd->add_option("--out", f.out, "Model file to write")->required();
  cmd->add_option("--hidden", f.hidden, "Hidden units")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Weight initialisation seed")->capture_default_str();
  cmd->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--method", f.method, "Trainer")
      ->check(CLI::IsMember({"scg", "gd"}))
      ->capture_default_str();
  cmd->add_option("--lr", f.lr, "Gradient descent learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--momentum", f.momentum, "Gradient descent momentum")
      ->check(CLI::Range(0.0, 0.999999))
      ->capture_default_str();
  cmd->add_option("--target", f.target, "Early-stop average error")->capture_default_str();
  cmd->add_option("--config", "key=value file with defaults for these flags");
}

dga::TrainConfig to_train_config(const TrainFlags &f) {
  dga::TrainConfig c;
  c.epochs = f.epochs;
  c.learning_rate = f.lr;
  c.momentum = f.momentum;
  c.method = parse_method(f.method);
  c.seed = f.seed;
  c.target_error = f.target;
  return c;
}

struct SearchFlags {
  std::size_t pop = 20, gens = 25, swarm = 20, iters = 50, restarts = 3;
  double tol = 1e-3, pc = 0.8, pm = 0.1, b = 3.0, c1 = 2.0, c2 = 2.0, inertia = 1.0,
         vmax = 0.5;
  std::string mode = "full";
};

void add_search_flags(CLI::App *cmd, SearchFlags &f) {
  cmd->add_option("--pop", f.pop, "GA population")->capture_default_str();
  cmd->add_option("--gens", f.gens, "GA generations")->capture_default_str();
  cmd->add_option("--pc", f.pc, "GA crossover probability")->capture_default_str();
  cmd->add_option("--pm", f.pm, "GA per-gene mutation probability")->capture_default_str();
  cmd->add_option("--shape", f.b, "Non-uniform mutation shape b")->capture_default_str();
  cmd->add_option("--swarm", f.swarm, "PSO swarm size")->capture_default_str();
  cmd->add_option("--iters", f.iters, "PSO iterations")->capture_default_str();
  cmd->add_option("--c1", f.c1, "PSO cognitive factor")->capture_default_str();
  cmd->add_option("--c2", f.c2, "PSO social factor")->capture_default_str();
  cmd->add_option("--inertia", f.inertia, "PSO inertia")->capture_default_str();
  cmd->add_option("--vmax", f.vmax, "PSO velocity clamp, fraction of range")
      ->capture_default_str();
  cmd->add_option("--mode", f.mode, "Objective: full reconstruction or known-only error")
      ->check(CLI::IsMember({"full", "known"}))
      ->capture_default_str();
  cmd->add_option("--tol", f.tol, "known-error tolerance (normalised units)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--restarts", f.restarts, "Maximum optimizer runs per record")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

dga::ImputeConfig to_impute_config(const SearchFlags &f) {
  dga::ImputeConfig c;
  c.ga.population = f.pop;
  c.ga.generations = f.gens;
  c.ga.crossover_prob = f.pc;
  c.ga.mutation_prob = f.pm;
  c.ga.shape_b = f.b;
  c.pso.swarm = f.swarm;
  c.pso.iterations = f.iters;
  c.pso.c1 = f.c1;
  c.pso.c2 = f.c2;
  c.pso.inertia = f.inertia;
  c.pso.vmax_fraction = f.vmax;
  c.mode = parse_mode(f.mode);
  c.tolerance = f.tol;
  c.max_restarts = f.restarts;
  return c;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Missing-data imputation and condition classification for DGA records"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // gen
  auto *gen = app.add_subcommand("gen", "Generate a synthetic DGA dataset");
  std::int64_t n = 500;
  std::uint64_t gen_seed = 42, loading_seed = 2005, mask_seed = 0;
  std::size_t rank = 3, missing = 0;
  double noise = 0.05;
  std::string gen_out, rules_in, mechanism = "mcar";
  gen->add_option("--n", n, "Number of records")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  gen->add_option("--seed", gen_seed, "Master seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--rank", rank, "Latent rank (1..10)")
      ->check(CLI::Range(1, 10))
      ->capture_default_str();
  gen->add_option("--noise", noise, "Log-space noise fraction in [0, 1)")
      ->check(CLI::Range(0.0, 0.999999))
      ->capture_default_str();
  gen->add_option("--loading-seed", loading_seed, "Seed of the loading matrix")
      ->capture_default_str();
  gen->add_option("--rules", rules_in, "Rule table file (NAME=THRESHOLD lines)")
      ->check(CLI::ExistingFile);
  gen->add_option("--missing", missing, "Also write masked.csv with k missing per record")
      ->check(CLI::Range(0, 10))
      ->capture_default_str();
  gen->add_option("--mechanism", mechanism, "Missingness mechanism")
      ->check(CLI::IsMember({"mcar", "mar"}))
      ->capture_default_str();
  gen->add_option("--mask-seed", mask_seed, "Seed for masking (default derived from --seed)");
  gen->add_option("--config", "key=value file with defaults for these flags");

  // train
  auto *train = app.add_subcommand("train", "Train a model");
  train->require_subcommand(1);
  TrainFlags ae_flags, clf_flags;
  auto *train_ae = train->add_subcommand("ae", "Train the autoencoder (10-h-10)");
  add_train_flags(train_ae, ae_flags, dga::kDefaultAutoencoderHidden, 2000);
  auto *train_clf = train->add_subcommand("clf", "Train the condition classifier (10-h-1)");
  add_train_flags(train_clf, clf_flags, dga::kDefaultClassifierHidden, 1500);

  // impute
  auto *imp = app.add_subcommand("impute", "Fill missing cells of a CSV");
  std::string imp_model, imp_data, imp_out, imp_report, imp_classify, imp_opt = "ga";
  std::uint64_t imp_seed = 1;
  std::size_t imp_jobs = 1;
  SearchFlags imp_search;
  imp->add_option("--model", imp_model, "Autoencoder model file")->required();
  imp->add_option("--data", imp_data, "Input CSV with empty cells for missing values")
      ->required();
  imp->add_option("--out", imp_out, "Completed CSV to write")->required();
  imp->add_option("--report", imp_report, "Sidecar report CSV (default <out>.report.csv)");
  imp->add_option("--optimizer", imp_opt, "ga, pso, mean or zero")
      ->check(CLI::IsMember({"ga", "pso", "mean", "zero"}))
      ->capture_default_str();
  imp->add_option("--seed", imp_seed, "Master seed")->capture_default_str();
  imp->add_option("--classify", imp_classify, "Classifier model; appends predicted labels");
  imp->add_option("--jobs", imp_jobs, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_search_flags(imp, imp_search);
  imp->add_option("--config", "key=value file with defaults for these flags");

  // bench
  auto *bench = app.add_subcommand("bench", "Sweep k missing variables over GA/PSO/baselines");
  std::vector<std::size_t> bench_k{0, 1, 2, 3, 4};
  std::vector<std::string> bench_opts{"ga", "pso"};
  std::size_t trials = 3, jobs = 1, n_train = 1000, n_test = 200, ae_epochs = 2000,
              clf_epochs = 1500;
  std::uint64_t bench_seed = 7;
  std::string bench_out, train_data, test_data, ae_model, clf_model;
  SearchFlags bench_search;
  bench->add_option("--k", bench_k, "Missing counts to sweep")
      ->delimiter(',')
      ->check(CLI::Range(0, 10))
      ->capture_default_str();
  bench->add_option("--optimizers", bench_opts, "Comma list of ga, pso, mean, zero")
      ->delimiter(',')
      ->check(CLI::IsMember({"ga", "pso", "mean", "zero"}))
      ->capture_default_str();
  bench->add_option("--trials", trials, "Trials per k")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "Master seed")->capture_default_str();
  bench->add_option("--out", bench_out, "Output directory")->required();
  bench->add_option("--jobs", jobs, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--n-train", n_train, "Generated training records")->capture_default_str();
  bench->add_option("--n-test", n_test, "Generated test records")->capture_default_str();
  bench->add_option("--train-data", train_data, "Training CSV instead of generated data")
      ->check(CLI::ExistingFile);
  bench->add_option("--test-data", test_data, "Complete labelled test CSV")
      ->check(CLI::ExistingFile);
  bench->add_option("--ae-model", ae_model, "Pre-trained autoencoder")->check(CLI::ExistingFile);
  bench->add_option("--clf-model", clf_model, "Pre-trained classifier")
      ->check(CLI::ExistingFile);
  bench->add_option("--ae-epochs", ae_epochs, "Autoencoder SCG epochs")->capture_default_str();
  bench->add_option("--clf-epochs", clf_epochs, "Classifier SCG epochs")->capture_default_str();
  add_search_flags(bench, bench_search);
  bench->add_option("--config", "key=value file with defaults for these flags");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Usage &e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  try {
    if (*gen) {
      dga::GenConfig cfg;
      cfg.n_records = static_cast<std::size_t>(n);
      cfg.seed = gen_seed;
      cfg.latent_rank = rank;
      cfg.noise_fraction = noise;
      cfg.loading_seed = loading_seed;
      if (!rules_in.empty())
        cfg.rule = dga::read_rule_table(rules_in);
      fs::create_directories(gen_out);
      const fs::path dir = gen_out;
      const auto ds = dga::generate(cfg);
      dga::write_records(ds, dir / "data.csv");
      dga::write_rule_table(cfg.rule, dir / "rules.txt");
      json outputs = {(dir / "data.csv").string(), (dir / "rules.txt").string()};
      const std::uint64_t mseed =
          gen->get_option("--mask-seed")->count() ? mask_seed : dga::derive_seed(gen_seed, 99);
      if (missing > 0) {
        const auto mech = mechanism == "mar" ? dga::Mechanism::MAR : dga::Mechanism::MCAR;
        auto masked = dga::mask_missing(ds, missing, mech, mseed);
        dga::write_records(masked, dir / "masked.csv");
        outputs.push_back((dir / "masked.csv").string());
      }
      write_manifest(dir / "manifest.json", "gen", gen, args,
                     rules_in.empty() ? json::array() : json::array({rules_in}), outputs,
                     {{"seed", gen_seed}, {"loading_seed", loading_seed}, {"mask_seed", mseed}},
                     elapsed());
      std::cout << "wrote " << ds.size() << " records to " << (dir / "data.csv").string() << '\n';
      return 0;
    }

    if (*train) {
      const bool is_ae = static_cast<bool>(*train_ae);
      const TrainFlags &f = is_ae ? ae_flags : clf_flags;
      const auto ds = dga::read_records(f.data);
      const auto tc = to_train_config(f);
      std::vector<double> trace;
      if (is_ae) {
        auto res = dga::train_autoencoder(ds, f.hidden, tc);
        dga::save_autoencoder(res.model, f.out);
        trace = std::move(res.loss_trace);
      } else {
        auto res = dga::train_classifier(ds, tc, f.hidden);
        dga::save_classifier(res.model, f.out);
        trace = std::move(res.loss_trace);
      }
      const fs::path out = f.out;
      write_loss_trace(sibling(out, ".loss.csv"), trace);
      write_manifest(sibling(out, ".manifest.json"), is_ae ? "train ae" : "train clf",
                     is_ae ? train_ae : train_clf, args, {f.data},
                     {out.string(), sibling(out, ".loss.csv").string()}, {{"seed", f.seed}},
                     elapsed());
      std::cout << "trained " << (is_ae ? "autoencoder" : "classifier") << ", "
                << trace.size() << " epochs, final loss "
                << (trace.empty() ? std::string("n/a") : dga::format_double(trace.back()))
                << '\n';
      return 0;
    }

    if (*imp) {
      const auto model = dga::load_autoencoder(imp_model);
      std::optional<dga::ClassifierModel> clf;
      if (!imp_classify.empty())
        clf = dga::load_classifier(imp_classify);
      const auto ds = dga::read_records(imp_data);
      auto cfg = to_impute_config(imp_search);
      cfg.optimizer = dga::parse_optimizer(imp_opt);

      std::vector<dga::ImputeResult> results(ds.size());
      {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex fail_mu;
        auto worker = [&] {
          for (std::size_t i; (i = next.fetch_add(1)) < ds.size();) {
            try {
              auto c = cfg;
              c.seed = dga::derive_seed(imp_seed, i);
              results[i] = dga::impute(model, ds.records[i], c);
            } catch (...) {
              std::lock_guard lock(fail_mu);
              if (!failure)
                failure = std::current_exception();
            }
          }
        };
        std::vector<std::thread> pool;
        const std::size_t nthreads = std::max<std::size_t>(1, std::min(imp_jobs, ds.size()));
        for (std::size_t t = 1; t < nthreads; ++t)
          pool.emplace_back(worker);
        worker();
        for (auto &t : pool)
          t.join();
        if (failure)
          std::rethrow_exception(failure);
      }

      dga::Dataset completed;
      completed.records.reserve(ds.size());
      for (const auto &r : results)
        completed.records.push_back(r.completed);

      const fs::path out = imp_out;
      const fs::path report = imp_report.empty() ? sibling(out, ".report.csv") : fs::path(imp_report);
      if (!clf) {
        dga::write_records(completed, out);
      } else {
        // Same layout as the record CSV plus predicted label and score.
        dga::write_records(completed, out);
        std::ifstream in(out);
        std::vector<std::string> lines;
        for (std::string l; std::getline(in, l);)
          lines.push_back(l);
        in.close();
        std::ofstream o(out, std::ios::binary);
        o << lines.at(0) << ",predicted,score\n";
        for (std::size_t i = 0; i < completed.size(); ++i) {
          const auto c = dga::classify(*clf, completed.records[i]);
          o << lines.at(i + 1) << ',' << dga::label_name(c.label) << ','
            << dga::format_double(c.score) << '\n';
        }
      }
      {
        std::ofstream o(report, std::ios::binary);
        if (!o)
          throw dga::Error(dga::Errc::IoError, "cannot write " + report.string());
        o << "id,k_missing,objective,known_error,evaluations,converged\n";
        for (std::size_t i = 0; i < ds.size(); ++i) {
          const auto &r = results[i];
          o << ds.records[i].id << ',' << ds.records[i].missing_count() << ','
            << dga::format_double(r.objective) << ','
            << (r.known_error ? dga::format_double(*r.known_error) : "") << ','
            << r.evaluations << ',' << (r.converged ? 1 : 0) << '\n';
        }
      }
      json inputs = {imp_model, imp_data};
      if (!imp_classify.empty())
        inputs.push_back(imp_classify);
      write_manifest(sibling(out, ".manifest.json"), "impute", imp, args, inputs,
                     {out.string(), report.string()}, {{"seed", imp_seed}}, elapsed());
      std::cout << "imputed " << ds.size() << " records into " << out.string() << '\n';
      return 0;
    }

    if (*bench) {
      dga::SweepConfig cfg;
      cfg.k_values = bench_k;
      cfg.optimizers.clear();
      for (const auto &o : bench_opts)
        cfg.optimizers.push_back(dga::parse_optimizer(o));
      cfg.trials = trials;
      cfg.seed = bench_seed;
      cfg.jobs = jobs;
      cfg.n_train = n_train;
      cfg.n_test = n_test;
      cfg.ae_train.epochs = ae_epochs;
      cfg.clf_train.epochs = clf_epochs;
      if (!train_data.empty())
        cfg.train_data = train_data;
      if (!test_data.empty())
        cfg.test_data = test_data;
      if (!ae_model.empty())
        cfg.autoencoder_model = ae_model;
      if (!clf_model.empty())
        cfg.classifier_model = clf_model;
      cfg.impute = to_impute_config(bench_search);

      const auto report = dga::run_sweep(cfg);
      const fs::path dir = bench_out;
      dga::write_sweep_outputs(report, dir);
      json inputs = json::array();
      for (const auto *p : {&train_data, &test_data, &ae_model, &clf_model})
        if (!p->empty())
          inputs.push_back(*p);
      write_manifest(dir / "manifest.json", "bench", bench, args, inputs,
                     {(dir / "sweep_report.csv").string(), (dir / "trials.csv").string(),
                      (dir / "timing.csv").string(), (dir / "table.txt").string()},
                     {{"seed", bench_seed}}, elapsed());
      dga::render_table(report, std::cout);
      return 0;
    }
  } catch (const dga::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
