#include "dgaimpute/classifier.hpp"

#include "dgaimpute/autoenc.hpp"
#include "dgaimpute/error.hpp"

#include <fstream>

namespace dga {

ClassifierTraining train_classifier(const Dataset &dataset, const TrainConfig &cfg,
                                    std::size_t hidden) {
  if (dataset.empty())
    throw Error(Errc::IncompleteTrainingData, "classifier training set is empty");
  bool seen[2] = {false, false};
  for (const auto &r : dataset.records) {
    if (!r.complete())
      throw Error(Errc::IncompleteTrainingData, "record " + r.id + " has missing values");
    if (!r.label)
      throw Error(Errc::SingleClassData, "record " + r.id + " has no label");
    seen[*r.label == Label::Unusable ? 1 : 0] = true;
  }
  if (!seen[0] || !seen[1])
    throw Error(Errc::SingleClassData, "training data must contain both classes");
  if (hidden == 0)
    throw Error(Errc::InvalidConfig, "classifier needs at least one hidden unit");

  const NormStats stats = fit_normalizer(dataset);
  std::vector<Pattern> batch;
  batch.reserve(dataset.size());
  for (const auto &r : dataset.records) {
    const auto n = normalize(r, stats);
    batch.push_back({{n.values.begin(), n.values.end()},
                     {*r.label == Label::Unusable ? 1.0 : 0.0}});
  }
  Network net = Network::random(
      {{kNumVars, hidden, Activation::tanh_c()}, {hidden, 1, Activation::sigmoid()}}, cfg.seed);
  auto result = train(net, batch, cfg);
  return {{std::move(result.net), stats, 0.5}, std::move(result.loss_trace)};
}

Classification classify(const ClassifierModel &model, const GasRecord &record) {
  if (!record.complete())
    throw Error(Errc::IncompleteRecord, "record " + record.id + " has missing values");
  const auto n = normalize(record, model.stats);
  const double score = forward(model.net, n.values)[0];
  return {score > model.threshold ? Label::Unusable : Label::Acceptable, score};
}

double evaluate_accuracy(const ClassifierModel &model, const Dataset &labeled) {
  if (labeled.empty())
    throw Error(Errc::EmptyBatch, "accuracy of an empty dataset");
  std::size_t correct = 0;
  for (const auto &r : labeled.records) {
    if (!r.label)
      throw Error(Errc::InvalidConfig, "record " + r.id + " has no label");
    correct += classify(model, r).label == *r.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(labeled.size());
}

void save_classifier(const ClassifierModel &model, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(Errc::IoError, "cannot write " + path.string());
  write_network(out, model.net);
  write_stats(out, model.stats);
  out << "threshold " << format_double(model.threshold) << '\n';
}

ClassifierModel load_classifier(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::IoError, "cannot open " + path.string());
  ClassifierModel m;
  m.net = read_network(in);
  m.stats = read_stats(in);
  std::string tag, value;
  if (in >> tag >> value) {
    if (tag != "threshold")
      throw Error(Errc::ParseError, "unexpected section '" + tag + "'");
    m.threshold = parse_double(value);
  }
  if (m.net.input_size() != kNumVars || m.net.output_size() != 1)
    throw Error(Errc::ModelMismatch, path.string() + " is not a 10-input, 1-output classifier");
  if (!(m.threshold > 0.0 && m.threshold < 1.0))
    throw Error(Errc::ParseError, "classifier threshold must be in (0, 1)");
  return m;
}

} // namespace dga
