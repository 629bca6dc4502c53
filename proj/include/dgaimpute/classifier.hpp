#pragma once

#include "dgaimpute/core_data.hpp"
#include "dgaimpute/mlp.hpp"

#include <filesystem>

namespace dga {

inline constexpr std::size_t kDefaultClassifierHidden = 31;

// Score above `threshold` (strictly) means Unusable.
struct ClassifierModel {
  Network net;
  NormStats stats;
  double threshold = 0.5;
};

struct ClassifierTraining {
  ClassifierModel model;
  std::vector<double> loss_trace;
};

/// 10 -> hidden (TanhC) -> 1 (Sigmoid) on normalised inputs, targets
/// Acceptable = 0 and Unusable = 1.
ClassifierTraining train_classifier(const Dataset &dataset, const TrainConfig &cfg = {},
                                    std::size_t hidden = kDefaultClassifierHidden);

struct Classification {
  Label label = Label::Acceptable;
  double score = 0.0;
};

Classification classify(const ClassifierModel &model, const GasRecord &record);

double evaluate_accuracy(const ClassifierModel &model, const Dataset &labeled);

void save_classifier(const ClassifierModel &model, const std::filesystem::path &path);
ClassifierModel load_classifier(const std::filesystem::path &path);

} // namespace dga
