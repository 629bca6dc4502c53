#include <doctest.h>

#include "dgaimpute/classifier.hpp"
#include "dgaimpute/error.hpp"
#include "support.hpp"

#include <fstream>
#include <sstream>

using namespace dga;
using dga::testing::TempDir;

namespace {

struct Split {
  Dataset train, test;
};

// 2000 generated records split 80/20.
const Split &split() {
  static const Split s = [] {
    const auto all = dga::testing::desk_test_set(2000, 900);
    Split out;
    for (std::size_t i = 0; i < all.size(); ++i)
      (i < 1600 ? out.train : out.test).records.push_back(all.records[i]);
    return out;
  }();
  return s;
}

const ClassifierModel &trained() {
  static const ClassifierModel m = [] {
    TrainConfig cfg;
    cfg.epochs = 1500;
    cfg.seed = 12;
    return train_classifier(split().train, cfg).model;
  }();
  return m;
}

Errc code_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected dga::Error");
  return Errc::IoError;
}

Label flip(Label l) { return l == Label::Acceptable ? Label::Unusable : Label::Acceptable; }

} // namespace

TEST_CASE("zero-weight classifier scores exactly one half and says Acceptable") {
  ClassifierModel m;
  m.net = Network({{10, 31, Activation::tanh_c()}, {31, 1, Activation::sigmoid()}});
  m.stats = fit_normalizer(split().test);
  const auto c = classify(m, split().test.records[0]);
  CHECK(c.score == 0.5);
  CHECK(c.label == Label::Acceptable);
}

TEST_CASE("train_classifier: zero epochs returns the seeded initialisation") {
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 4;
  const auto t = train_classifier(split().test, cfg);
  CHECK(t.loss_trace.empty());
  CHECK(t.model.net == Network::random({{10, 31, Activation::tanh_c()}, {31, 1, Activation::sigmoid()}}, 4));
  CHECK(t.model.threshold == 0.5);
}

TEST_CASE("train_classifier: input errors") {
  TrainConfig cfg;
  cfg.epochs = 1;
  auto ds = split().test;
  ds.records[3].mask[0] = true;
  CHECK(code_of([&] { train_classifier(ds, cfg); }) == Errc::IncompleteTrainingData);
  ds = split().test;
  ds.records[3].label.reset();
  CHECK(code_of([&] { train_classifier(ds, cfg); }) == Errc::SingleClassData);
  ds = split().test;
  for (auto &r : ds.records)
    r.label = Label::Acceptable;
  CHECK(code_of([&] { train_classifier(ds, cfg); }) == Errc::SingleClassData);
}

TEST_CASE("held-out accuracy on rule-labelled data") {
  const double acc = evaluate_accuracy(trained(), split().test);
  MESSAGE("held-out accuracy " << acc);
  CHECK(acc >= 0.95);
  CHECK(evaluate_accuracy(trained(), split().train) >= 0.95);
}

TEST_CASE("accuracy matches a confusion-matrix recount") {
  const auto &m = trained();
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (const auto &r : split().test.records) {
    const auto &layer = m.net;
    const auto x = normalize(r, m.stats).values;
    const double score = forward(layer, x)[0];
    const bool predicted_bad = score > 0.5;
    const bool truly_bad = *r.label == Label::Unusable;
    tp += predicted_bad && truly_bad;
    tn += !predicted_bad && !truly_bad;
    fp += predicted_bad && !truly_bad;
    fn += !predicted_bad && truly_bad;
  }
  const double recount = static_cast<double>(tp + tn) / static_cast<double>(tp + tn + fp + fn);
  CHECK(evaluate_accuracy(m, split().test) == doctest::Approx(recount).epsilon(1e-15));
}

TEST_CASE("flipped labels give the complementary accuracy") {
  auto flipped = split().test;
  for (auto &r : flipped.records)
    r.label = flip(*r.label);
  CHECK(evaluate_accuracy(trained(), flipped) ==
        doctest::Approx(1.0 - evaluate_accuracy(trained(), split().test)).epsilon(1e-12));
}

TEST_CASE("evaluate_accuracy: permutation invariance, range and errors") {
  auto ds = split().test;
  const double a = evaluate_accuracy(trained(), ds);
  CHECK(a >= 0.0);
  CHECK(a <= 1.0);
  std::reverse(ds.records.begin(), ds.records.end());
  CHECK(evaluate_accuracy(trained(), ds) == a);

  for (const auto &r : split().test.records) {
    if (classify(trained(), r).label == *r.label) {
      Dataset one;
      one.records.push_back(r);
      CHECK(evaluate_accuracy(trained(), one) == 1.0);
      break;
    }
  }
  CHECK(code_of([] { evaluate_accuracy(trained(), Dataset{}); }) == Errc::EmptyBatch);
  ds.records[0].label.reset();
  CHECK_THROWS_AS(evaluate_accuracy(trained(), ds), Error);
}

TEST_CASE("classify: score range, incomplete records, statelessness") {
  const auto &m = trained();
  for (const auto &r : split().test.records) {
    const auto a = classify(m, r);
    CHECK(a.score > 0.0);
    CHECK(a.score < 1.0);
    CHECK(a.label == (a.score > 0.5 ? Label::Unusable : Label::Acceptable));
    const auto b = classify(m, r);
    CHECK(a.score == b.score);
  }
  auto r = split().test.records[0];
  r.mask[2] = true;
  CHECK(code_of([&] { classify(m, r); }) == Errc::IncompleteRecord);
}

TEST_CASE("save/load classifier and seeded determinism") {
  TempDir tmp("clf");
  save_classifier(trained(), tmp.path / "c.model");
  const auto back = load_classifier(tmp.path / "c.model");
  CHECK(back.net == trained().net);
  CHECK(back.threshold == trained().threshold);
  for (const auto &r : split().test.records)
    CHECK(classify(back, r).score == classify(trained(), r).score);

  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 3;
  save_classifier(train_classifier(split().test, cfg).model, tmp.path / "a.model");
  save_classifier(train_classifier(split().test, cfg).model, tmp.path / "b.model");
  std::stringstream sa, sb;
  sa << std::ifstream(tmp.path / "a.model").rdbuf();
  sb << std::ifstream(tmp.path / "b.model").rdbuf();
  CHECK(sa.str() == sb.str());
}
