#pragma once

#include "dgaimpute/autoenc.hpp"
#include "dgaimpute/rng.hpp"
#include "dgaimpute/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unistd.h>
#include <vector>

namespace dga::testing {

// Replays a fixed list of U[0,1) values; throws when exhausted.
class ScriptedSource final : public UniformSource {
public:
  explicit ScriptedSource(std::vector<double> values) : values_(std::move(values)) {}
  double uniform() override {
    if (next_ >= values_.size())
      throw std::logic_error("scripted source exhausted");
    return values_[next_++];
  }
  std::size_t consumed() const { return next_; }

private:
  std::vector<double> values_;
  std::size_t next_ = 0;
};

inline bool rel_close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

// Desk-scale autoencoder on default generator data, trained once per binary.
inline const AutoencoderModel &desk_autoencoder() {
  static const AutoencoderModel model = [] {
    GenConfig g;
    g.n_records = 500;
    g.seed = 101;
    TrainConfig tc;
    tc.epochs = 1500;
    tc.seed = 5;
    tc.target_error = 1e-6;
    return train_autoencoder(generate(g), 7, tc).model;
  }();
  return model;
}

inline Dataset desk_test_set(std::size_t n, std::uint64_t seed) {
  GenConfig g;
  g.n_records = n;
  g.seed = seed;
  return generate(g);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string &tag) {
    path = std::filesystem::temp_directory_path() /
           ("dga_" + tag + "_" + std::to_string(std::rand()) + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

} // namespace dga::testing
