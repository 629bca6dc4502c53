#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dga {

enum class Errc {
  DegenerateVariable,
  ParseError,
  SchemaError,
  InvalidConfig,
  IncompleteRecord,
  InvalidK,
  DimensionMismatch,
  EmptyBatch,
  NonFiniteLoss,
  IncompleteTrainingData,
  AllMissing,
  NoValidPairs,
  EmptyPopulation,
  BudgetZero,
  ModelMismatch,
  TooManyMissing,
  SingleClassData,
  MissingModel,
  MissingOptimizer,
  IoError,
};

std::string_view errc_name(Errc code);

// Every failure raised by the library carries one of the codes above so callers
// (and the CLI) can branch on the kind without parsing the message.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string &what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

} // namespace dga
