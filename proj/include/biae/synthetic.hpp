#pragma once

#include <cstdint>
#include <vector>

#include "biae/corpus.hpp"

namespace biae {

// Rule-world generator: each document grants one benefit under a list of
// conditions; user facts arrive as scenario sentences or answered follow-up
// turns, and the gold decision follows from them.
struct SyntheticConfig {
  int instances = 100;
  std::uint64_t seed = 1;
  int min_conditions = 1;
  int max_conditions = 3;
  // Relative class weights for IRRELEVANT, YES, NO, MORE.
  double class_weights[4] = {1.0, 1.0, 1.0, 1.0};
};

std::vector<DialogueInstance> synthetic_dataset(const SyntheticConfig& config);

}  // namespace biae
