#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace biae {

// A named, flat view of one trainable array and its gradient accumulator.
// Optimizers and gradient checks work on these without knowing the owner.
struct ParamSlot {
  std::string name;
  double* value = nullptr;
  double* grad = nullptr;
  std::size_t size = 0;
};

}  // namespace biae
