#pragma once

#include <stdexcept>
#include <string>

namespace oad {

// Raised when a score batch cannot support a density computation, e.g. all
// scores identical (zero-width grid) or a side with zero sample variance.
// The training loop treats this as a skippable batch, not a fatal error.
class degenerate_batch_error : public std::runtime_error {
 public:
  explicit degenerate_batch_error(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace oad
