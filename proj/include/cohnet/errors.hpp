#pragma once

#include <stdexcept>
#include <string>

namespace cohnet {

// Data/validation problems: bad manifests, malformed rows, contract
// violations (single-class folds, Nyquist violations, ...). CLI exit 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem / I/O failures. CLI exit 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cohnet
