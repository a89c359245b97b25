#include "gel/dataset.hpp"

#include <utility>

#include "gel/errors.hpp"

namespace gel {

Dataset::Dataset(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 2) {
    throw ConfigError("Dataset: need at least 2 rows, got " +
                      std::to_string(values_.rows()));
  }
  if (values_.cols() < 1) {
    throw ConfigError("Dataset: need at least 1 column");
  }
  if (!values_.allFinite()) {
    throw ConfigError("Dataset: non-finite entry in data matrix");
  }
}

}  // namespace gel
