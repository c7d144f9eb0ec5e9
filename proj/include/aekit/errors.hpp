#pragma once

#include <stdexcept>

namespace aekit {

// Malformed user input: files, schemas, claim documents, token ids.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A prediction backend failed or returned an inconsistent reply.
struct PredictorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace aekit
