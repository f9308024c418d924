#pragma once

#include <stdexcept>
#include <string>

namespace lossgate {

// Runtime failure inside the engine (bad data, diverged model, misuse of a
// state object). The CLI maps this to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: unreadable config, unknown key, invalid flag value,
// missing dataset. The CLI maps this to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace lossgate
