#pragma once

#include <stdexcept>
#include <string>

namespace fcnet {

// Error taxonomy mirrors the CLI exit codes: input/format problems are
// recoverable operator mistakes, numerical failures are diverged runs,
// constraint errors mean the checkpoint gate never accepted an epoch.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConstraintError : public std::runtime_error {
 public:
  explicit ConstraintError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fcnet
