#pragma once

#include <stdexcept>
#include <string>

namespace dtc {

/// Invalid configuration or parameter combination (CLI exit code 2).
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Problem size exceeds a hard cap (enumeration would be intractable).
class size_error : public config_error {
 public:
  explicit size_error(const std::string& what) : config_error(what) {}
};

/// Missing or inconsistent sector/eigenpair labels.
class labeling_error : public std::runtime_error {
 public:
  explicit labeling_error(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical contract was violated: non-unitary input, norm drift,
/// branch ambiguity in a matrix logarithm, tangent pole (CLI exit code 3).
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Too few levels / samples for the requested statistic.
class insufficient_data_error : public std::runtime_error {
 public:
  explicit insufficient_data_error(const std::string& what)
      : std::runtime_error(what) {}
};

/// Non-degenerate series requested for a clustered target quasi-energy.
class degenerate_target_error : public std::runtime_error {
 public:
  explicit degenerate_target_error(const std::string& what)
      : std::runtime_error(what) {}
};

/// Fixed-point iteration in the degenerate solver did not converge.
class nonconvergence_error : public std::runtime_error {
 public:
  nonconvergence_error(const std::string& what, double last_iterate)
      : std::runtime_error(what), last_iterate(last_iterate) {}
  double last_iterate;
};

}  // namespace dtc
