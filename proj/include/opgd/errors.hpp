#pragma once

#include <stdexcept>
#include <string>

namespace opgd {

/// Base of all library errors. The CLI maps each subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad option values or inconsistent arguments (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input: parse failures, non-finite entries, bad labels (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A class with too few observations to estimate its covariance.
class DegenerateClassError : public DataError {
 public:
  DegenerateClassError(int class_index, long count)
      : DataError("class " + std::to_string(class_index) + " has " + std::to_string(count) +
                  " observation(s); at least 2 are required"),
        class_index_(class_index) {}
  int class_index() const noexcept { return class_index_; }

 private:
  int class_index_;
};

/// Singular or non-finite numerics that cannot be recovered (exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Total covariance is (numerically) singular.
class CollinearityError : public NumericalError {
 public:
  explicit CollinearityError(const std::string& what)
      : NumericalError(what + "; the data are collinear, consider the PCA pre-filter "
                              "(--pca-threshold)") {}
};

}  // namespace opgd
