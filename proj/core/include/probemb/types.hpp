#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace probemb {

// Row-major so that a batch row (one embedding) is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Raised when an argument violates a documented precondition
/// (negative concentration, dimension mismatch, bad configuration).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a file cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a file exists but its contents are malformed.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

/// Raised when training produces non-finite parameters.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Distribution family produced by an adapter.
enum class Family { vmf, ps, gauss, deterministic };

/// Which modality carries the adapter.
enum class Variant { asym_text, asym_image, symmetric };

std::string to_string(Family f);
std::string to_string(Variant v);
Family family_from_string(const std::string& s);
Variant variant_from_string(const std::string& s);

}  // namespace probemb
