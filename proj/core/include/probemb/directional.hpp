#pragma once

#include <random>
#include <variant>

#include "probemb/types.hpp"

namespace probemb {

/// A point on the unit hypersphere S^{d-1}, d >= 2.
class UnitVector {
 public:
  /// Takes ownership of `values`, which must already have unit norm
  /// within 1e-9.
  static UnitVector from_unit(Vector values);
  /// Projects a nonzero vector onto the sphere.
  static UnitVector normalized(const Vector& values);

  const Vector& values() const { return values_; }
  int dim() const { return static_cast<int>(values_.size()); }
  double dot(const UnitVector& other) const;

 private:
  explicit UnitVector(Vector v) : values_(std::move(v)) {}
  Vector values_;
};

struct VmfParams {
  UnitVector mu;
  double kappa;
};

struct PsParams {
  UnitVector mu;
  double kappa;
};

/// Diagonal Gaussian in the ambient space.
struct GaussParams {
  Vector mean;
  Vector log_var;
};

/// Per-text parameters; UnitVector stands for a deterministic embedding.
using Distribution = std::variant<VmfParams, PsParams, GaussParams, UnitVector>;

void validate(const VmfParams& p);
void validate(const PsParams& p);
void validate(const GaussParams& p);

/// The four-term approximation F_d(κ) of ln C_d(κ), the vMF log-normalizer.
///
/// F_d(κ) differs from ln C_d(κ) by an unknown additive term that depends
/// on d and drifts slowly with κ. Every use in this library either
/// compares rows that share d (the constant cancels in a softmax) or
/// ranks candidates for one query, so F_d is used as the normalizer
/// directly and vmf_log_pdf is a log-density only up to that term.
double vmf_log_normalizer_approx(int d, double kappa);

/// dF_d/dκ = -(g(κ) + h(κ)) / 2, the averaged Ruiz bounds on
/// I_{d/2}(κ)/I_{d/2-1}(κ). Exact derivative of vmf_log_normalizer_approx.
double vmf_log_normalizer_approx_deriv(int d, double kappa);

/// Lower and upper Ruiz bounds for I_v(z)/I_{v-1}(z), v >= 1/2.
struct BesselRatioBounds {
  double lower;
  double upper;
};
BesselRatioBounds bessel_ratio_bounds(double v, double z);

double vmf_log_pdf(const VmfParams& params, const UnitVector& x);

/// Exact PS log-normalizer ln C_d(κ).
double ps_log_normalizer(int d, double kappa);
/// d/dκ ln C_d(κ) = -ln 2 - ψ((d-1)/2 + κ) + ψ(d-1+κ).
double ps_log_normalizer_deriv(int d, double kappa);

/// Lower clamp applied to 1 + μᵀx before the logarithm.
inline constexpr double kPsCosineFloor = 1e-12;

double ps_log_pdf(const PsParams& params, const UnitVector& x);

double gauss_log_pdf(const GaussParams& params, const Vector& x);

/// Log-density of `x` under any distribution (cosine for UnitVector).
double log_pdf(const Distribution& dist, const UnitVector& x);

/// Draws from vMF(μ, κ) with Wood's rejection sampler.
UnitVector sample_vmf(const VmfParams& params, std::mt19937_64& rng);

/// Uniform draw on S^{d-1}.
UnitVector sample_uniform_sphere(int d, std::mt19937_64& rng);

}  // namespace probemb
