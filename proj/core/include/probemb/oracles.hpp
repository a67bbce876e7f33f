#pragma once

#include <vector>

namespace probemb {

/// Independent reference computations for the directional module. They
/// never run on the training path.

/// ln(κ / (4π sinh κ)), the exact vMF log-normalizer on S², κ > 0.
double vmf3_log_normalizer_exact(double kappa);

/// I_{d/2}(κ) / I_{d/2-1}(κ) from the power series, κ in (0, 60].
double bessel_ratio_series(int d, double kappa);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

/// ∫_{S²} exp(ps_log_pdf) dA, reduced to the polar integral
/// 2π ∫_{-1}^{1} C (1+t)^κ dt and evaluated with Gauss-Legendre.
double ps_density_integral_s2(double kappa, int nodes = 64);

/// Sample standard deviation of F_3(κ) - ln(κ/(4π sinh κ)) over `kappas`.
double vmf3_offset_stddev(const std::vector<double>& kappas);

/// Central difference (step 1e-4·κ) of F_d compared with the series
/// ratio: |FD + ratio| / ratio.
double vmf_derivative_relative_error(int d, double kappa);

}  // namespace probemb
