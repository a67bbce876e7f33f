#include "probemb/oracles.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "probemb/directional.hpp"
#include "probemb/special.hpp"
#include "probemb/types.hpp"

namespace probemb {

double vmf3_log_normalizer_exact(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw DomainError("vmf3_log_normalizer_exact: kappa must be positive and finite");
  }
  // ln sinh κ = κ + ln(1 - e^{-2κ}) - ln 2, stable for large κ.
  const double log_sinh = kappa + std::log1p(-std::exp(-2.0 * kappa)) - std::numbers::ln2;
  return std::log(kappa) - std::log(4.0 * std::numbers::pi) - log_sinh;
}

double bessel_ratio_series(int d, double kappa) {
  if (d < 2) {
    throw DomainError("bessel_ratio_series: dimension must be >= 2");
  }
  const double v = 0.5 * d;
  return bessel_i_series(v, kappa) / bessel_i_series(v - 1.0, kappa);
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) {
    throw DomainError("gauss_legendre: need at least one node");
  }
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pn1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pn1) / (x * x - 1.0);
      const double step = pn / dp;
      x -= step;
      if (std::abs(step) < 1e-16) {
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

double ps_density_integral_s2(double kappa, int nodes) {
  const QuadratureRule rule = gauss_legendre(nodes);
  const double log_c = ps_log_normalizer(3, kappa);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double t = rule.nodes[i];
    sum += rule.weights[i] * std::exp(kappa * std::log1p(t) + log_c);
  }
  return 2.0 * std::numbers::pi * sum;
}

double vmf3_offset_stddev(const std::vector<double>& kappas) {
  if (kappas.size() < 2) {
    throw DomainError("vmf3_offset_stddev: need at least two kappas");
  }
  std::vector<double> off;
  for (double k : kappas) {
    off.push_back(vmf_log_normalizer_approx(3, k) - vmf3_log_normalizer_exact(k));
  }
  const double mean = std::accumulate(off.begin(), off.end(), 0.0) / off.size();
  double ss = 0.0;
  for (double o : off) ss += (o - mean) * (o - mean);
  return std::sqrt(ss / (off.size() - 1));
}

double vmf_derivative_relative_error(int d, double kappa) {
  const double h = 1e-4 * kappa;
  const double fd =
      (vmf_log_normalizer_approx(d, kappa + h) - vmf_log_normalizer_approx(d, kappa - h)) /
      (2.0 * h);
  const double ratio = bessel_ratio_series(d, kappa);
  return std::abs(fd + ratio) / std::abs(ratio);
}

}  // namespace probemb
