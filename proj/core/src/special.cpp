#include "probemb/special.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "probemb/types.hpp"

namespace probemb {
namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

// Reflection-free branch: callers guarantee x >= 0.5.
double lanczos_log_gamma(double x) {
  const double z = x - 1.0;
  double series = kLanczos[0];
  for (std::size_t k = 1; k < kLanczos.size(); ++k) {
    series += kLanczos[k] / (z + static_cast<double>(k));
  }
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(series);
}

double lanczos_digamma(double x) {
  const double z = x - 1.0;
  double series = kLanczos[0];
  double dseries = 0.0;
  for (std::size_t k = 1; k < kLanczos.size(); ++k) {
    const double denom = z + static_cast<double>(k);
    series += kLanczos[k] / denom;
    dseries -= kLanczos[k] / (denom * denom);
  }
  const double t = z + kLanczosG + 0.5;
  return std::log(t) + (z + 0.5) / t - 1.0 + dseries / series;
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("log_gamma: argument must be positive and finite, got " +
                      std::to_string(x));
  }
  if (x < 0.5) {
    // Γ(x) = Γ(x + 1) / x keeps the Lanczos branch in its accurate range.
    return lanczos_log_gamma(x + 1.0) - std::log(x);
  }
  return lanczos_log_gamma(x);
}

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("digamma: argument must be positive and finite, got " +
                      std::to_string(x));
  }
  if (x < 0.5) {
    return lanczos_digamma(x + 1.0) - 1.0 / x;
  }
  return lanczos_digamma(x);
}

double bessel_i_series(double order, double z) {
  if (!(order >= 0.0) || !std::isfinite(order)) {
    throw DomainError("bessel_i_series: order must be nonnegative");
  }
  if (!(z >= 0.0 && z <= 60.0)) {
    throw DomainError("bessel_i_series: z must lie in [0, 60], got " + std::to_string(z));
  }
  if (z == 0.0) {
    return order == 0.0 ? 1.0 : 0.0;
  }
  const double half = 0.5 * z;
  // First term (z/2)^v / Γ(v+1) in log space, then the ratio recurrence
  // t_{k+1} = t_k (z/2)^2 / ((k+1)(k+v+1)).
  double term = std::exp(order * std::log(half) - log_gamma(order + 1.0));
  double sum = term;
  const double q = half * half;
  for (int k = 0; k < 10000; ++k) {
    term *= q / ((k + 1.0) * (k + 1.0 + order));
    sum += term;
    if (term < 1e-18 * sum) {
      break;
    }
  }
  return sum;
}

double sphere_log_surface_area(int d) {
  if (d < 2) {
    throw DomainError("sphere_log_surface_area: dimension must be >= 2");
  }
  const double half = 0.5 * d;
  return std::log(2.0) + half * std::log(std::numbers::pi) - log_gamma(half);
}

}  // namespace probemb
