#include "probemb/directional.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "probemb/special.hpp"

namespace probemb {
namespace {

void check_dim(int d, const char* what) {
  if (d < 2) {
    throw DomainError(std::string(what) + ": dimension must be >= 2, got " + std::to_string(d));
  }
}

void check_kappa(double kappa, const char* what) {
  if (!std::isfinite(kappa) || kappa < 0.0) {
    throw DomainError(std::string(what) + ": kappa must be finite and >= 0, got " +
                      std::to_string(kappa));
  }
}

void check_same_dim(int a, int b, const char* what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                      " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

UnitVector UnitVector::from_unit(Vector values) {
  if (values.size() < 2) {
    throw DomainError("UnitVector: dimension must be >= 2");
  }
  const double n = values.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9) {
    throw DomainError("UnitVector: norm must be 1 within 1e-9, got " + std::to_string(n));
  }
  return UnitVector(std::move(values));
}

UnitVector UnitVector::normalized(const Vector& values) {
  if (values.size() < 2) {
    throw DomainError("UnitVector: dimension must be >= 2");
  }
  const double n = values.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DomainError("UnitVector: cannot normalize a zero or non-finite vector");
  }
  return UnitVector(values / n);
}

double UnitVector::dot(const UnitVector& other) const {
  check_same_dim(dim(), other.dim(), "UnitVector::dot");
  return values_.dot(other.values_);
}

void validate(const VmfParams& p) { check_kappa(p.kappa, "VmfParams"); }
void validate(const PsParams& p) { check_kappa(p.kappa, "PsParams"); }
void validate(const GaussParams& p) {
  check_same_dim(static_cast<int>(p.mean.size()), static_cast<int>(p.log_var.size()),
                 "GaussParams");
  if (!p.log_var.allFinite()) {
    throw DomainError("GaussParams: log_var must be finite");
  }
}

double vmf_log_normalizer_approx(int d, double kappa) {
  check_dim(d, "vmf_log_normalizer_approx");
  check_kappa(kappa, "vmf_log_normalizer_approx");
  const double a = 0.5 * (d - 1);
  const double b = 0.5 * (d + 1);
  const double k2 = kappa * kappa;
  const double sa = std::sqrt(a * a + k2);
  const double sb = std::sqrt(b * b + k2);
  return 0.5 * a * std::log(a + sa) - 0.5 * sa + 0.5 * a * std::log(a + sb) - 0.5 * sb;
}

BesselRatioBounds bessel_ratio_bounds(double v, double z) {
  if (v < 0.5) {
    throw DomainError("bessel_ratio_bounds: order must be >= 1/2");
  }
  const double lo = z / (v - 0.5 + std::sqrt((v + 0.5) * (v + 0.5) + z * z));
  const double hi = z / (v - 0.5 + std::sqrt((v - 0.5) * (v - 0.5) + z * z));
  return {lo, hi};
}

double vmf_log_normalizer_approx_deriv(int d, double kappa) {
  check_dim(d, "vmf_log_normalizer_approx_deriv");
  check_kappa(kappa, "vmf_log_normalizer_approx_deriv");
  const auto [g, h] = bessel_ratio_bounds(0.5 * d, kappa);
  return -0.5 * (g + h);
}

double vmf_log_pdf(const VmfParams& params, const UnitVector& x) {
  validate(params);
  check_same_dim(params.mu.dim(), x.dim(), "vmf_log_pdf");
  return params.kappa * params.mu.dot(x) + vmf_log_normalizer_approx(x.dim(), params.kappa);
}

double ps_log_normalizer(int d, double kappa) {
  check_dim(d, "ps_log_normalizer");
  check_kappa(kappa, "ps_log_normalizer");
  const double beta = 0.5 * (d - 1);
  const double alpha = beta + kappa;
  return -(alpha + beta) * std::numbers::ln2 - beta * std::log(std::numbers::pi) -
         log_gamma(alpha) + log_gamma(alpha + beta);
}

double ps_log_normalizer_deriv(int d, double kappa) {
  check_dim(d, "ps_log_normalizer_deriv");
  check_kappa(kappa, "ps_log_normalizer_deriv");
  const double beta = 0.5 * (d - 1);
  const double alpha = beta + kappa;
  return -std::numbers::ln2 - digamma(alpha) + digamma(alpha + beta);
}

double ps_log_pdf(const PsParams& params, const UnitVector& x) {
  validate(params);
  check_same_dim(params.mu.dim(), x.dim(), "ps_log_pdf");
  const double base = std::max(1.0 + params.mu.dot(x), kPsCosineFloor);
  // κ = 0 is the uniform case; avoid 0 * log(tiny).
  const double body = params.kappa == 0.0 ? 0.0 : params.kappa * std::log(base);
  return body + ps_log_normalizer(x.dim(), params.kappa);
}

double gauss_log_pdf(const GaussParams& params, const Vector& x) {
  validate(params);
  check_same_dim(static_cast<int>(params.mean.size()), static_cast<int>(x.size()),
                 "gauss_log_pdf");
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double r = x[j] - params.mean[j];
    total += -r * r / (2.0 * std::exp(params.log_var[j])) - 0.5 * (params.log_var[j] + log2pi);
  }
  return total;
}

double log_pdf(const Distribution& dist, const UnitVector& x) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, VmfParams>) {
          return vmf_log_pdf(p, x);
        } else if constexpr (std::is_same_v<T, PsParams>) {
          return ps_log_pdf(p, x);
        } else if constexpr (std::is_same_v<T, GaussParams>) {
          return gauss_log_pdf(p, x.values());
        } else {
          return p.dot(x);
        }
      },
      dist);
}

UnitVector sample_uniform_sphere(int d, std::mt19937_64& rng) {
  check_dim(d, "sample_uniform_sphere");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  double n = 0.0;
  do {
    for (int j = 0; j < d; ++j) {
      v[j] = normal(rng);
    }
    n = v.norm();
  } while (n < 1e-12);
  return UnitVector::from_unit(v / n);
}

UnitVector sample_vmf(const VmfParams& params, std::mt19937_64& rng) {
  validate(params);
  const int d = params.mu.dim();
  const double kappa = params.kappa;
  const double dm1 = d - 1.0;

  // Wood (1994): sample w = μᵀx by rejection from a scaled beta envelope.
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);

  std::gamma_distribution<double> gamma(0.5 * dm1, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double w = 0.0;
  for (;;) {
    const double g1 = gamma(rng);
    const double g2 = gamma(rng);
    const double z = g1 / (g1 + g2);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = uniform(rng);
    if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) {
      break;
    }
  }

  // Tangent direction: a Gaussian draw projected off μ.
  const Vector& mu = params.mu.values();
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  double vn = 0.0;
  do {
    for (int j = 0; j < d; ++j) {
      v[j] = normal(rng);
    }
    v -= v.dot(mu) * mu;
    vn = v.norm();
  } while (vn < 1e-12);
  v /= vn;

  Vector x = w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
  return UnitVector::from_unit(x / x.norm());
}

}  // namespace probemb
