#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <fmt/format.h>

#include "cli.hpp"
#include "probemb/directional.hpp"
#include "probemb/oracles.hpp"
#include "probemb/special.hpp"

namespace probemb::cli {
namespace {

class Checker {
 public:
  explicit Checker(std::ostream& out) : out_(out) {}

  void check(const std::string& name, bool ok, const std::string& detail = {}) {
    out_ << (ok ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) out_ << "  (" << detail << ")";
    out_ << "\n";
    all_ok_ = all_ok_ && ok;
  }

  void info(const std::string& name, const std::string& detail) {
    out_ << "INFO " << name << "  (" << detail << ")\n";
  }

  bool all_ok() const { return all_ok_; }

 private:
  std::ostream& out_;
  bool all_ok_ = true;
};

bool close_rel(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

}  // namespace

bool run_selftest(std::ostream& out) {
  Checker c(out);

  struct Ref {
    double x, value;
  };
  bool lg_ok = true;
  for (const Ref& r : {Ref{1.0, 0.0}, Ref{0.5, 0.5723649429247001}, Ref{5.0, 3.1780538303479456},
                       Ref{10.5, 13.940625219403764}, Ref{100.25, 360.28455963776423},
                       Ref{1e6, 12815504.569147612}}) {
    lg_ok = lg_ok && close_rel(log_gamma(r.x), r.value, 1e-12);
  }
  c.check("log_gamma reference values", lg_ok);

  bool dg_ok = true;
  for (const Ref& r : {Ref{1.0, -0.5772156649015329}, Ref{0.5, -1.9635100260214235},
                       Ref{10.0, 2.251752589066721}}) {
    dg_ok = dg_ok && close_rel(digamma(r.x), r.value, 1e-10);
  }
  c.check("digamma reference values", dg_ok);

  c.check("bessel_i_series half-integer closed form",
          close_rel(bessel_i_series(0.5, 1.0),
                    std::sqrt(2.0 / std::numbers::pi) * std::sinh(1.0), 1e-12));

  c.check("sphere_log_surface_area d=2,3,4",
          close_rel(sphere_log_surface_area(2), std::log(2.0 * std::numbers::pi), 1e-12) &&
              close_rel(sphere_log_surface_area(3), std::log(4.0 * std::numbers::pi), 1e-12) &&
              close_rel(sphere_log_surface_area(4),
                        std::log(2.0 * std::numbers::pi * std::numbers::pi), 1e-12));

  c.check("F_3 at kappa=0 and kappa=2",
          close_rel(vmf_log_normalizer_approx(3, 0.0),
                    0.5 * std::log(2.0) + 0.5 * std::log(3.0) - 1.5, 1e-14) &&
              close_rel(vmf_log_normalizer_approx(3, 2.0), -1.2738410250864525, 1e-12));

  bool mono = true;
  for (int d : {3, 5, 11, 64}) {
    double prev = vmf_log_normalizer_approx(d, 0.0);
    for (double k = 0.01; k <= 1e4; k *= 1.1) {
      const double f = vmf_log_normalizer_approx(d, k);
      mono = mono && f < prev;
      prev = f;
    }
  }
  c.check("F_d strictly decreasing", mono);

  bool deriv = true;
  bool sandwich = true;
  double worst = 0.0;
  for (int d : {3, 5, 11}) {
    for (double k : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0}) {
      const double h = 1e-4 * k;
      const double fd =
          (vmf_log_normalizer_approx(d, k + h) - vmf_log_normalizer_approx(d, k - h)) / (2 * h);
      deriv = deriv && close_rel(fd, vmf_log_normalizer_approx_deriv(d, k), 1e-7);
      const auto [lo, hi] = bessel_ratio_bounds(0.5 * d, k);
      const double ratio = bessel_ratio_series(d, k);
      sandwich = sandwich && lo < ratio && ratio < hi;
      worst = std::max(worst, vmf_derivative_relative_error(d, k));
    }
  }
  c.check("dF_d/dkappa equals minus the averaged Ruiz bounds", deriv);
  c.check("Bessel ratio lies strictly inside the Ruiz bounds", sandwich);

  bool ps_closed = true;
  bool ps_int = true;
  for (double k : {0.0, 1.0, 5.0, 20.0}) {
    const double closed = std::log((k + 1.0) / (std::pow(2.0, k + 1.0) * 2.0 * std::numbers::pi));
    ps_closed = ps_closed && std::abs(ps_log_normalizer(3, k) - closed) <= 1e-10;
    ps_int = ps_int && std::abs(ps_density_integral_s2(k) - 1.0) <= 1e-6;
  }
  c.check("PS normalizer matches the d=3 closed form", ps_closed);
  c.check("PS density integrates to 1 on S^2", ps_int);

  std::mt19937_64 a(7), b(7);
  const VmfParams p{UnitVector::normalized(Vector::Ones(5)), 12.0};
  c.check("sample_vmf deterministic for a fixed seed",
          sample_vmf(p, a).values() == sample_vmf(p, b).values());

  // Accuracy of the approximation itself, reported rather than asserted.
  c.info("F_3 offset std over kappa in {0.1..100}",
         fmt::format("{:.4f}", vmf3_offset_stddev({0.1, 0.5, 1, 2, 5, 10, 50, 100})));
  c.info("max |FD(F_d) + Bessel ratio| / ratio, d in {3,5,11}", fmt::format("{:.4f}", worst));

  out << (c.all_ok() ? "selftest: all checks passed\n" : "selftest: FAILED\n");
  return c.all_ok();
}

}  // namespace probemb::cli
