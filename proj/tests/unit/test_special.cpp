#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "probemb/special.hpp"
#include "probemb/types.hpp"

namespace probemb {
namespace {

// |err| <= 1e-12 * max(1, |value|): relative away from the zeros at 1 and 2.
void expect_log_gamma(double x, double want) {
  EXPECT_NEAR(log_gamma(x), want, 1e-12 * std::max(1.0, std::abs(want))) << "x = " << x;
}

TEST(LogGamma, ReferenceValues) {
  expect_log_gamma(1.0, 0.0);
  expect_log_gamma(2.0, 0.0);
  expect_log_gamma(0.5, 0.5 * std::log(std::numbers::pi));
  expect_log_gamma(5.0, std::log(24.0));
  expect_log_gamma(10.5, 13.940625219403764);
  expect_log_gamma(100.25, 360.28455963776423);
  expect_log_gamma(1e6, 12815504.569147612);
}

TEST(LogGamma, MatchesStdLgammaOnGrid) {
  for (double x = 0.5; x < 1e6; x *= 1.37) {
    expect_log_gamma(x, std::lgamma(x));
  }
}

TEST(LogGamma, RecurrenceHolds) {
  for (double x : {0.7, 3.3, 17.5, 250.0}) {
    EXPECT_NEAR(log_gamma(x + 1.0) - log_gamma(x), std::log(x), 1e-11 * std::max(1.0, x));
  }
}

TEST(LogGamma, RejectsNonPositive) {
  EXPECT_THROW(log_gamma(0.0), DomainError);
  EXPECT_THROW(log_gamma(-1.5), DomainError);
  EXPECT_THROW(log_gamma(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST(Digamma, ReferenceValues) {
  EXPECT_NEAR(digamma(1.0), -0.5772156649015329, 1e-10);
  EXPECT_NEAR(digamma(0.5), -1.9635100260214235, 1e-10);
  EXPECT_NEAR(digamma(10.0), 2.251752589066721, 1e-10);
}

TEST(Digamma, IsDerivativeOfLogGamma) {
  for (double x : {0.6, 1.5, 7.25, 80.0, 3000.0}) {
    const double h = 1e-5 * x;
    const double fd = (log_gamma(x + h) - log_gamma(x - h)) / (2 * h);
    EXPECT_NEAR(digamma(x), fd, 1e-7 * std::max(1.0, std::abs(fd)));
  }
}

TEST(BesselSeries, ReferenceValues) {
  EXPECT_DOUBLE_EQ(bessel_i_series(0.0, 0.0), 1.0);
  EXPECT_NEAR(bessel_i_series(0.5, 1.0), std::sqrt(2.0 / std::numbers::pi) * std::sinh(1.0),
              1e-12);
  EXPECT_NEAR(bessel_i_series(1.0, 1.0), 0.5651591039924851, 1e-12);
}

TEST(BesselSeries, HalfIntegerClosedFormAtLargeArgument) {
  // I_{1/2}(z) = sqrt(2/(πz)) sinh z.
  for (double z : {5.0, 20.0, 60.0}) {
    const double want = std::sqrt(2.0 / (std::numbers::pi * z)) * std::sinh(z);
    EXPECT_NEAR(bessel_i_series(0.5, z) / want, 1.0, 1e-10) << "z = " << z;
  }
}

TEST(BesselSeries, RejectsOutOfRange) {
  EXPECT_THROW(bessel_i_series(0.0, 61.0), DomainError);
  EXPECT_THROW(bessel_i_series(0.0, -1.0), DomainError);
  EXPECT_THROW(bessel_i_series(-0.5, 1.0), DomainError);
}

TEST(SphereArea, ClosedForms) {
  EXPECT_NEAR(sphere_log_surface_area(2), std::log(2 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(sphere_log_surface_area(3), std::log(4 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(sphere_log_surface_area(4), std::log(2 * std::numbers::pi * std::numbers::pi), 1e-12);
  EXPECT_THROW(sphere_log_surface_area(1), DomainError);
}

}  // namespace
}  // namespace probemb
