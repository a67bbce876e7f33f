#pragma once

namespace probemb {

/// ln Γ(x) for x > 0 (Lanczos, g = 7, nine coefficients).
double log_gamma(double x);

/// ψ(x) = d/dx ln Γ(x), obtained by differentiating the same Lanczos
/// expansion as log_gamma so that the pair is mutually consistent.
double digamma(double x);

/// Modified Bessel function of the first kind I_v(z) by direct power
/// series. Test oracle only: restricted to z in [0, 60].
double bessel_i_series(double order, double z);

/// ln of the surface area of S^{d-1}: ln(2 π^{d/2} / Γ(d/2)).
double sphere_log_surface_area(int d);

}  // namespace probemb
