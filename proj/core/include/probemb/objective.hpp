#pragma once

#include <vector>

#include "probemb/directional.hpp"
#include "probemb/types.hpp"

namespace probemb {

enum class Kernel { vmf, ps, gauss, cosine };

std::string to_string(Kernel k);
Kernel kernel_for(Family f);

/// B×C matrix with entry (r, s) = ln p_{text r}(image s).
/// Rows are texts and columns are images everywhere in this library.
struct LikelihoodMatrix {
  Matrix entries;
  Kernel kernel;
};

struct LossValue {
  double loss = 0.0;
  Matrix grad_L;
  double grad_log_tau = 0.0;
  double grad_bias = 0.0;  // SigLIP only
};

/// Builds L from explicit per-text distributions. All entries of `texts`
/// must hold the same alternative.
LikelihoodMatrix likelihood_matrix(const std::vector<Distribution>& texts,
                                   const std::vector<UnitVector>& images);

/// Symmetric InfoNCE over rows and columns of τL with τ = exp(log_tau).
LossValue infonce(const LikelihoodMatrix& L, double log_tau);

/// Pairwise sigmoid loss -(1/B) ΣΣ ln σ(±(τL - b)), + on the diagonal.
LossValue siglip_loss(const LikelihoodMatrix& L, double log_tau, double bias);

/// Elementwise mean of two kernels with the same shape.
LikelihoodMatrix symmetrize_kernel(const LikelihoodMatrix& a, const LikelihoodMatrix& b);

// Batched kernels on raw adapter outputs.
//
// `raw` holds one adapter output row per distribution: z' = κμ for
// vmf/ps, an unnormalized direction for deterministic, and mean ∥ log_var
// for gauss (the mean is projected onto the sphere). `points` are the
// unit vectors being scored. The result is raw.rows() × points.rows().

/// Converts one raw adapter row to the distribution it parameterizes.
Distribution to_distribution(Family family, const Vector& raw_row, double kappa_floor);

Matrix kernel_forward(Family family, const Matrix& raw, const Matrix& points,
                      double kappa_floor);

struct KernelGrads {
  Matrix d_raw;
  Matrix d_points;
};

/// Chain rule from dL back to the raw adapter rows (through the κμ split
/// or the mean projection) and to the scored points.
KernelGrads backprop_kernel(Family family, const Matrix& raw, const Matrix& points,
                            const Matrix& dL, double kappa_floor);

/// Gradient of the projection r ↦ r/‖r‖ applied to d(μ).
Matrix backprop_normalize(const Matrix& raw, const Matrix& d_mu);

/// Row-wise projection onto the sphere; near-zero rows map to e₁.
Matrix normalize_rows(const Matrix& raw);

// Variant-level kernels.
//
// `text` is the text adapter output when the variant adapts texts and the
// text points otherwise; likewise for `image`. asym_text scores images
// under text distributions, asym_image scores texts under image
// distributions (transposed so rows stay texts), and symmetric averages
// both, each side evaluated at the other side's mean direction.

Matrix variant_forward(Family family, Variant variant, const Matrix& text, const Matrix& image,
                       double kappa_floor);

struct VariantGrads {
  Matrix d_text;
  Matrix d_image;
};

VariantGrads variant_backward(Family family, Variant variant, const Matrix& text,
                              const Matrix& image, const Matrix& dL, double kappa_floor);

}  // namespace probemb
