#include "probemb/objective.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "probemb/adapter.hpp"

namespace probemb {
namespace {

constexpr double kDegenerateNorm = 1e-12;

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw DomainError(std::string(what) + ": likelihood matrix has non-finite entries");
  }
}

void check_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DomainError(std::string(what) + ": likelihood matrix must be square and nonempty");
  }
}

void check_kernel_dims(Family family, const Matrix& raw, const Matrix& points, const char* what) {
  const Eigen::Index expect = family == Family::gauss ? 2 * points.cols() : points.cols();
  if (raw.cols() != expect) {
    throw DomainError(std::string(what) + ": raw width " + std::to_string(raw.cols()) +
                      " does not match point dimension " + std::to_string(points.cols()));
  }
}

// Stable log σ(u).
double log_sigmoid(double u) {
  return u >= 0.0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u));
}

// σ(u) without overflow.
double sigmoid(double u) {
  if (u >= 0.0) {
    return 1.0 / (1.0 + std::exp(-u));
  }
  const double e = std::exp(u);
  return e / (1.0 + e);
}

Vector row_logsumexp(const Matrix& z) {
  Vector out(z.rows());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    out[r] = m + std::log((z.row(r).array() - m).exp().sum());
  }
  return out;
}

// Gradient through μ = raw/‖raw‖ and κ = max(‖raw‖, floor).
Matrix backprop_decompose(const DecomposedBatch& dec, const Vector& g_kappa, const Matrix& g_mu,
                          double kappa_floor) {
  Matrix out = Matrix::Zero(g_mu.rows(), g_mu.cols());
  for (Eigen::Index r = 0; r < g_mu.rows(); ++r) {
    const double n = dec.norm[r];
    if (!(n > kDegenerateNorm)) {
      continue;
    }
    const auto mu = dec.mu.row(r);
    out.row(r) = (g_mu.row(r) - g_mu.row(r).dot(mu) * mu) / n;
    if (n > kappa_floor) {
      out.row(r) += g_kappa[r] * mu;
    }
  }
  return out;
}

// Gauss pieces: projected mean M, precision P = exp(-log_var), raw means.
struct GaussSplit {
  Matrix raw_mean;
  Matrix mean;
  Matrix log_var;
  Matrix precision;
};

GaussSplit split_gauss(const Matrix& raw, Eigen::Index d) {
  GaussSplit g;
  g.raw_mean = raw.leftCols(d);
  g.mean = normalize_rows(g.raw_mean);
  g.log_var = raw.rightCols(d);
  g.precision = (-g.log_var.array()).exp().matrix();
  return g;
}

}  // namespace

std::string to_string(Kernel k) {
  switch (k) {
    case Kernel::vmf:
      return "vmf";
    case Kernel::ps:
      return "ps";
    case Kernel::gauss:
      return "gauss";
    case Kernel::cosine:
      return "cosine";
  }
  return "unknown";
}

Kernel kernel_for(Family f) {
  switch (f) {
    case Family::vmf:
      return Kernel::vmf;
    case Family::ps:
      return Kernel::ps;
    case Family::gauss:
      return Kernel::gauss;
    case Family::deterministic:
      return Kernel::cosine;
  }
  return Kernel::cosine;
}

LikelihoodMatrix likelihood_matrix(const std::vector<Distribution>& texts,
                                   const std::vector<UnitVector>& images) {
  if (texts.empty() || images.empty()) {
    throw DomainError("likelihood_matrix: text and image lists must be nonempty");
  }
  const std::size_t family = texts.front().index();
  for (const auto& t : texts) {
    if (t.index() != family) {
      throw DomainError("likelihood_matrix: text distributions mix families");
    }
  }
  static constexpr Kernel kByIndex[] = {Kernel::vmf, Kernel::ps, Kernel::gauss, Kernel::cosine};
  LikelihoodMatrix out{Matrix(static_cast<Eigen::Index>(texts.size()),
                              static_cast<Eigen::Index>(images.size())),
                       kByIndex[family]};
  for (std::size_t r = 0; r < texts.size(); ++r) {
    for (std::size_t s = 0; s < images.size(); ++s) {
      out.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) =
          log_pdf(texts[r], images[s]);
    }
  }
  return out;
}

LossValue infonce(const LikelihoodMatrix& L, double log_tau) {
  check_square(L.entries, "infonce");
  check_finite(L.entries, "infonce");
  const Eigen::Index B = L.entries.rows();
  const double tau = std::exp(log_tau);
  const Matrix z = tau * L.entries;
  const Vector lse_row = row_logsumexp(z);
  const Vector lse_col = row_logsumexp(z.transpose());

  double total = 0.0;
  for (Eigen::Index n = 0; n < B; ++n) {
    total += 2.0 * z(n, n) - lse_row[n] - lse_col[n];
  }
  LossValue out;
  out.loss = -total / (2.0 * static_cast<double>(B));

  Matrix dz(B, B);
  for (Eigen::Index r = 0; r < B; ++r) {
    for (Eigen::Index s = 0; s < B; ++s) {
      dz(r, s) = std::exp(z(r, s) - lse_row[r]) + std::exp(z(r, s) - lse_col[s]);
    }
    dz(r, r) -= 2.0;
  }
  dz /= 2.0 * static_cast<double>(B);
  out.grad_L = tau * dz;
  out.grad_log_tau = (dz.array() * z.array()).sum();
  return out;
}

LossValue siglip_loss(const LikelihoodMatrix& L, double log_tau, double bias) {
  check_square(L.entries, "siglip_loss");
  check_finite(L.entries, "siglip_loss");
  const Eigen::Index B = L.entries.rows();
  const double tau = std::exp(log_tau);
  const double inv_b = 1.0 / static_cast<double>(B);
  LossValue out;
  out.grad_L = Matrix(B, B);
  double total = 0.0;
  for (Eigen::Index r = 0; r < B; ++r) {
    for (Eigen::Index s = 0; s < B; ++s) {
      const double sign = r == s ? 1.0 : -1.0;
      const double logit = tau * L.entries(r, s) - bias;
      const double u = sign * logit;
      total += log_sigmoid(u);
      // d(-ln σ(u))/du = -σ(-u)
      const double du = -inv_b * sigmoid(-u);
      out.grad_L(r, s) = du * sign * tau;
      out.grad_log_tau += du * sign * tau * L.entries(r, s);
      out.grad_bias -= du * sign;
    }
  }
  out.loss = -inv_b * total;
  return out;
}

LikelihoodMatrix symmetrize_kernel(const LikelihoodMatrix& a, const LikelihoodMatrix& b) {
  if (a.entries.rows() != b.entries.rows() || a.entries.cols() != b.entries.cols()) {
    throw DomainError("symmetrize_kernel: shape mismatch");
  }
  return {0.5 * (a.entries + b.entries), a.kernel};
}

Matrix normalize_rows(const Matrix& raw) {
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    const double n = raw.row(r).norm();
    if (n > kDegenerateNorm) {
      out.row(r) = raw.row(r) / n;
    } else {
      out.row(r).setZero();
      out(r, 0) = 1.0;
    }
  }
  return out;
}

Matrix backprop_normalize(const Matrix& raw, const Matrix& d_mu) {
  Matrix out = Matrix::Zero(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    const double n = raw.row(r).norm();
    if (n > kDegenerateNorm) {
      const RowVector mu = raw.row(r) / n;
      out.row(r) = (d_mu.row(r) - d_mu.row(r).dot(mu) * mu) / n;
    }
  }
  return out;
}

Distribution to_distribution(Family family, const Vector& raw_row, double kappa_floor) {
  switch (family) {
    case Family::vmf: {
      auto [mu, kappa] = decompose(raw_row, kappa_floor);
      return VmfParams{std::move(mu), kappa};
    }
    case Family::ps: {
      auto [mu, kappa] = decompose(raw_row, kappa_floor);
      return PsParams{std::move(mu), kappa};
    }
    case Family::gauss: {
      if (raw_row.size() % 2 != 0) {
        throw DomainError("to_distribution: gauss output width must be even");
      }
      const Eigen::Index d = raw_row.size() / 2;
      const Matrix mean = normalize_rows(Matrix(raw_row.head(d).transpose()));
      return GaussParams{mean.row(0).transpose(), raw_row.tail(d)};
    }
    case Family::deterministic:
      return UnitVector::from_unit(normalize_rows(Matrix(raw_row.transpose())).row(0).transpose());
  }
  throw DomainError("to_distribution: unknown family");
}

Matrix kernel_forward(Family family, const Matrix& raw, const Matrix& points,
                      double kappa_floor) {
  check_kernel_dims(family, raw, points, "kernel_forward");
  const int d = static_cast<int>(points.cols());
  switch (family) {
    case Family::vmf: {
      const DecomposedBatch dec = decompose_rows(raw, kappa_floor);
      Matrix L = dec.kappa.asDiagonal() * (dec.mu * points.transpose());
      for (Eigen::Index r = 0; r < L.rows(); ++r) {
        L.row(r).array() += vmf_log_normalizer_approx(d, dec.kappa[r]);
      }
      return L;
    }
    case Family::ps: {
      const DecomposedBatch dec = decompose_rows(raw, kappa_floor);
      const Matrix c = dec.mu * points.transpose();
      Matrix L(c.rows(), c.cols());
      for (Eigen::Index r = 0; r < L.rows(); ++r) {
        const double k = dec.kappa[r];
        const double log_c = ps_log_normalizer(d, k);
        for (Eigen::Index s = 0; s < L.cols(); ++s) {
          L(r, s) = k * std::log(std::max(1.0 + c(r, s), kPsCosineFloor)) + log_c;
        }
      }
      return L;
    }
    case Family::gauss: {
      const GaussSplit g = split_gauss(raw, d);
      // Σ_j P_rj (x_sj - m_rj)² expanded into matrix products.
      const Matrix pm = g.precision.cwiseProduct(g.mean);
      const Vector quad_m = pm.cwiseProduct(g.mean).rowwise().sum();
      Matrix q = g.precision * points.cwiseAbs2().transpose() - 2.0 * pm * points.transpose();
      q.colwise() += quad_m;
      const double log2pi = std::log(2.0 * std::numbers::pi);
      Matrix L = -0.5 * q;
      const Vector lv_sum = g.log_var.rowwise().sum();
      L.colwise() -= 0.5 * (lv_sum.array() + d * log2pi).matrix();
      return L;
    }
    case Family::deterministic:
      return normalize_rows(raw) * points.transpose();
  }
  throw DomainError("kernel_forward: unknown family");
}

KernelGrads backprop_kernel(Family family, const Matrix& raw, const Matrix& points,
                            const Matrix& dL, double kappa_floor) {
  check_kernel_dims(family, raw, points, "backprop_kernel");
  if (dL.rows() != raw.rows() || dL.cols() != points.rows()) {
    throw DomainError("backprop_kernel: gradient shape does not match the kernel");
  }
  const int d = static_cast<int>(points.cols());
  KernelGrads out;
  switch (family) {
    case Family::vmf: {
      const DecomposedBatch dec = decompose_rows(raw, kappa_floor);
      const Matrix c = dec.mu * points.transpose();
      Vector g_kappa(raw.rows());
      for (Eigen::Index r = 0; r < raw.rows(); ++r) {
        g_kappa[r] = dL.row(r).dot(c.row(r)) +
                     vmf_log_normalizer_approx_deriv(d, dec.kappa[r]) * dL.row(r).sum();
      }
      const Matrix weighted = dec.kappa.asDiagonal() * dL;
      out.d_points = weighted.transpose() * dec.mu;
      out.d_raw = backprop_decompose(dec, g_kappa, weighted * points, kappa_floor);
      return out;
    }
    case Family::ps: {
      const DecomposedBatch dec = decompose_rows(raw, kappa_floor);
      const Matrix c = dec.mu * points.transpose();
      Vector g_kappa(raw.rows());
      Matrix weighted(dL.rows(), dL.cols());
      for (Eigen::Index r = 0; r < raw.rows(); ++r) {
        double acc = 0.0;
        for (Eigen::Index s = 0; s < dL.cols(); ++s) {
          const double base = 1.0 + c(r, s);
          const bool active = base > kPsCosineFloor;
          acc += dL(r, s) * std::log(active ? base : kPsCosineFloor);
          weighted(r, s) = active ? dL(r, s) * dec.kappa[r] / base : 0.0;
        }
        g_kappa[r] = acc + ps_log_normalizer_deriv(d, dec.kappa[r]) * dL.row(r).sum();
      }
      out.d_points = weighted.transpose() * dec.mu;
      out.d_raw = backprop_decompose(dec, g_kappa, weighted * points, kappa_floor);
      return out;
    }
    case Family::gauss: {
      const GaussSplit g = split_gauss(raw, d);
      const Vector w = dL.rowwise().sum();
      const Matrix wx = dL * points;
      const Matrix wx2 = dL * points.cwiseAbs2();
      const Matrix g_mean = g.precision.cwiseProduct(wx - w.asDiagonal() * g.mean);
      Matrix g_log_var =
          0.5 * g.precision.cwiseProduct(wx2 - 2.0 * g.mean.cwiseProduct(wx) +
                                         w.asDiagonal() * g.mean.cwiseAbs2());
      g_log_var.colwise() -= 0.5 * w;
      out.d_raw.resize(raw.rows(), raw.cols());
      out.d_raw.leftCols(d) = backprop_normalize(g.raw_mean, g_mean);
      out.d_raw.rightCols(d) = g_log_var;
      const Matrix dLt = dL.transpose();
      out.d_points = -(dLt * g.precision).cwiseProduct(points) +
                     dLt * g.precision.cwiseProduct(g.mean);
      return out;
    }
    case Family::deterministic: {
      const Matrix mu = normalize_rows(raw);
      out.d_points = dL.transpose() * mu;
      out.d_raw = backprop_normalize(raw, dL * points);
      return out;
    }
  }
  throw DomainError("backprop_kernel: unknown family");
}

namespace {

void check_variant(Family family, Variant variant, const Matrix& text, const Matrix& image) {
  if (family == Family::gauss && variant != Variant::asym_text) {
    throw DomainError("variant kernel: the gauss family supports only asym_text");
  }
  if (text.rows() < 1 || image.rows() < 1) {
    throw DomainError("variant kernel: empty input");
  }
  if (variant == Variant::symmetric && text.cols() != image.cols()) {
    throw DomainError("variant kernel: text and image adapter widths differ");
  }
}

}  // namespace

Matrix variant_forward(Family family, Variant variant, const Matrix& text, const Matrix& image,
                       double kappa_floor) {
  check_variant(family, variant, text, image);
  switch (variant) {
    case Variant::asym_text:
      return kernel_forward(family, text, image, kappa_floor);
    case Variant::asym_image:
      return kernel_forward(family, image, text, kappa_floor).transpose();
    case Variant::symmetric: {
      const Matrix mu_t = normalize_rows(text);
      const Matrix mu_i = normalize_rows(image);
      return 0.5 * (kernel_forward(family, text, mu_i, kappa_floor) +
                    kernel_forward(family, image, mu_t, kappa_floor).transpose());
    }
  }
  throw DomainError("variant_forward: unknown variant");
}

VariantGrads variant_backward(Family family, Variant variant, const Matrix& text,
                              const Matrix& image, const Matrix& dL, double kappa_floor) {
  check_variant(family, variant, text, image);
  switch (variant) {
    case Variant::asym_text: {
      KernelGrads g = backprop_kernel(family, text, image, dL, kappa_floor);
      return {std::move(g.d_raw), std::move(g.d_points)};
    }
    case Variant::asym_image: {
      KernelGrads g = backprop_kernel(family, image, text, dL.transpose(), kappa_floor);
      return {std::move(g.d_points), std::move(g.d_raw)};
    }
    case Variant::symmetric: {
      const Matrix mu_t = normalize_rows(text);
      const Matrix mu_i = normalize_rows(image);
      const Matrix half = 0.5 * dL;
      const KernelGrads g1 = backprop_kernel(family, text, mu_i, half, kappa_floor);
      const KernelGrads g2 = backprop_kernel(family, image, mu_t, half.transpose(), kappa_floor);
      return {g1.d_raw + backprop_normalize(text, g2.d_points),
              g2.d_raw + backprop_normalize(image, g1.d_points)};
    }
  }
  throw DomainError("variant_backward: unknown variant");
}

}  // namespace probemb
