#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rpetel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Singular values below kPinvCutoff * sigma_max are treated as zero in
// pseudo-inverses and pseudo-determinants.
inline constexpr double kPinvCutoff = 1e-10;

inline Matrix pseudo_inverse(const Matrix& a, double rel_cutoff = kPinvCutoff) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  const double cutoff = rel_cutoff * sv(0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline int numerical_rank(const Matrix& a, double rel_cutoff = kPinvCutoff) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_cutoff * sv(0)) ++r;
  return r;
}

// Solve a*x = b; falls back to an SVD least-squares step when a is singular.
// Sets used_pinv when the fallback fired.
inline Vector robust_solve(const Matrix& a, const Vector& b, bool* used_pinv = nullptr) {
  if (used_pinv) *used_pinv = false;
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() == Eigen::Success) {
    Vector x = ldlt.solve(b);
    if (x.allFinite() && (a * x - b).norm() <= 1e-8 * (1.0 + b.norm())) return x;
  }
  if (used_pinv) *used_pinv = true;
  return pseudo_inverse(a) * b;
}

// vec(B): column-major stacking, matching Eigen's storage order.
inline Vector vec(const Matrix& b) {
  return Eigen::Map<const Vector>(b.data(), b.size());
}

inline Matrix unvec(const Vector& theta, int rows, int cols) {
  if (theta.size() != static_cast<Eigen::Index>(rows) * cols)
    throw std::invalid_argument("unvec: size mismatch");
  return Eigen::Map<const Matrix>(theta.data(), rows, cols);
}

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline double log_sum_exp(const Vector& s) {
  const double m = s.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((s.array() - m).exp().sum());
}

// Symmetric positive semidefinite square root.
inline Matrix spd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline double clamp_unit(double c, double eps = 1e-12) {
  return std::min(1.0 - eps, std::max(-1.0 + eps, c));
}

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace rpetel
