#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include "rpetel/linalg.hpp"

namespace rpetel {

// Embedded submanifold geometry on ambient vectors in R^D.  Matrix-valued
// manifolds store points column-vectorized.  All operations are pure; a
// ManifoldSpec is immutable after construction and safe to share.

enum class ManifoldKind {
  Sphere,             // unit sphere in R^D
  SpecialOrthogonal,  // SO(p), vectorized p x p
  Symmetric,          // symmetric p x p matrices (a linear manifold)
  Grassmann,          // rank-r orthogonal projectors, vectorized p x p
  FixedRank,          // p x k matrices of rank r, vectorized
  Solution,           // zero set of a constraint function with full-rank Jacobian
  Ambient             // all of R^D
};

// Constraint function q: R^D -> R^k for solution manifolds.  jacobian
// returns the D x k matrix whose columns are the gradients of q_1..q_k.
struct ConstraintFunction {
  std::string name;
  int ambient_dim = 0;
  int num_constraints = 0;
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;
};

struct ManifoldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ManifoldSpec {
 public:
  ManifoldSpec() : ManifoldSpec(ManifoldKind::Ambient, 0, 0, 0, 0, 0) {}

  static ManifoldSpec sphere(int ambient_dim) {
    return ManifoldSpec(ManifoldKind::Sphere, ambient_dim, ambient_dim - 1, 0, 0, 0);
  }
  static ManifoldSpec special_orthogonal(int p) {
    return ManifoldSpec(ManifoldKind::SpecialOrthogonal, p * p, p * (p - 1) / 2, p, p, 0);
  }
  static ManifoldSpec symmetric(int p) {
    return ManifoldSpec(ManifoldKind::Symmetric, p * p, p * (p + 1) / 2, p, p, 0);
  }
  static ManifoldSpec grassmann(int p, int r) {
    return ManifoldSpec(ManifoldKind::Grassmann, p * p, r * (p - r), p, p, r);
  }
  static ManifoldSpec fixed_rank(int p, int k, int r) {
    return ManifoldSpec(ManifoldKind::FixedRank, p * k, (p + k) * r - r * r, p, k, r);
  }
  static ManifoldSpec ambient(int dim) {
    return ManifoldSpec(ManifoldKind::Ambient, dim, dim, 0, 0, 0);
  }
  static ManifoldSpec solution(ConstraintFunction q) {
    ManifoldSpec m(ManifoldKind::Solution, q.ambient_dim,
                   q.ambient_dim - q.num_constraints, 0, 0, 0);
    m.constraint_ = std::move(q);
    return m;
  }

  ManifoldKind kind() const { return kind_; }
  int ambient_dim() const { return ambient_dim_; }
  int intrinsic_dim() const { return intrinsic_dim_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int rank() const { return rank_; }
  double membership_tol() const { return membership_tol_; }
  void set_membership_tol(double tol) { membership_tol_ = tol; }
  const ConstraintFunction& constraint() const { return constraint_; }

 private:
  ManifoldSpec(ManifoldKind kind, int ambient_dim, int intrinsic_dim,
               int rows, int cols, int rank)
      : kind_(kind), ambient_dim_(ambient_dim), intrinsic_dim_(intrinsic_dim),
        rows_(rows), cols_(cols), rank_(rank) {}

  ManifoldKind kind_;
  int ambient_dim_;
  int intrinsic_dim_;
  int rows_, cols_, rank_;  // matrix shape parameters where applicable
  double membership_tol_ = 1e-8;
  ConstraintFunction constraint_;
};

struct TangentBasis {
  Vector base;   // length D
  Matrix frame;  // D x d, orthonormal columns spanning the tangent space
};

namespace detail {

inline void check_dim(const ManifoldSpec& m, const Vector& x, const char* what) {
  if (x.size() != m.ambient_dim())
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(m.ambient_dim()) + ", got " +
                                std::to_string(x.size()));
}

// rank-r SVD factors of a p x k matrix; gap test on sigma_{r+1}/sigma_r.
struct ThinFactors {
  Matrix u, v;  // p x r, k x r
  Vector sigma;
  bool rank_ok;
};

inline ThinFactors thin_svd(const Matrix& b, int r, double gap_tol = 1e-8) {
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  ThinFactors f;
  f.u = svd.matrixU().leftCols(r);
  f.v = svd.matrixV().leftCols(r);
  f.sigma = sv.head(r);
  f.rank_ok = sv(r - 1) > 0.0;
  if (f.rank_ok && sv.size() > r) f.rank_ok = sv(r) <= gap_tol * sv(r - 1);
  return f;
}

}  // namespace detail

inline double membership_residual(const ManifoldSpec& m, const Vector& x) {
  detail::check_dim(m, x, "membership_residual");
  switch (m.kind()) {
    case ManifoldKind::Sphere:
      return std::abs(x.norm() - 1.0);
    case ManifoldKind::SpecialOrthogonal: {
      Matrix a = unvec(x, m.rows(), m.cols());
      double orth = (a * a.transpose() - Matrix::Identity(m.rows(), m.rows())).norm();
      return std::max(orth, std::abs(a.determinant() - 1.0));
    }
    case ManifoldKind::Symmetric: {
      Matrix a = unvec(x, m.rows(), m.cols());
      return (a - a.transpose()).norm();
    }
    case ManifoldKind::Grassmann: {
      Matrix p = unvec(x, m.rows(), m.cols());
      double res = (p * p - p).norm();
      res = std::max(res, (p - p.transpose()).norm());
      res = std::max(res, std::abs(p.trace() - m.rank()));
      return res;
    }
    case ManifoldKind::FixedRank: {
      auto f = detail::thin_svd(unvec(x, m.rows(), m.cols()), m.rank());
      return f.rank_ok ? 0.0 : 1.0;
    }
    case ManifoldKind::Solution:
      return m.constraint().value(x).norm();
    case ManifoldKind::Ambient:
      return 0.0;
  }
  return 0.0;
}

inline bool on_manifold(const ManifoldSpec& m, const Vector& x) {
  return membership_residual(m, x) <= m.membership_tol();
}

inline void require_membership(const ManifoldSpec& m, const Vector& x,
                               const char* what) {
  detail::check_dim(m, x, what);
  if (!on_manifold(m, x))
    throw ManifoldError(std::string(what) + ": point violates membership, residual " +
                        std::to_string(membership_residual(m, x)));
}

// Apply the tangent projector at theta to an ambient vector.
inline Vector project_tangent(const ManifoldSpec& m, const Vector& theta,
                              const Vector& u) {
  detail::check_dim(m, u, "project_tangent");
  switch (m.kind()) {
    case ManifoldKind::Sphere:
      return u - theta * theta.dot(u);
    case ManifoldKind::SpecialOrthogonal: {
      Matrix x = unvec(theta, m.rows(), m.cols());
      Matrix y = unvec(u, m.rows(), m.cols());
      Matrix s = x.transpose() * y;
      return vec(x * (0.5 * (s - s.transpose())));
    }
    case ManifoldKind::Symmetric:
      return vec(symmetrize(unvec(u, m.rows(), m.cols())));
    case ManifoldKind::Grassmann: {
      Matrix p = unvec(theta, m.rows(), m.cols());
      Matrix s = symmetrize(unvec(u, m.rows(), m.cols()));
      Matrix q = Matrix::Identity(m.rows(), m.rows()) - p;
      return vec(p * s * q + q * s * p);
    }
    case ManifoldKind::FixedRank: {
      auto f = detail::thin_svd(unvec(theta, m.rows(), m.cols()), m.rank());
      Matrix y = unvec(u, m.rows(), m.cols());
      Matrix uu = f.u * f.u.transpose();
      Matrix vv = f.v * f.v.transpose();
      return vec(uu * y + y * vv - uu * y * vv);
    }
    case ManifoldKind::Solution: {
      Matrix q = m.constraint().jacobian(theta);
      if (numerical_rank(q) < m.constraint().num_constraints)
        throw ManifoldError("project_tangent: rank-deficient constraint Jacobian");
      return u - q * (pseudo_inverse(q) * u);
    }
    case ManifoldKind::Ambient:
      return u;
  }
  return u;
}

inline Matrix tangent_projector(const ManifoldSpec& m, const Vector& theta) {
  require_membership(m, theta, "tangent_projector");
  const int D = m.ambient_dim();
  Matrix p(D, D);
  Vector e = Vector::Zero(D);
  for (int j = 0; j < D; ++j) {
    e(j) = 1.0;
    p.col(j) = project_tangent(m, theta, e);
    e(j) = 0.0;
  }
  return symmetrize(p);
}

// Orthonormal frame for the tangent space.  Deterministic: column-pivoted QR
// of the projector, each column sign-fixed so its first nonzero entry is
// positive.
inline TangentBasis tangent_basis(const ManifoldSpec& m, const Vector& theta) {
  require_membership(m, theta, "tangent_basis");
  const int D = m.ambient_dim();
  const int d = m.intrinsic_dim();
  if (m.kind() == ManifoldKind::Ambient)
    return {theta, Matrix::Identity(D, D)};
  Matrix p = tangent_projector(m, theta);
  Eigen::ColPivHouseholderQR<Matrix> qr(p);
  Matrix q = qr.householderQ() * Matrix::Identity(D, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < D; ++i) {
      if (std::abs(q(i, j)) > 1e-12) {
        if (q(i, j) < 0.0) q.col(j) = -q.col(j);
        break;
      }
    }
  }
  return {theta, q};
}

// psi_theta(y) = Proj_{T_theta}(y - theta).
inline Vector psi(const ManifoldSpec& m, const Vector& theta, const Vector& y) {
  require_membership(m, theta, "psi");
  require_membership(m, y, "psi");
  return project_tangent(m, theta, y - theta);
}

struct RetractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Retraction: first-order move from theta along tangent vector v.
inline Vector retract(const ManifoldSpec& m, const Vector& theta, const Vector& v);

namespace detail {
Vector solution_newton(const ManifoldSpec& m, const Vector& theta, const Vector& v,
                       double tol, int max_iter, bool* ok);
}

inline Vector retract(const ManifoldSpec& m, const Vector& theta, const Vector& v) {
  detail::check_dim(m, theta, "retract");
  detail::check_dim(m, v, "retract");
  if (v.isZero(0.0)) return theta;
  switch (m.kind()) {
    case ManifoldKind::Sphere: {
      Vector y = theta + v;
      double nrm = y.norm();
      if (nrm == 0.0) throw RetractError("retract: sphere retraction at origin");
      return y / nrm;
    }
    case ManifoldKind::SpecialOrthogonal: {
      Matrix y = unvec(theta + v, m.rows(), m.cols());
      Eigen::HouseholderQR<Matrix> qr(y);
      Matrix q = qr.householderQ();
      Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
      for (int j = 0; j < m.cols(); ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
      return vec(q);
    }
    case ManifoldKind::Symmetric:
    case ManifoldKind::Ambient:
      return theta + v;
    case ManifoldKind::Grassmann: {
      // metric projection: top-r spectral projector of the symmetrized move
      Matrix s = symmetrize(unvec(theta + v, m.rows(), m.cols()));
      Eigen::SelfAdjointEigenSolver<Matrix> es(s);
      const int p = m.rows(), r = m.rank();
      Matrix top = es.eigenvectors().rightCols(r);
      return vec(top * top.transpose());
    }
    case ManifoldKind::FixedRank: {
      // orthographic retraction; fails when the r x r middle block is singular
      auto f = detail::thin_svd(unvec(theta, m.rows(), m.cols()), m.rank());
      Matrix move = unvec(theta + v, m.rows(), m.cols());
      Matrix a = f.u.transpose() * move * f.v;  // r x r
      Eigen::JacobiSVD<Matrix> asvd(a);
      const Vector& sv = asvd.singularValues();
      if (sv(sv.size() - 1) <= 1e-12 * std::max(1.0, sv(0)))
        throw RetractError("retract: orthographic retraction block singular; reduce step");
      Matrix y = (move * f.v) * a.inverse() * (f.u.transpose() * move);
      return vec(y);
    }
    case ManifoldKind::Solution: {
      bool ok = false;
      Vector y = detail::solution_newton(m, theta, v, 1e-10, 100, &ok);
      if (!ok) throw RetractError("retract: constraint projection did not converge");
      return y;
    }
  }
  return theta + v;
}

namespace detail {

// Newton solve for y = theta + v + Q_theta a with q(y) = 0.
inline Vector solution_newton(const ManifoldSpec& m, const Vector& theta,
                              const Vector& v, double tol, int max_iter, bool* ok) {
  const auto& cf = m.constraint();
  Matrix q_theta = cf.jacobian(theta);
  if (numerical_rank(q_theta) < cf.num_constraints)
    throw ManifoldError("solution manifold: rank-deficient constraint Jacobian");
  Vector a = Vector::Zero(cf.num_constraints);
  Vector y = theta + v;
  *ok = false;
  for (int i = 0; i < max_iter; ++i) {
    Vector qv = cf.value(y);
    if (qv.norm() <= tol) {
      *ok = true;
      return y;
    }
    Matrix jac = cf.jacobian(y).transpose() * q_theta;  // k x k
    bool used_pinv = false;
    Vector da = robust_solve(jac, -qv, &used_pinv);
    if (!da.allFinite()) return y;
    a += da;
    y = theta + v + q_theta * a;
  }
  if (cf.value(y).norm() <= tol) *ok = true;
  return y;
}

}  // namespace detail

struct PhiOptions {
  double tol = 1e-10;          // gradient / constraint tolerance
  int max_iter = 500;          // generic path; solution path uses newton_max_iter
  int newton_max_iter = 100;
  bool use_newton = false;     // opt-in second-order inner solver
  double residual_tol = 1e-8;  // acceptance: ||psi(phi(v)) - v|| <= tol*(1+||v||)
};

struct PhiResult {
  Vector point;
  bool ok = false;
};

// phi_theta(v): local inverse of psi_theta.  Solves
// argmin_{y in M} ||Proj_{T_theta}(y - theta) - v||^2 started at theta.
// Non-convergence is reported through ok=false, never thrown.
inline PhiResult phi(const ManifoldSpec& m, const Vector& theta, const Vector& v,
                     const PhiOptions& opts = {}) {
  detail::check_dim(m, theta, "phi");
  detail::check_dim(m, v, "phi");
  const double vnorm = v.norm();
  if (vnorm == 0.0) return {theta, true};

  auto accept = [&](const Vector& y) {
    if (!on_manifold(m, y)) return false;
    Vector res = project_tangent(m, theta, y - theta) - v;
    return res.norm() <= opts.residual_tol * (1.0 + vnorm);
  };

  switch (m.kind()) {
    case ManifoldKind::Ambient:
    case ManifoldKind::Symmetric:
      return {theta + v, true};
    case ManifoldKind::Sphere: {
      double t2 = 1.0 - v.squaredNorm();
      if (t2 <= 0.0) return {theta, false};
      Vector y = std::sqrt(t2) * theta + v;
      return {y, accept(y)};
    }
    case ManifoldKind::Solution: {
      bool ok = false;
      Vector y;
      try {
        y = detail::solution_newton(m, theta, v, opts.tol, opts.newton_max_iter, &ok);
      } catch (const ManifoldError&) {
        throw;  // rank deficiency is a hard error, not a rejection
      }
      if (!ok) return {theta, false};
      return {y, accept(y)};
    }
    default:
      break;
  }

  // Generic path: Riemannian descent on f(y) = 0.5*||psi_theta(y) - v||^2
  // with Armijo backtracking; optional Newton polish in the tangent basis.
  Vector y = theta;
  double f_cur = 0.5 * v.squaredNorm();
  for (int it = 0; it < opts.max_iter; ++it) {
    Vector res = project_tangent(m, theta, y - theta) - v;
    Vector grad = project_tangent(m, y, project_tangent(m, theta, res));
    if (grad.norm() <= opts.tol) break;

    Vector step_dir = -grad;
    if (opts.use_newton) {
      TangentBasis basis = tangent_basis(m, y);
      const int d = m.intrinsic_dim();
      const double h = 1e-6;
      Matrix hess(d, d);
      for (int j = 0; j < d; ++j) {
        auto fd_grad = [&](double t) {
          Vector yt = retract(m, y, t * basis.frame.col(j));
          Vector r = project_tangent(m, theta, yt - theta) - v;
          return basis.frame.transpose() * project_tangent(m, yt, project_tangent(m, theta, r));
        };
        hess.col(j) = (fd_grad(h) - fd_grad(-h)) / (2.0 * h);
      }
      hess = symmetrize(hess);
      bool used_pinv = false;
      Vector dz = robust_solve(hess, -(basis.frame.transpose() * grad).eval(), &used_pinv);
      if (dz.allFinite() && dz.dot(basis.frame.transpose() * grad) < 0.0)
        step_dir = basis.frame * dz;
    }

    double alpha = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 40; ++bt) {
      Vector y_new;
      try {
        y_new = retract(m, y, alpha * step_dir);
      } catch (const RetractError&) {
        alpha *= 0.5;
        continue;
      }
      Vector r = project_tangent(m, theta, y_new - theta) - v;
      double f_new = 0.5 * r.squaredNorm();
      if (f_new <= f_cur - 1e-4 * alpha * grad.squaredNorm() ||
          (opts.use_newton && f_new < f_cur)) {
        y = y_new;
        f_cur = f_new;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  return {y, accept(y)};
}

// Nearest-point projection onto the manifold.
inline Vector project_to_manifold(const ManifoldSpec& m, const Vector& x) {
  detail::check_dim(m, x, "project_to_manifold");
  switch (m.kind()) {
    case ManifoldKind::Sphere: {
      double nrm = x.norm();
      if (nrm <= 1e-14) throw ManifoldError("project_to_manifold: focal point (zero vector)");
      return x / nrm;
    }
    case ManifoldKind::SpecialOrthogonal: {
      Matrix a = unvec(x, m.rows(), m.cols());
      Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Matrix r = svd.matrixU() * svd.matrixV().transpose();
      if (r.determinant() < 0.0) {
        Matrix u = svd.matrixU();
        u.col(u.cols() - 1) = -u.col(u.cols() - 1);
        r = u * svd.matrixV().transpose();
      }
      return vec(r);
    }
    case ManifoldKind::Symmetric:
      return vec(symmetrize(unvec(x, m.rows(), m.cols())));
    case ManifoldKind::Grassmann: {
      Matrix s = symmetrize(unvec(x, m.rows(), m.cols()));
      Eigen::SelfAdjointEigenSolver<Matrix> es(s);
      const int p = m.rows(), r = m.rank();
      const Vector& ev = es.eigenvalues();  // ascending
      if (std::abs(ev(p - r) - ev(p - r - 1)) <= 1e-12 * (1.0 + std::abs(ev(p - 1))))
        throw ManifoldError("project_to_manifold: tied eigenvalues, projection ill-posed");
      Matrix top = es.eigenvectors().rightCols(r);
      return vec(top * top.transpose());
    }
    case ManifoldKind::FixedRank: {
      Matrix b = unvec(x, m.rows(), m.cols());
      Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Vector& sv = svd.singularValues();
      const int r = m.rank();
      if (sv(r - 1) <= 1e-14)
        throw ManifoldError("project_to_manifold: input rank below target");
      if (sv.size() > r && std::abs(sv(r - 1) - sv(r)) <= 1e-12 * sv(0))
        throw ManifoldError("project_to_manifold: tied singular values, projection ill-posed");
      Matrix y = svd.matrixU().leftCols(r) * sv.head(r).asDiagonal() *
                 svd.matrixV().leftCols(r).transpose();
      return vec(y);
    }
    case ManifoldKind::Solution: {
      // Riemannian descent on 0.5*||y - x||^2 from the closest available point.
      Vector y = on_manifold(m, x) ? x : x;
      if (!on_manifold(m, y)) {
        // crude feasibility restoration: Newton from x with v = 0
        bool ok = false;
        y = detail::solution_newton(m, x, Vector::Zero(m.ambient_dim()).eval() * 0.0, 1e-10, 200, &ok);
        if (!ok) throw ManifoldError("project_to_manifold: feasibility restoration failed");
      }
      for (int it = 0; it < 500; ++it) {
        Vector grad = project_tangent(m, y, y - x);
        if (grad.norm() <= 1e-10) break;
        double alpha = 1.0;
        double f_cur = 0.5 * (y - x).squaredNorm();
        for (int bt = 0; bt < 40; ++bt) {
          try {
            Vector y_new = retract(m, y, -alpha * grad);
            if (0.5 * (y_new - x).squaredNorm() <
                f_cur - 1e-4 * alpha * grad.squaredNorm()) {
              y = y_new;
              break;
            }
          } catch (const RetractError&) {
          }
          alpha *= 0.5;
          if (bt == 39) it = 500;
        }
      }
      return y;
    }
    case ManifoldKind::Ambient:
      return x;
  }
  return x;
}

// Random point on the manifold, for restarts and property tests.
template <typename Rng>
Vector random_point(const ManifoldSpec& m, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int D = m.ambient_dim();
  Vector g(D);
  for (int i = 0; i < D; ++i) g(i) = gauss(rng);
  switch (m.kind()) {
    case ManifoldKind::FixedRank: {
      // random factors keep the singular values well separated
      Matrix u(m.rows(), m.rank()), v(m.cols(), m.rank());
      for (int i = 0; i < u.size(); ++i) u(i / m.rank(), i % m.rank()) = gauss(rng);
      for (int i = 0; i < v.size(); ++i) v(i / m.rank(), i % m.rank()) = gauss(rng);
      Vector s(m.rank());
      for (int i = 0; i < m.rank(); ++i) s(i) = 1.0 + i + std::abs(gauss(rng));
      Eigen::HouseholderQR<Matrix> qu(u), qv(v);
      Matrix uo = qu.householderQ() * Matrix::Identity(m.rows(), m.rank());
      Matrix vo = qv.householderQ() * Matrix::Identity(m.cols(), m.rank());
      return vec(uo * s.asDiagonal() * vo.transpose());
    }
    case ManifoldKind::Grassmann: {
      Matrix a(m.rows(), m.rank());
      for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.rank(); ++j) a(i, j) = gauss(rng);
      Eigen::HouseholderQR<Matrix> qr(a);
      Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.rank());
      return vec(q * q.transpose());
    }
    default:
      return project_to_manifold(m, g);
  }
}

// Built-in constraint registry for solution manifolds (no runtime code loading).
inline ConstraintFunction make_constraint(const std::string& name, int dim_param) {
  if (name == "unit-sphere") {
    ConstraintFunction cf;
    cf.name = name;
    cf.ambient_dim = dim_param;
    cf.num_constraints = 1;
    cf.value = [](const Vector& x) {
      Vector q(1);
      q(0) = x.squaredNorm() - 1.0;
      return q;
    };
    cf.jacobian = [](const Vector& x) { return Matrix(2.0 * x); };
    return cf;
  }
  if (name == "symmetric") {
    // off-diagonal equality constraints for p x p matrices, column-vectorized
    const int p = dim_param;
    ConstraintFunction cf;
    cf.name = name;
    cf.ambient_dim = p * p;
    cf.num_constraints = p * (p - 1) / 2;
    cf.value = [p](const Vector& x) {
      Matrix a = unvec(x, p, p);
      Vector q(p * (p - 1) / 2);
      int idx = 0;
      for (int j = 0; j < p; ++j)
        for (int i = j + 1; i < p; ++i) q(idx++) = a(i, j) - a(j, i);
      return q;
    };
    cf.jacobian = [p](const Vector&) {
      Matrix jac = Matrix::Zero(p * p, p * (p - 1) / 2);
      int idx = 0;
      for (int j = 0; j < p; ++j)
        for (int i = j + 1; i < p; ++i) {
          jac(j * p + i, idx) = 1.0;
          jac(i * p + j, idx) = -1.0;
          ++idx;
        }
      return jac;
    };
    return cf;
  }
  throw std::invalid_argument("unknown constraint function: " + name);
}

}  // namespace rpetel
