#pragma once

#include <cmath>
#include <vector>

#include "lrpr/types.hpp"

namespace lrpr {

// Phase-invariant distance min_{|z|=1} ||x - z xh||. Over the reals the
// minimum is one of the two sign choices, which also dodges the sqrt(eps)
// cancellation floor of the closed form; over C it is the closed form
// sqrt(||x||^2 + ||xh||^2 - 2 |<xh, x>|), clamped at zero against rounding.
template <typename D1, typename D2>
double dist(const Eigen::MatrixBase<D1>& x, const Eigen::MatrixBase<D2>& xh) {
  if (x.rows() != xh.rows() || x.cols() != 1 || xh.cols() != 1)
    throw DimensionError("dist: expected two equal-length column vectors");
  if constexpr (!is_complex_v<typename D1::Scalar> &&
                !is_complex_v<typename D2::Scalar>) {
    return std::min((x - xh).norm(), (x + xh).norm());
  } else {
    const double n1 = x.squaredNorm();
    const double n2 = xh.squaredNorm();
    const double ip = std::abs((xh.adjoint() * x).value());
    return std::sqrt(std::max(0.0, n1 + n2 - 2.0 * ip));
  }
}

// Column-wise phase-invariant matrix distance: sqrt(sum_k dist(x_k, xh_k)^2).
template <typename D1, typename D2>
double matdist(const Eigen::MatrixBase<D1>& x, const Eigen::MatrixBase<D2>& xh) {
  if (x.rows() != xh.rows() || x.cols() != xh.cols())
    throw DimensionError("matdist: shape mismatch");
  double acc = 0.0;
  for (Index k = 0; k < x.cols(); ++k) {
    const double d = dist(x.col(k), xh.col(k));
    acc += d * d;
  }
  return std::sqrt(acc);
}

enum class SubspaceNorm { Spectral, Frobenius };

// ||(I - U1 U1^H) U2|| for two orthonormal bases of equal rank. The spectral
// flavour lives in [0, 1], the Frobenius one in [0, sqrt(r)]; tiny rounding
// overshoot is clamped back into range.
template <typename D1, typename D2>
double subspace_error(const Eigen::MatrixBase<D1>& u1,
                      const Eigen::MatrixBase<D2>& u2,
                      SubspaceNorm mode = SubspaceNorm::Frobenius) {
  using S = typename D1::Scalar;
  static_assert(std::is_same_v<S, typename D2::Scalar>,
                "subspace_error: mixed scalar types");
  if (u1.rows() != u2.rows())
    throw DimensionError("subspace_error: ambient dimensions differ");
  if (u1.cols() != u2.cols())
    throw DimensionError("subspace_error: rank mismatch");
  if (u1.cols() < 1 || u1.rows() < u1.cols())
    throw DimensionError("subspace_error: expected tall orthonormal bases");
  if (orthonormality_defect(u1) > 1e-8 || orthonormality_defect(u2) > 1e-8)
    throw ValidationError("subspace_error: inputs must have orthonormal columns");

  const Matrix<S> m = u2 - u1 * (u1.adjoint() * u2).eval();
  if (mode == SubspaceNorm::Frobenius)
    return std::min(m.norm(), std::sqrt(double(u1.cols())));
  // Spectral norm through the r x r Gram matrix; r is small everywhere here.
  const Matrix<S> g = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<Matrix<S>> es(g);
  const double top = std::max(0.0, es.eigenvalues().maxCoeff());
  return std::min(std::sqrt(top), 1.0);
}

template <typename Scalar>
struct PhaseAligned {
  Matrix<Scalar> x_hat;                     // columns rotated onto x_star
  std::vector<Index> zero_overlap_columns;  // factor fell back to 1 there
};

// Rotates each estimate column by the optimal unit-modulus factor
// phase(<xh_k, x_k>); after alignment the plain Frobenius distance equals
// matdist.
template <typename Scalar>
PhaseAligned<Scalar> phase_align_columns(const Matrix<Scalar>& x_star,
                                         const Matrix<Scalar>& x_hat) {
  if (x_star.rows() != x_hat.rows() || x_star.cols() != x_hat.cols())
    throw DimensionError("phase_align_columns: shape mismatch");
  PhaseAligned<Scalar> out;
  out.x_hat = x_hat;
  for (Index k = 0; k < x_star.cols(); ++k) {
    const Scalar ip = (x_hat.col(k).adjoint() * x_star.col(k)).value();
    if (ip == Scalar(0)) {
      out.zero_overlap_columns.push_back(k);
      continue;
    }
    out.x_hat.col(k) *= phase(ip);
  }
  return out;
}

// Bundle of the error metrics logged per outer iteration.
struct ErrorReport {
  double se2 = 0.0;
  double sef = 0.0;
  double matdist_rel = 0.0;
  Eigen::VectorXd per_column_dist;
};

template <typename Scalar>
ErrorReport error_report(const Matrix<Scalar>& u_star, const Matrix<Scalar>& u,
                         const Matrix<Scalar>& x_star,
                         const Matrix<Scalar>& x_hat) {
  ErrorReport rep;
  rep.se2 = subspace_error(u_star, u, SubspaceNorm::Spectral);
  rep.sef = subspace_error(u_star, u, SubspaceNorm::Frobenius);
  rep.per_column_dist.resize(x_star.cols());
  for (Index k = 0; k < x_star.cols(); ++k)
    rep.per_column_dist(k) = dist(x_star.col(k), x_hat.col(k));
  const double xn = x_star.norm();
  rep.matdist_rel = rep.per_column_dist.norm() / (xn > 0.0 ? xn : 1.0);
  return rep;
}

}  // namespace lrpr
