#pragma once

// Independent reference implementations used to cross-check the fast paths.
// Everything here is deliberately brute force and shares no code with the
// estimators it validates.

#include <cmath>
#include <vector>

#include "lrpr/types.hpp"

namespace lrpr {
namespace oracle {

// Phase-invariant distance by scanning unit-modulus rotations on a grid.
// Real inputs only need the two signs.
template <typename Scalar>
double dist_grid(const Vector<Scalar>& x, const Vector<Scalar>& xh,
                 int points = 10000) {
  double best = std::numeric_limits<double>::infinity();
  if constexpr (is_complex_v<Scalar>) {
    for (int j = 0; j < points; ++j) {
      const double theta = -M_PI + 2.0 * M_PI * double(j) / double(points);
      const Scalar z = std::polar(1.0, theta);
      best = std::min(best, (x - z * xh).norm());
    }
  } else {
    best = std::min((x - xh).norm(), (x + xh).norm());
  }
  return best;
}

template <typename Scalar>
double matdist_grid(const Matrix<Scalar>& x, const Matrix<Scalar>& xh,
                    int points = 10000) {
  double acc = 0.0;
  for (Index k = 0; k < x.cols(); ++k) {
    const double d =
        dist_grid<Scalar>(x.col(k), xh.col(k), points);
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Dense direct solve of the column-space normal equations
// sum_k (A_k A_k^H) W (b_k b_k^H) = sum_k A_k (c_k .* y_k) b_k^H
// by materializing the n r x n r Kronecker system and factoring it.
template <typename Scalar>
Matrix<Scalar> dense_u_solve(const std::vector<Matrix<Scalar>>& as,
                             const Matrix<Scalar>& b,
                             const Matrix<Scalar>& c_hat,
                             const Eigen::MatrixXd& y) {
  const Index n = as[0].rows();
  const Index r = b.rows();
  const Index q = b.cols();
  Matrix<Scalar> sys = Matrix<Scalar>::Zero(n * r, n * r);
  Vector<Scalar> rhs = Vector<Scalar>::Zero(n * r);
  for (Index k = 0; k < q; ++k) {
    const Matrix<Scalar> gram = as[k] * as[k].adjoint();       // n x n
    const Matrix<Scalar> outer = b.col(k) * b.col(k).adjoint();  // r x r
    // vec(G W O) = (O^T kron G) vec(W), column-major vec
    for (Index jr = 0; jr < r; ++jr)
      for (Index ir = 0; ir < r; ++ir)
        sys.block(ir * n, jr * n, n, n) += outer(jr, ir) * gram;
    Vector<Scalar> cy(y.rows());
    for (Index i = 0; i < y.rows(); ++i) cy(i) = c_hat(i, k) * Scalar(y(i, k));
    const Vector<Scalar> col = as[k] * cy;  // n
    for (Index ir = 0; ir < r; ++ir)
      rhs.segment(ir * n, n) +=
          Eigen::numext::conj(b(ir, k)) * col;
  }
  const Vector<Scalar> w = sys.ldlt().solve(rhs);
  Matrix<Scalar> out(n, r);
  for (Index ir = 0; ir < r; ++ir) out.col(ir) = w.segment(ir * n, n);
  return out;
}

// Two-dimensional real phase retrieval by shrinking pattern search on the
// amplitude least squares objective sum_i (|a_i^T x| - y_i)^2.
inline Eigen::Vector2d rwf_refine_2d(const Eigen::MatrixXd& a,
                                     const Eigen::VectorXd& y,
                                     double half_width = 6.0) {
  auto loss = [&](const Eigen::Vector2d& x) {
    return ((a.transpose() * x).cwiseAbs() - y).squaredNorm();
  };
  Eigen::Vector2d center(0.0, 0.0);
  double width = half_width;
  double best_loss = loss(center);
  for (int round = 0; round < 60; ++round) {
    const int steps = round == 0 ? 60 : 10;
    Eigen::Vector2d best = center;
    for (int i = -steps; i <= steps; ++i)
      for (int j = -steps; j <= steps; ++j) {
        const Eigen::Vector2d cand =
            center + Eigen::Vector2d(width * i / steps, width * j / steps);
        const double l = loss(cand);
        if (l < best_loss) {
          best_loss = l;
          best = cand;
        }
      }
    center = best;
    width *= 0.35;
  }
  return center;
}

}  // namespace oracle
}  // namespace lrpr
