#pragma once

#include <cmath>
#include <cstdint>

#include "lrpr/qr.hpp"
#include "lrpr/rng.hpp"
#include "lrpr/types.hpp"

namespace lrpr {

// Rank-r planted factorization X* = U* diag(sigma) V*^H. Columns of X* are
// the signals to recover; U* spans the shared column space.
template <typename Scalar>
struct GroundTruth {
  Index n = 0, q = 0, r = 0;
  Matrix<Scalar> u_star;   // n x r, orthonormal columns
  Eigen::VectorXd sigma;   // length r, positive, non-increasing
  Matrix<Scalar> v_star;   // q x r, orthonormal columns
  std::uint64_t seed = 0;

  static constexpr Field field = field_of<Scalar>();

  double sigma_max() const { return sigma(0); }
  double sigma_min() const { return sigma(r - 1); }
  double kappa() const { return sigma(0) / sigma(r - 1); }
};

template <typename Scalar>
void validate(const GroundTruth<Scalar>& gt) {
  if (gt.r < 1 || gt.r > std::min(gt.n, gt.q))
    throw DimensionError("ground truth: rank outside [1, min(n, q)]");
  if (gt.u_star.rows() != gt.n || gt.u_star.cols() != gt.r ||
      gt.v_star.rows() != gt.q || gt.v_star.cols() != gt.r ||
      gt.sigma.size() != gt.r)
    throw DimensionError("ground truth: factor shapes inconsistent");
  if (orthonormality_defect(gt.u_star) > 1e-10 ||
      orthonormality_defect(gt.v_star) > 1e-10)
    throw ValidationError("ground truth: factors not orthonormal");
  for (Index i = 0; i < gt.r; ++i) {
    if (!(gt.sigma(i) > 0.0))
      throw ValidationError("ground truth: singular values must be positive");
    if (i > 0 && gt.sigma(i) > gt.sigma(i - 1))
      throw ValidationError("ground truth: singular values must be non-increasing");
  }
}

// mu(V) = sqrt(q/r) * max_k ||e_k^T V||; equals 1 exactly when the rows of V
// are identity columns and sqrt(q) in the worst (spiky) case.
template <typename Scalar>
double incoherence_mu(const Matrix<Scalar>& v) {
  const Index q = v.rows();
  const Index r = v.cols();
  if (q < 1 || r < 1 || q < r)
    throw DimensionError("incoherence_mu: expected a tall q x r matrix");
  if (orthonormality_defect(v) > 1e-8)
    throw ValidationError("incoherence_mu: columns not orthonormal");
  const double max_row = v.rowwise().norm().maxCoeff();
  return std::sqrt(double(q) / double(r)) * max_row;
}

// Singular values linearly spaced from 1 down to 1/kappa_target, so the
// planted condition number is exactly kappa_target (r = 1 collapses to {1}).
inline Eigen::VectorXd spaced_sigma(Index r, double kappa_target) {
  Eigen::VectorXd s(r);
  if (r == 1) {
    s(0) = 1.0;
    return s;
  }
  const double lo = 1.0 / kappa_target;
  for (Index i = 0; i < r; ++i)
    s(i) = 1.0 + (lo - 1.0) * double(i) / double(r - 1);
  return s;
}

template <typename Scalar>
GroundTruth<Scalar> generate_ground_truth(Index n, Index q, Index r,
                                          double kappa_target,
                                          std::uint64_t seed) {
  if (n < 1 || q < 1) throw DimensionError("generate_ground_truth: n, q >= 1");
  if (r < 1 || r > std::min(n, q))
    throw DimensionError("generate_ground_truth: rank outside [1, min(n, q)]");
  if (!(kappa_target >= 1.0))
    throw ParameterError("generate_ground_truth: kappa_target >= 1 required");

  GroundTruth<Scalar> gt;
  gt.n = n;
  gt.q = q;
  gt.r = r;
  gt.seed = seed;
  gt.sigma = spaced_sigma(r, kappa_target);

  auto rng_u = make_stream(seed, StreamTag::GroundTruthU);
  auto rng_v = make_stream(seed, StreamTag::GroundTruthV);
  gt.u_star = thin_qr(gaussian_matrix<Scalar>(n, r, rng_u)).q;
  gt.v_star = thin_qr(gaussian_matrix<Scalar>(q, r, rng_v)).q;
  validate(gt);
  return gt;
}

template <typename Scalar>
Matrix<Scalar> assemble_x(const GroundTruth<Scalar>& gt) {
  const Vector<Scalar> s = gt.sigma.template cast<Scalar>();
  return gt.u_star * s.asDiagonal() * gt.v_star.adjoint();
}

}  // namespace lrpr
