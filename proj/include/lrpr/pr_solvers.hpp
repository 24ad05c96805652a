#pragma once

#include <algorithm>
#include <optional>

#include "lrpr/rng.hpp"
#include "lrpr/types.hpp"

namespace lrpr {

// One phaseless recovery instance: y_i = |a_i^H x| with the a_i stored as
// columns of a (d x m).
template <typename Scalar>
struct PrProblem {
  Eigen::VectorXd y;  // m non-negative magnitudes (noisy ones may dip below 0)
  Matrix<Scalar> a;   // d x m sensing vectors
};

template <typename Scalar>
void validate(const PrProblem<Scalar>& p) {
  if (p.a.rows() < 1) throw DimensionError("pr problem: empty dimension");
  if (p.y.size() != p.a.cols())
    throw DimensionError("pr problem: y length must match sensing count");
}

struct PrConfig {
  int iters = 1;             // exact iteration count, no early stopping
  double step = 1.0;         // RWF gradient step
  double trunc_const = 9.0;  // spectral init truncation level
};

inline void validate(const PrConfig& cfg) {
  if (cfg.iters < 1) throw ParameterError("pr config: iters >= 1");
  if (!(cfg.step > 0.0)) throw ParameterError("pr config: step > 0");
  if (!(cfg.trunc_const > 0.0))
    throw ParameterError("pr config: trunc_const > 0");
}

template <typename Scalar>
struct TsiInit {
  Vector<Scalar> g0;
  bool all_truncated = false;  // fell back to the untruncated matrix
};

// Truncated spectral initialization: top eigenvector of
// (1/m) sum y_i^2 a_i a_i^H over samples with y_i^2 <= trunc_const * mean(y^2),
// scaled to norm sqrt(mean(y^2)). The entry of largest magnitude is rotated
// positive-real so the output is unique up to eigensolver ties.
template <typename Scalar>
TsiInit<Scalar> tsi_init(const PrProblem<Scalar>& p, double trunc_const = 9.0) {
  validate(p);
  if (p.y.size() < 2) throw DimensionError("tsi_init: need at least 2 samples");
  if (!(trunc_const > 0.0)) throw ParameterError("tsi_init: trunc_const > 0");
  const Index d = p.a.rows();
  const Index m = p.a.cols();
  const Eigen::VectorXd y2 = p.y.array().square();
  const double mean_y2 = y2.mean();
  const double cutoff = trunc_const * mean_y2;

  TsiInit<Scalar> out;
  Matrix<Scalar> s = Matrix<Scalar>::Zero(d, d);
  auto accumulate = [&](bool truncate) {
    s.setZero();
    Index kept = 0;
    for (Index i = 0; i < m; ++i) {
      if (truncate && y2(i) > cutoff) continue;
      s.template selfadjointView<Eigen::Lower>().rankUpdate(p.a.col(i),
                                                            y2(i) / double(m));
      ++kept;
    }
    return kept;
  };
  if (accumulate(true) == 0) {
    out.all_truncated = true;
    accumulate(false);
  }
  s = s.template selfadjointView<Eigen::Lower>();

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(s);
  Vector<Scalar> v = es.eigenvectors().col(d - 1);  // ascending order in Eigen
  Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  v *= Eigen::numext::conj(phase(v(imax)));
  out.g0 = std::sqrt(mean_y2) * v;
  return out;
}

// Reshaped Wirtinger flow (real field): fixed-step amplitude-loss gradient
// descent x <- x - (step/m) * sum_i (a_i^T x - y_i sign(a_i^T x)) a_i.
//
// Near the solution the signs freeze and the update is plain gradient descent
// on a quadratic with Hessian (1/m) A A^T, which diverges whenever
// step * lambda_max exceeds 2. Small sample covariances (m/d modest) overshoot
// that edge often enough to matter, so the requested step is clamped to keep
// step * lambda_max <= 1.8; typical draws have lambda_max well below 1.8 and
// run at cfg.step unchanged.
template <typename Scalar>
Vector<Scalar> rwf_solve(const PrProblem<Scalar>& p, const PrConfig& cfg,
                         const std::optional<Vector<Scalar>>& init = {}) {
  if constexpr (is_complex_v<Scalar>) {
    throw UnsupportedFieldError("rwf_solve: defined for the real field only");
  } else {
    validate(p);
    validate(cfg);
    const Index m = p.a.cols();
    Vector<Scalar> x =
        init.has_value() ? *init : tsi_init(p, cfg.trunc_const).g0;
    if (x.size() != p.a.rows())
      throw DimensionError("rwf_solve: init length mismatch");
    const Matrix<Scalar> gram = (p.a * p.a.transpose()) / double(m);
    const double lambda_max =
        Eigen::SelfAdjointEigenSolver<Matrix<Scalar>>(gram,
                                                      Eigen::EigenvaluesOnly)
            .eigenvalues()
            .maxCoeff();
    const double step =
        lambda_max > 0.0 ? std::min(cfg.step, 1.8 / lambda_max) : cfg.step;
    Eigen::VectorXd res(m);
    for (int it = 0; it < cfg.iters; ++it) {
      res.noalias() = p.a.transpose() * x;
      for (Index i = 0; i < m; ++i) res(i) -= p.y(i) * phase(res(i));
      x.noalias() -= (step / double(m)) * (p.a * res);
    }
    return x;
  }
}

// Alternating minimization with truncated spectral init: alternate the phase
// estimate c = phase(A^H x) with the least-squares solve A^H x ~ c .* y.
// The QR factorization of A^H is reused across iterations since A is fixed.
template <typename Scalar>
Vector<Scalar> altmin_tsi_solve(const PrProblem<Scalar>& p, const PrConfig& cfg,
                                const std::optional<Vector<Scalar>>& init = {}) {
  validate(p);
  validate(cfg);
  const Index d = p.a.rows();
  const Index m = p.a.cols();
  if (m < d) throw UnderdeterminedError("altmin_tsi_solve: m >= d required");

  const Matrix<Scalar> ah = p.a.adjoint();  // m x d, tall
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(ah);
  if (qr.rank() < d)
    throw ConditioningError("altmin_tsi_solve: sensing matrix is rank-deficient");

  Vector<Scalar> x = init.has_value() ? *init : tsi_init(p, cfg.trunc_const).g0;
  if (x.size() != d) throw DimensionError("altmin_tsi_solve: init length mismatch");
  Vector<Scalar> rhs(m);
  for (int it = 0; it < cfg.iters; ++it) {
    const Vector<Scalar> z = ah * x;
    for (Index i = 0; i < m; ++i) rhs(i) = phase(z(i)) * Scalar(p.y(i));
    x = qr.solve(rhs);
  }
  return x;
}

// Field dispatch: RWF on the reals, alternating minimization over C.
template <typename Scalar>
Vector<Scalar> pr_solve(const PrProblem<Scalar>& p, const PrConfig& cfg,
                        const std::optional<Vector<Scalar>>& init = {}) {
  if constexpr (is_complex_v<Scalar>)
    return altmin_tsi_solve(p, cfg, init);
  else
    return rwf_solve(p, cfg, init);
}

}  // namespace lrpr
