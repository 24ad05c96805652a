#pragma once

#include "lrpr/sensing.hpp"
#include "lrpr/types.hpp"

namespace lrpr {

// Rank selection for the initialization: either trust a caller-supplied rank
// or detect it from the eigenvalue profile with a gap threshold omega. A zero
// rank or omega is a deferred value the experiment harness resolves from the
// planted model (rank 0 -> planted r, omega 0 -> 1.3 sigma_min^2 / q); it is
// rejected if it reaches spectral_init unresolved.
struct RankSelection {
  enum class Mode { Threshold, KnownRank };
  Mode mode = Mode::KnownRank;
  double omega = 0.0;
  int rank = 0;

  static RankSelection threshold(double omega) {
    if (omega < 0.0) throw ParameterError("rank selection: omega >= 0");
    RankSelection s;
    s.mode = Mode::Threshold;
    s.omega = omega;
    return s;
  }
  static RankSelection known_rank(int r) {
    if (r < 0) throw ParameterError("rank selection: rank >= 0");
    RankSelection s;
    s.mode = Mode::KnownRank;
    s.rank = r;
    return s;
  }
};

// Truncated spectral matrix over the initialization partition:
// Y_U = (1/(m0 q)) sum_{ik} y_ik^2 a_ik a_ik^H, keeping only samples with
// y_ik^2 <= trunc_const * kappa^2 mu^2 * mean(y^2). Hermitian PSD by
// construction (rank-1 accumulation on the lower triangle).
template <typename Scalar>
Matrix<Scalar> build_yu(const MeasurementSet<Scalar>& ms, double kappa,
                        double mu, double trunc_const = 9.0) {
  if (!(kappa >= 1.0) || !(mu >= 1.0))
    throw ParameterError("build_yu: kappa and mu must be >= 1");
  if (!(trunc_const > 0.0)) throw ParameterError("build_yu: trunc_const > 0");
  const Index m0 = ms.plan.m0;
  const Index q = ms.q;
  const double denom = double(m0) * double(q);
  const double mean_y2 = ms.y[0].array().square().sum() / denom;
  const double cutoff = trunc_const * kappa * kappa * mu * mu * mean_y2;

  Matrix<Scalar> yu = Matrix<Scalar>::Zero(ms.n, ms.n);
  long kept = 0;
  batch(ms, 0, [&](Index /*k*/, const auto& yk, const Matrix<Scalar>& a) {
    for (Index i = 0; i < m0; ++i) {
      const double w = yk(i) * yk(i);
      if (w > cutoff) continue;
      yu.template selfadjointView<Eigen::Lower>().rankUpdate(a.col(i),
                                                             w / denom);
      ++kept;
    }
  });
  if (kept == 0)
    throw DegenerateDataError("build_yu: every sample fell above the cutoff");
  yu = yu.template selfadjointView<Eigen::Lower>();
  return yu;
}

// Largest index j (1-based into the non-increasing eigenvalue list) whose gap
// to the smallest eigenvalue reaches omega; 0 when no gap does.
inline int estimate_rank(const Eigen::VectorXd& eigenvalues, double omega) {
  const Index n = eigenvalues.size();
  if (n < 1) throw DimensionError("estimate_rank: empty spectrum");
  if (!(omega > 0.0)) throw ParameterError("estimate_rank: omega > 0");
  for (Index i = 1; i < n; ++i)
    if (eigenvalues(i) > eigenvalues(i - 1) + 1e-12)
      throw ValidationError("estimate_rank: eigenvalues must be non-increasing");
  const double floor = eigenvalues(n - 1);
  int r_hat = 0;
  for (Index j = 0; j < n; ++j)
    if (eigenvalues(j) - floor >= omega) r_hat = int(j) + 1;
  return r_hat;
}

template <typename Scalar>
struct SpectralInit {
  Matrix<Scalar> y_u;           // n x n truncated spectral matrix
  Eigen::VectorXd eigenvalues;  // length n, non-increasing
  int r_hat = 0;
  Matrix<Scalar> u0;            // n x r_hat, orthonormal columns
};

// Initialization: eigendecomposition of Y_U, rank pick, top eigenvectors.
template <typename Scalar>
SpectralInit<Scalar> spectral_init(const MeasurementSet<Scalar>& ms,
                                   double kappa, double mu,
                                   const RankSelection& sel,
                                   double trunc_const = 9.0) {
  SpectralInit<Scalar> out;
  out.y_u = build_yu(ms, kappa, mu, trunc_const);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(out.y_u);
  const Index n = ms.n;
  out.eigenvalues = es.eigenvalues().reverse();
  if (sel.mode == RankSelection::Mode::Threshold) {
    out.r_hat = estimate_rank(out.eigenvalues, sel.omega);
    if (out.r_hat == 0)
      throw NoRankDetectedError(
          "spectral_init: no eigenvalue gap above omega");
  } else {
    if (sel.rank < 1)
      throw ParameterError("spectral_init: known rank left unresolved");
    if (sel.rank > n)
      throw DimensionError("spectral_init: known rank exceeds n");
    out.r_hat = sel.rank;
  }
  out.u0 = es.eigenvectors().rowwise().reverse().leftCols(out.r_hat);
  return out;
}

}  // namespace lrpr
