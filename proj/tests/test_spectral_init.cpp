#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "lrpr/metrics.hpp"
#include "lrpr/spectral_init.hpp"

using namespace lrpr;
using C = std::complex<double>;

TEST_CASE("rank selection factories") {
  const auto th = RankSelection::threshold(0.5);
  CHECK(th.mode == RankSelection::Mode::Threshold);
  CHECK(th.omega == 0.5);
  const auto kn = RankSelection::known_rank(3);
  CHECK(kn.mode == RankSelection::Mode::KnownRank);
  CHECK(kn.rank == 3);
  // zero is the deferred marker, negative is invalid
  CHECK_NOTHROW(RankSelection::threshold(0.0));
  CHECK_NOTHROW(RankSelection::known_rank(0));
  CHECK_THROWS_AS(RankSelection::threshold(-1.0), ParameterError);
  CHECK_THROWS_AS(RankSelection::known_rank(-1), ParameterError);
}

TEST_CASE("gap rank estimate on a fixed spectrum") {
  Eigen::VectorXd ev(3);
  ev << 5.0, 3.0, 1.0;
  CHECK(estimate_rank(ev, 2.0) == 2);  // gap to the floor hits omega exactly
  CHECK(estimate_rank(ev, 2.0 + 1e-9) == 1);
  CHECK(estimate_rank(ev, 4.0) == 1);
  CHECK(estimate_rank(ev, 4.5) == 0);
  CHECK(estimate_rank(ev, 0.5) == 2);  // the smallest eigenvalue never counts

  Eigen::VectorXd flat = Eigen::VectorXd::Ones(4);
  CHECK(estimate_rank(flat, 0.1) == 0);

  Eigen::VectorXd up(2);
  up << 1.0, 2.0;
  CHECK_THROWS_AS(estimate_rank(up, 1.0), ValidationError);
  CHECK_THROWS_AS(estimate_rank(ev, 0.0), ParameterError);
  CHECK_THROWS_AS(estimate_rank(Eigen::VectorXd(), 1.0), DimensionError);
}

TEST_CASE("spectral matrix is hermitian psd and truncation-stable") {
  const auto gt = generate_ground_truth<C>(12, 8, 2, 2.0, 5);
  const auto ms = measure(gt, SamplePlan{80, 4, 0}, NoiseSpec{}, 5);
  const double mu = std::max(1.0, incoherence_mu(gt.v_star));
  const Matrix<C> yu = build_yu(ms, gt.kappa(), mu);
  CHECK(yu.rows() == 12);
  CHECK((yu - yu.adjoint()).norm() < 1e-12 * yu.norm());
  Eigen::SelfAdjointEigenSolver<Matrix<C>> es(yu);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);

  // a generous cutoff keeps every sample, reproducing the plain average
  const Matrix<C> loose = build_yu(ms, gt.kappa(), mu, 1e12);
  const Matrix<C> very_loose = build_yu(ms, gt.kappa(), mu, 1e13);
  CHECK(loose == very_loose);

  CHECK_THROWS_AS(build_yu(ms, 0.5, mu), ParameterError);
  CHECK_THROWS_AS(build_yu(ms, gt.kappa(), 0.5), ParameterError);
  CHECK_THROWS_AS(build_yu(ms, gt.kappa(), mu, -1.0), ParameterError);
}

TEST_CASE("all-zero magnitudes produce the zero matrix, not an error") {
  const Matrix<double> x = Matrix<double>::Zero(5, 3);
  const auto ms = measure_matrix(x, SamplePlan{10, 2, 0}, NoiseSpec{}, 9);
  const Matrix<double> yu = build_yu(ms, 1.0, 1.0);
  CHECK(yu == Matrix<double>::Zero(5, 5));
}

TEST_CASE("uniformly oversized magnitudes are degenerate") {
  MeasurementSet<double> ms;
  ms.plan = SamplePlan{6, 1, 0};
  ms.master_seed = 3;
  ms.n = 4;
  ms.q = 2;
  ms.y.resize(1);
  ms.y[0] = Eigen::MatrixXd::Ones(6, 2);
  ms.noise_norms = Eigen::MatrixXd::Zero(1, 2);
  // cutoff shrinks below every sample: nothing survives the gate
  CHECK_THROWS_AS(build_yu(ms, 1.0, 1.0, 1e-6), DegenerateDataError);
}

TEST_CASE("initialization recovers the planted column space") {
  int close = 0;
  for (int s = 0; s < 20; ++s) {
    const std::uint64_t seed = 600 + s;
    const auto gt = generate_ground_truth<double>(20, 50, 1, 1.0, seed);
    const auto ms = measure(gt, SamplePlan{400, 2, 0}, NoiseSpec{}, seed);
    const auto si = spectral_init(ms, 1.0, 1.0, RankSelection::known_rank(1));
    CHECK(si.r_hat == 1);
    CHECK(orthonormality_defect(si.u0) < 1e-10);
    CHECK(si.eigenvalues.size() == 20);
    for (Index i = 1; i < 20; ++i)
      CHECK(si.eigenvalues(i) <= si.eigenvalues(i - 1) + 1e-12);
    if (subspace_error(gt.u_star, si.u0, SubspaceNorm::Spectral) <= 0.15)
      ++close;
  }
  CHECK(close >= 18);
}

// The gap threshold separates signal from bulk only once m0*q is well past
// n; at thin sample sizes the bulk spread swamps omega and the estimate
// inflates (see the acceptance log for the desk-scale behaviour).
TEST_CASE("threshold mode detects the planted rank when well sampled") {
  int hits = 0;
  for (int s = 0; s < 10; ++s) {
    const std::uint64_t seed = 880 + s;
    const auto gt = generate_ground_truth<double>(20, 40, 2, 2.0, seed);
    const auto ms = measure(gt, SamplePlan{2500, 2, 0}, NoiseSpec{}, seed);
    const double omega = 1.3 * gt.sigma_min() * gt.sigma_min() / double(gt.q);
    const auto si =
        spectral_init(ms, gt.kappa(), std::max(1.0, incoherence_mu(gt.v_star)),
                      RankSelection::threshold(omega));
    if (si.r_hat == 2) ++hits;
  }
  CHECK(hits >= 9);
}

TEST_CASE("rank-one energy concentrates on the planted direction") {
  const auto gt = generate_ground_truth<double>(10, 4, 1, 1.0, 44);
  const auto ms = measure(gt, SamplePlan{2000, 1, 0}, NoiseSpec{}, 44);
  const auto si = spectral_init(ms, 1.0, std::max(1.0, incoherence_mu(gt.v_star)),
                                RankSelection::known_rank(1));
  // q=4 keeps the per-column energy lumpy, so the direction wobbles more
  // than a wide-q draw would; 0.2 still pins it to the planted line
  CHECK(subspace_error(gt.u_star, si.u0, SubspaceNorm::Spectral) <= 0.2);
  // expected top eigenvalue: ||x||^2/q plus the isotropic floor, so the
  // ratio between the top and the bulk is large at this sample size
  CHECK(si.eigenvalues(0) > 2.0 * si.eigenvalues(1));
}

TEST_CASE("spectral init selection failures") {
  const auto gt = generate_ground_truth<double>(10, 8, 2, 2.0, 12);
  const auto ms = measure(gt, SamplePlan{60, 2, 0}, NoiseSpec{}, 12);
  const double mu = std::max(1.0, incoherence_mu(gt.v_star));
  CHECK_THROWS_AS(
      spectral_init(ms, gt.kappa(), mu, RankSelection::threshold(1e9)),
      NoRankDetectedError);
  CHECK_THROWS_AS(
      spectral_init(ms, gt.kappa(), mu, RankSelection::known_rank(0)),
      ParameterError);  // the deferred marker must not reach the solver
  CHECK_THROWS_AS(
      spectral_init(ms, gt.kappa(), mu, RankSelection::known_rank(11)),
      DimensionError);
}
