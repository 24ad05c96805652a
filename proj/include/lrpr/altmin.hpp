#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lrpr/metrics.hpp"
#include "lrpr/pr_solvers.hpp"
#include "lrpr/qr.hpp"
#include "lrpr/sensing.hpp"
#include "lrpr/spectral_init.hpp"
#include "lrpr/threads.hpp"
#include "lrpr/types.hpp"

namespace lrpr {

struct RunConfig {
  int T = 1;             // outer iterations; must match the sample plan
  int t_pr_base = 0;     // 0 resolves to 10 + ceil(2 log2(r_hat * kappa))
  int t_pr_growth = 1;   // inner iteration budget grows by this much per step
  RankSelection rank_mode;  // defaults to known rank 0 = resolved by harness
  double ls_tol = 1e-10;       // relative normal-equation residual target
  int ls_max_iters = 200;      // CG cap; hitting it is a warning, not an error
  double rwf_step = 1.0;
  double trunc_const = 9.0;    // spectral truncation level, both init and PR
  double kappa_oracle = 1.0;   // planted values fed to the truncated init
  double mu_oracle = 1.0;
  double conv_sef_tol = 1e-6;  // final subspace error below this => converged
  std::uint64_t seed = 0;      // provenance echo of the measurement seed
};

inline void validate(const RunConfig& cfg) {
  if (cfg.T < 0) throw ParameterError("run config: T >= 0");
  if (cfg.t_pr_base < 0 || cfg.t_pr_growth < 0)
    throw ParameterError("run config: inner schedule must be non-negative");
  if (!(cfg.ls_tol > 0.0)) throw ParameterError("run config: ls_tol > 0");
  if (cfg.ls_max_iters < 1) throw ParameterError("run config: ls_max_iters >= 1");
  if (!(cfg.rwf_step > 0.0)) throw ParameterError("run config: rwf_step > 0");
  if (!(cfg.trunc_const > 0.0))
    throw ParameterError("run config: trunc_const > 0");
  if (!(cfg.kappa_oracle >= 1.0) || !(cfg.mu_oracle >= 1.0))
    throw ParameterError("run config: kappa and mu oracles must be >= 1");
  if (!(cfg.conv_sef_tol > 0.0))
    throw ParameterError("run config: conv_sef_tol > 0");
}

// Inner phase-retrieval budget at outer step t. The base grows with
// log2(r kappa) so the per-column solves start accurate enough for the first
// column-space update; the linear ramp keeps pace with the outer contraction.
inline int t_pr_schedule(const RunConfig& cfg, int r_hat, double kappa, int t) {
  int base = cfg.t_pr_base;
  if (base == 0) {
    const double rk = std::max(1.0, double(r_hat) * kappa);
    base = 10 + int(std::ceil(2.0 * std::log2(rk)));
  }
  return base + cfg.t_pr_growth * t;
}

template <typename Scalar>
struct BUpdate {
  Matrix<Scalar> b_hat;  // r x q per-column coefficients
  Matrix<Scalar> x_hat;  // n x q, x_hat = u * b_hat
};

// Per-column phase retrieval in the projected space: for each column k solve
// y_k ~ |(u^H A_k)^H b| on partition tau = t. `warm` supplies per-column
// initial guesses expressed in the basis of u; without it each solver starts
// from its own spectral init.
template <typename Scalar>
BUpdate<Scalar> update_b(const Matrix<Scalar>& u,
                         const MeasurementSet<Scalar>& ms, int t,
                         const PrConfig& pr,
                         const Matrix<Scalar>* warm = nullptr,
                         int threads = 1) {
  if (t < 1 || t > ms.plan.T)
    throw IndexError("update_b: t outside [1, T]");
  const Index r = u.cols();
  if (u.rows() != ms.n) throw DimensionError("update_b: u has wrong height");
  if (ms.plan.m1 < r)
    throw UnderdeterminedError("update_b: m1 < r measurements per column");
  if (orthonormality_defect(u) > 1e-8)
    throw ValidationError("update_b: u must have orthonormal columns");
  if (warm && (warm->rows() != r || warm->cols() != ms.q))
    throw DimensionError("update_b: warm start has wrong shape");
  validate(pr);

  BUpdate<Scalar> out;
  out.b_hat.resize(r, ms.q);
  out.x_hat.resize(ms.n, ms.q);
  const Index m1 = ms.plan.m1;
  parallel_chunks(ms.q, threads, [&](int, Index begin, Index end) {
    for (Index k = begin; k < end; ++k) {
      PrProblem<Scalar> p;
      p.a = u.adjoint() *
            gen_sensing<Scalar>(ms.n, m1, ms.master_seed, k, t);
      p.y = ms.y[t].col(k);
      std::optional<Vector<Scalar>> init;
      if (warm) init = warm->col(k);
      out.b_hat.col(k) = pr_solve<Scalar>(p, pr, init);
      out.x_hat.col(k) = u * out.b_hat.col(k);
    }
  });
  return out;
}

template <typename Scalar>
struct RowQr {
  Matrix<Scalar> r_b;  // r x r lower triangular, positive real diagonal
  Matrix<Scalar> b;    // r x q with orthonormal rows; b_hat = r_b * b
};

// Row-space renormalization b_hat = r_b * b via QR of b_hat^H.
template <typename Scalar>
RowQr<Scalar> orthonormalize_b(const Matrix<Scalar>& b_hat) {
  if (b_hat.rows() < 1 || b_hat.rows() > b_hat.cols())
    throw DimensionError("orthonormalize_b: expected a wide r x q matrix");
  const ThinQr<Scalar> f = thin_qr<Scalar>(b_hat.adjoint());
  if (qr_diag_collapse(f) < 1e-12)
    throw RankCollapseError("orthonormalize_b: coefficient matrix lost rank");
  RowQr<Scalar> out;
  out.r_b = f.r.adjoint();
  out.b = f.q.adjoint();
  return out;
}

template <typename Scalar>
struct ColQr {
  Matrix<Scalar> u;    // n x r orthonormal columns; u_hat = u * r_u
  Matrix<Scalar> r_u;  // r x r upper triangular, positive real diagonal
};

template <typename Scalar>
ColQr<Scalar> orthonormalize_u(const Matrix<Scalar>& u_hat) {
  if (u_hat.cols() < 1 || u_hat.rows() < u_hat.cols())
    throw DimensionError("orthonormalize_u: expected a tall n x r matrix");
  const ThinQr<Scalar> f = thin_qr<Scalar>(u_hat);
  if (qr_diag_collapse(f) < 1e-12)
    throw RankCollapseError("orthonormalize_u: column space estimate lost rank");
  return ColQr<Scalar>{f.q, f.r};
}

// Measurement phases of the current estimate on partition tau = T + t:
// c_ik = phase(a_ik^H x_hat_k), with phase(0) = 1.
template <typename Scalar>
Matrix<Scalar> estimate_phases(const Matrix<Scalar>& x_hat,
                               const MeasurementSet<Scalar>& ms, int t) {
  if (t < 1 || t > ms.plan.T)
    throw IndexError("estimate_phases: t outside [1, T]");
  if (x_hat.rows() != ms.n || x_hat.cols() != ms.q)
    throw DimensionError("estimate_phases: estimate has wrong shape");
  const int tau = ms.plan.T + t;
  Matrix<Scalar> c(ms.plan.m1, ms.q);
  batch(ms, tau, [&](Index k, const auto&, const Matrix<Scalar>& a) {
    const Vector<Scalar> z = a.adjoint() * x_hat.col(k);
    for (Index i = 0; i < z.size(); ++i) c(i, k) = phase(z(i));
  });
  return c;
}

// Normal-equation operator of the column-space least squares:
// W -> sum_k A_k (A_k^H W b_k) b_k^H. Self-adjoint and PSD in the Frobenius
// inner product; applied matrix-free (the n r x n r system never exists).
template <typename Scalar>
Matrix<Scalar> u_normal_op(const std::vector<Matrix<Scalar>>& as,
                           const Matrix<Scalar>& b, const Matrix<Scalar>& w,
                           int threads = 1) {
  const Index q = b.cols();
  const int chunks = threads <= 1 ? 1 : int(std::min<Index>(threads, q));
  std::vector<Matrix<Scalar>> partial(
      chunks, Matrix<Scalar>::Zero(w.rows(), w.cols()));
  parallel_chunks(q, chunks, [&](int c, Index begin, Index end) {
    for (Index k = begin; k < end; ++k) {
      const Vector<Scalar> wb = w * b.col(k);
      const Vector<Scalar> z = as[k].adjoint() * wb;
      partial[c].noalias() += (as[k] * z) * b.col(k).adjoint();
    }
  });
  for (int c = 1; c < chunks; ++c) partial[0] += partial[c];
  return partial[0];
}

template <typename Scalar>
struct UUpdate {
  Matrix<Scalar> u_hat;       // n x r solution of the normal equations
  double rel_residual = 0.0;  // achieved ||rhs - op(u_hat)|| / ||rhs||
  int cg_iters = 0;
  bool converged = false;
};

namespace detail {
template <typename Scalar>
double fro_dot(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  return Eigen::numext::real((a.array().conjugate() * b.array()).sum());
}
}  // namespace detail

// Column-space update: least squares min over W of
// sum_k ||c_k .* y_k - A_k^H W b_k||^2 on partition tau = T + t, solved by
// conjugate gradients on the normal equations.
template <typename Scalar>
UUpdate<Scalar> update_u(const MeasurementSet<Scalar>& ms, int t,
                         const Matrix<Scalar>& c_hat, const Matrix<Scalar>& b,
                         double ls_tol = 1e-10, int ls_max_iters = 200,
                         int threads = 1) {
  if (t < 1 || t > ms.plan.T) throw IndexError("update_u: t outside [1, T]");
  const Index m1 = ms.plan.m1;
  const Index r = b.rows();
  if (c_hat.rows() != m1 || c_hat.cols() != ms.q)
    throw DimensionError("update_u: phase matrix has wrong shape");
  if (b.cols() != ms.q) throw DimensionError("update_u: b has wrong width");
  if ((c_hat.cwiseAbs().array() - 1.0).abs().maxCoeff() > 1e-8)
    throw ValidationError("update_u: phases must be unit-modulus");
  if (orthonormality_defect(b.adjoint()) > 1e-8)
    throw ValidationError("update_u: b must have orthonormal rows");
  if (!(ls_tol > 0.0)) throw ParameterError("update_u: ls_tol > 0");
  if (ls_max_iters < 1) throw ParameterError("update_u: ls_max_iters >= 1");

  const int tau = ms.plan.T + t;
  const std::vector<Matrix<Scalar>> as = materialize_partition(ms, tau);

  Matrix<Scalar> rhs = Matrix<Scalar>::Zero(ms.n, r);
  for (Index k = 0; k < ms.q; ++k) {
    const Vector<Scalar> cy =
        c_hat.col(k).cwiseProduct(ms.y[tau].col(k).template cast<Scalar>());
    rhs.noalias() += (as[k] * cy) * b.col(k).adjoint();
  }

  UUpdate<Scalar> out;
  out.u_hat = Matrix<Scalar>::Zero(ms.n, r);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    out.converged = true;
    return out;
  }

  Matrix<Scalar> res = rhs;
  Matrix<Scalar> p = res;
  double rho = detail::fro_dot(res, res);
  const double target = ls_tol * rhs_norm;
  for (int it = 0; it < ls_max_iters; ++it) {
    if (std::sqrt(rho) <= target) break;
    const Matrix<Scalar> op_p = u_normal_op(as, b, p, threads);
    const double pq = detail::fro_dot(p, op_p);
    if (!(pq > 0.0)) break;  // numerically semidefinite direction; stop
    const double alpha = rho / pq;
    out.u_hat.noalias() += alpha * p;
    res.noalias() -= alpha * op_p;
    const double rho_next = detail::fro_dot(res, res);
    p = res + (rho_next / rho) * p;
    rho = rho_next;
    ++out.cg_iters;
  }
  out.rel_residual = (rhs - u_normal_op(as, b, out.u_hat, threads)).norm() / rhs_norm;
  out.converged = out.rel_residual <= ls_tol;
  return out;
}

template <typename Scalar>
struct FactoredEstimate {
  Matrix<Scalar> u;      // n x r orthonormal columns (the one pairing b_hat)
  Matrix<Scalar> b_hat;  // r x q coefficients
  Matrix<Scalar> b;      // r x q orthonormal rows
  Matrix<Scalar> x_hat;  // n x q, equals u * b_hat
};

struct IterationRecord {
  int iter = 0;
  double se2 = std::numeric_limits<double>::quiet_NaN();
  double sef = std::numeric_limits<double>::quiet_NaN();
  double matdist_rel = std::numeric_limits<double>::quiet_NaN();
  int t_pr_used = 0;
  double wall_time_ms = 0.0;
};

struct RunReport {
  std::vector<IterationRecord> trajectory;  // entry 0 is the initialization
  int r_hat = 0;
  bool converged = false;  // final sef <= conv_sef_tol (needs ground truth)
  double mu_estimate = std::numeric_limits<double>::quiet_NaN();
  double total_time_ms = 0.0;
  RunConfig config;   // provenance echo
  SamplePlan plan;
  std::uint64_t seed = 0;
  Field field = Field::Real;
  std::vector<std::string> warnings;
};

// Full alternating-minimization run. Metrics are logged only when the ground
// truth is supplied; the estimate itself never touches it.
template <typename Scalar>
RunReport run_altmin(const GroundTruth<Scalar>* gt,
                     const MeasurementSet<Scalar>& ms, const RunConfig& cfg,
                     FactoredEstimate<Scalar>* final_estimate = nullptr,
                     int threads = 1) {
  validate(cfg);
  if (cfg.T != ms.plan.T)
    throw ParameterError("run_altmin: config T differs from the sample plan");
  if (gt && (gt->n != ms.n || gt->q != ms.q))
    throw DimensionError("run_altmin: ground truth shape differs from data");

  using clock = std::chrono::steady_clock;
  const auto run_start = clock::now();
  auto ms_since = [](clock::time_point from) {
    return std::chrono::duration<double, std::milli>(clock::now() - from)
        .count();
  };

  RunReport rep;
  rep.config = cfg;
  rep.plan = ms.plan;
  rep.seed = ms.master_seed;
  rep.field = field_of<Scalar>();

  const SpectralInit<Scalar> si = spectral_init(
      ms, cfg.kappa_oracle, cfg.mu_oracle, cfg.rank_mode, cfg.trunc_const);
  rep.r_hat = si.r_hat;
  Matrix<Scalar> u = si.u0;

  Matrix<Scalar> x_star;
  bool rank_matches = false;
  if (gt) {
    x_star = assemble_x(*gt);
    rank_matches = (si.r_hat == gt->r);
    if (!rank_matches)
      rep.warnings.push_back(
          "estimated rank differs from planted rank; subspace metrics skipped");
  }

  IterationRecord init_row;
  init_row.iter = 0;
  if (gt && rank_matches) {
    init_row.se2 = subspace_error(gt->u_star, u, SubspaceNorm::Spectral);
    init_row.sef = subspace_error(gt->u_star, u, SubspaceNorm::Frobenius);
  }
  init_row.wall_time_ms = ms_since(run_start);
  rep.trajectory.push_back(init_row);

  Matrix<Scalar> x_prev;  // previous iteration's estimate, basis-free
  FactoredEstimate<Scalar> est;
  est.u = u;
  for (int t = 1; t <= cfg.T; ++t) {
    const auto iter_start = clock::now();
    const int t_pr = t_pr_schedule(cfg, rep.r_hat, cfg.kappa_oracle, t);
    PrConfig pr;
    pr.iters = t_pr;
    pr.step = cfg.rwf_step;
    pr.trunc_const = cfg.trunc_const;

    // Warm starts carry the previous column estimates, re-expressed in the
    // current basis: raw b coordinates are meaningless across the QR step.
    std::optional<Matrix<Scalar>> warm;
    if (x_prev.size() > 0) warm = u.adjoint() * x_prev;
    BUpdate<Scalar> bu =
        update_b(u, ms, t, pr, warm ? &*warm : nullptr, threads);
    x_prev = bu.x_hat;
    const RowQr<Scalar> rq = orthonormalize_b(bu.b_hat);
    const Matrix<Scalar> c_hat = estimate_phases(bu.x_hat, ms, t);
    const UUpdate<Scalar> uu = update_u(ms, t, c_hat, rq.b, cfg.ls_tol,
                                        cfg.ls_max_iters, threads);
    if (!uu.converged)
      rep.warnings.push_back(
          "iteration " + std::to_string(t) +
          ": least squares stopped at relative residual " +
          std::to_string(uu.rel_residual));
    est.u = u;  // the basis that produced this iteration's estimate
    est.b_hat = bu.b_hat;
    est.b = rq.b;
    est.x_hat = bu.x_hat;
    u = orthonormalize_u(uu.u_hat).u;

    IterationRecord row;
    row.iter = t;
    row.t_pr_used = t_pr;
    if (gt) {
      if (rank_matches) {
        row.se2 = subspace_error(gt->u_star, u, SubspaceNorm::Spectral);
        row.sef = subspace_error(gt->u_star, u, SubspaceNorm::Frobenius);
      }
      const double xn = x_star.norm();
      row.matdist_rel = matdist(x_star, bu.x_hat) / (xn > 0.0 ? xn : 1.0);
    }
    row.wall_time_ms = std::chrono::duration<double, std::milli>(clock::now() -
                                                                 iter_start)
                           .count();
    rep.trajectory.push_back(row);
  }

  if (cfg.T >= 1) {
    rep.mu_estimate = incoherence_mu(Matrix<Scalar>(est.b.adjoint()));
    const double last_sef = rep.trajectory.back().sef;
    rep.converged = std::isfinite(last_sef) && last_sef <= cfg.conv_sef_tol;
  }
  if (final_estimate) *final_estimate = est;
  rep.total_time_ms = ms_since(run_start);
  return rep;
}

// Noise floor implied by the recorded noise: the larger of
// (1/eps_v) ||V||_F / (sqrt(m1) sigma_max) and
// max_k ||v_k|| / (sqrt(m1) ||x*_k||), maximized over the altmin partitions.
// eps_v <= 0 selects the default 0.01 / kappa. Zero-norm columns are skipped
// in the second ratio and counted in *excluded.
template <typename Scalar>
double compute_noise_floor(const MeasurementSet<Scalar>& ms,
                           const GroundTruth<Scalar>& gt, double eps_v = 0.0,
                           int* excluded = nullptr) {
  validate(gt);
  if (gt.n != ms.n || gt.q != ms.q)
    throw DimensionError("compute_noise_floor: shape mismatch");
  if (eps_v <= 0.0) eps_v = 0.01 / gt.kappa();
  if (excluded) *excluded = 0;
  if (ms.plan.T < 1) return 0.0;

  const Matrix<Scalar> x = assemble_x(gt);
  const Eigen::VectorXd col_norms = x.colwise().norm();
  const double root_m = std::sqrt(double(ms.plan.m1));
  const double sigma_max = gt.sigma_max();

  double floor = 0.0;
  std::vector<bool> seen_excluded(ms.q, false);
  for (int tau = 1; tau < ms.plan.partitions(); ++tau) {
    const double vf = ms.noise_norms.row(tau).norm();
    floor = std::max(floor, vf / (eps_v * root_m * sigma_max));
    for (Index k = 0; k < ms.q; ++k) {
      if (col_norms(k) == 0.0) {
        if (excluded && !seen_excluded[k]) {
          ++*excluded;
          seen_excluded[k] = true;
        }
        continue;
      }
      floor = std::max(floor, ms.noise_norms(tau, k) / (root_m * col_norms(k)));
    }
  }
  return floor;
}

}  // namespace lrpr
