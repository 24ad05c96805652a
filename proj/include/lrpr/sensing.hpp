#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lrpr/model.hpp"
#include "lrpr/rng.hpp"
#include "lrpr/types.hpp"

namespace lrpr {

// Sample-splitting layout: partition 0 feeds the spectral initialization,
// partitions 1..T the per-column phase retrieval steps, T+1..2T the column
// space updates. Fresh randomness per partition.
struct SamplePlan {
  int m0 = 0;
  int m1 = 0;
  int T = 0;

  int partitions() const { return 1 + 2 * T; }
  int measurements(int tau) const { return tau == 0 ? m0 : m1; }
  long total_per_column() const { return long(m0) + 2L * T * m1; }
};

inline void validate(const SamplePlan& plan) {
  if (plan.m0 < 1 || plan.m1 < 1)
    throw ParameterError("sample plan: m0 and m1 must be >= 1");
  if (plan.T < 0) throw ParameterError("sample plan: T must be >= 0");
}

enum class NoiseKind { None, BoundedGaussianShape };

// Additive real noise on the magnitudes. BoundedGaussianShape draws a
// Gaussian direction and rescales it so ||v_k|| = eps_snr * ||x*_k|| exactly.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double eps_snr = 0.0;
};

inline void validate(const NoiseSpec& noise) {
  if (noise.eps_snr < 0.0) throw ParameterError("noise: eps_snr must be >= 0");
  if (noise.kind == NoiseKind::None && noise.eps_snr != 0.0)
    throw ParameterError("noise: eps_snr must be 0 when kind is None");
}

// Phaseless measurements y_k = |A_k^H x*_k| (+ noise) for every partition.
// Only the real magnitudes are stored; each sensing matrix A_k^(tau) is
// regenerated on demand from (master_seed, k, tau).
template <typename Scalar>
struct MeasurementSet {
  SamplePlan plan;
  NoiseSpec noise;
  std::uint64_t master_seed = 0;
  Index n = 0;
  Index q = 0;
  std::vector<Eigen::MatrixXd> y;  // per tau: m(tau) x q, y entries
  Eigen::MatrixXd noise_norms;     // partitions() x q, realized ||v_k||

  static constexpr Field field = field_of<Scalar>();
};

// Deterministic stand-alone generator for A_k^(tau); n x m with i.i.d.
// standard Gaussian columns in the requested field.
template <typename Scalar>
Matrix<Scalar> gen_sensing(Index n, Index m, std::uint64_t master_seed,
                           Index k, int tau) {
  if (n < 1 || m < 1) throw DimensionError("gen_sensing: n, m >= 1 required");
  if (k < 0 || tau < 0) throw IndexError("gen_sensing: negative k or tau");
  auto rng = make_stream(master_seed, StreamTag::Sensing,
                         static_cast<std::uint64_t>(k),
                         static_cast<std::uint64_t>(tau));
  return gaussian_matrix<Scalar>(n, m, rng);
}

// Measures an explicit n x q matrix column by column. The factored-model
// entry point below delegates here; tests use this directly for degenerate
// fixtures (zero columns etc.).
template <typename Scalar>
MeasurementSet<Scalar> measure_matrix(const Matrix<Scalar>& x,
                                      const SamplePlan& plan,
                                      const NoiseSpec& noise,
                                      std::uint64_t master_seed) {
  validate(plan);
  validate(noise);
  MeasurementSet<Scalar> ms;
  ms.plan = plan;
  ms.noise = noise;
  ms.master_seed = master_seed;
  ms.n = x.rows();
  ms.q = x.cols();
  ms.y.resize(plan.partitions());
  ms.noise_norms = Eigen::MatrixXd::Zero(plan.partitions(), ms.q);
  for (int tau = 0; tau < plan.partitions(); ++tau) {
    const Index m = plan.measurements(tau);
    ms.y[tau].resize(m, ms.q);
    for (Index k = 0; k < ms.q; ++k) {
      const Matrix<Scalar> a =
          gen_sensing<Scalar>(ms.n, m, master_seed, k, tau);
      Eigen::VectorXd yk = (a.adjoint() * x.col(k)).cwiseAbs();
      if (noise.kind == NoiseKind::BoundedGaussianShape && noise.eps_snr > 0) {
        auto rng = make_stream(master_seed, StreamTag::Noise,
                               static_cast<std::uint64_t>(k),
                               static_cast<std::uint64_t>(tau));
        Eigen::VectorXd v = gaussian_vector<double>(m, rng);
        const double g = v.norm();
        const double target = noise.eps_snr * x.col(k).norm();
        v *= (g > 0.0 ? target / g : 0.0);
        yk += v;  // noisy magnitudes may go negative; kept as-is
        ms.noise_norms(tau, k) = v.norm();
      }
      ms.y[tau].col(k) = yk;
    }
  }
  return ms;
}

template <typename Scalar>
MeasurementSet<Scalar> measure(const GroundTruth<Scalar>& gt,
                               const SamplePlan& plan, const NoiseSpec& noise,
                               std::uint64_t master_seed) {
  validate(gt);
  return measure_matrix<Scalar>(assemble_x(gt), plan, noise, master_seed);
}

template <typename Scalar>
void check_partition(const MeasurementSet<Scalar>& ms, int tau) {
  if (tau < 0 || tau >= ms.plan.partitions())
    throw IndexError("partition index out of range");
}

// Streams (k, y_k, A_k) over one partition, regenerating each A_k in turn so
// only one sensing matrix is alive at a time.
template <typename Scalar, typename F>
void batch(const MeasurementSet<Scalar>& ms, int tau, F&& f) {
  check_partition(ms, tau);
  const Index m = ms.plan.measurements(tau);
  for (Index k = 0; k < ms.q; ++k) {
    const Matrix<Scalar> a =
        gen_sensing<Scalar>(ms.n, m, ms.master_seed, k, tau);
    f(k, ms.y[tau].col(k), a);
  }
}

// Materialized variant of batch() for callers that sweep the partition many
// times (the column-space update applies its operator once per CG step).
template <typename Scalar>
std::vector<Matrix<Scalar>> materialize_partition(
    const MeasurementSet<Scalar>& ms, int tau) {
  check_partition(ms, tau);
  std::vector<Matrix<Scalar>> as;
  as.reserve(ms.q);
  const Index m = ms.plan.measurements(tau);
  for (Index k = 0; k < ms.q; ++k)
    as.push_back(gen_sensing<Scalar>(ms.n, m, ms.master_seed, k, tau));
  return as;
}

}  // namespace lrpr
