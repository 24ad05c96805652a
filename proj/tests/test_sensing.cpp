#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <cstring>
#include <filesystem>
#include <vector>

#include "lrpr/sensing.hpp"
#include "lrpr/serialize.hpp"

using namespace lrpr;
using C = std::complex<double>;

TEST_CASE("sample plan bookkeeping") {
  SamplePlan plan{100, 40, 3};
  CHECK(plan.partitions() == 7);
  CHECK(plan.measurements(0) == 100);
  CHECK(plan.measurements(1) == 40);
  CHECK(plan.measurements(6) == 40);
  CHECK(plan.total_per_column() == 100 + 2 * 3 * 40);
  CHECK_NOTHROW(validate(plan));

  CHECK_NOTHROW(validate(SamplePlan{10, 10, 0}));  // init-only plans are legal
  CHECK_THROWS_AS(validate(SamplePlan{0, 10, 1}), ParameterError);
  CHECK_THROWS_AS(validate(SamplePlan{10, 0, 1}), ParameterError);
  CHECK_THROWS_AS(validate(SamplePlan{10, 10, -1}), ParameterError);
}

TEST_CASE("noise spec validation") {
  CHECK_NOTHROW(validate(NoiseSpec{}));
  CHECK_NOTHROW(validate(NoiseSpec{NoiseKind::BoundedGaussianShape, 0.05}));
  CHECK_THROWS_AS(validate(NoiseSpec{NoiseKind::None, 0.1}), ParameterError);
  CHECK_THROWS_AS(validate(NoiseSpec{NoiseKind::BoundedGaussianShape, -0.1}),
                  ParameterError);
}

TEST_CASE("sensing streams are keyed by column and partition") {
  const auto a = gen_sensing<double>(8, 5, 99, 2, 1);
  CHECK(a.rows() == 8);
  CHECK(a.cols() == 5);
  CHECK(gen_sensing<double>(8, 5, 99, 2, 1) == a);  // bitwise repeatable
  CHECK(gen_sensing<double>(8, 5, 99, 3, 1) != a);
  CHECK(gen_sensing<double>(8, 5, 99, 2, 2) != a);
  CHECK(gen_sensing<double>(8, 5, 98, 2, 1) != a);

  CHECK_THROWS_AS(gen_sensing<double>(0, 5, 1, 0, 0), DimensionError);
  CHECK_THROWS_AS(gen_sensing<double>(5, 5, 1, -1, 0), IndexError);
  CHECK_THROWS_AS(gen_sensing<double>(5, 5, 1, 0, -1), IndexError);
}

TEST_CASE("gaussian moments in both fields") {
  auto rng = make_stream(5, StreamTag::Sensing, 0, 0);
  const Matrix<double> g = gaussian_matrix<double>(60, 2000, rng);
  CHECK(std::abs(g.mean()) < 0.01);
  CHECK(g.array().square().mean() == doctest::Approx(1.0).epsilon(0.02));

  auto rngc = make_stream(5, StreamTag::Sensing, 1, 0);
  const Matrix<C> gc = gaussian_matrix<C>(60, 2000, rngc);
  CHECK(gc.array().abs2().mean() == doctest::Approx(1.0).epsilon(0.02));
  CHECK(gc.real().array().square().mean() == doctest::Approx(0.5).epsilon(0.03));
  CHECK(gc.imag().array().square().mean() == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("noiseless measurements equal the recomputed magnitudes") {
  const auto gt = generate_ground_truth<double>(15, 10, 2, 2.0, 11);
  const SamplePlan plan{30, 12, 2};
  const auto ms = measure(gt, plan, NoiseSpec{}, 11);
  CHECK(ms.n == 15);
  CHECK(ms.q == 10);
  CHECK(int(ms.y.size()) == plan.partitions());
  const Eigen::MatrixXd x = assemble_x(gt);
  for (int tau = 0; tau < plan.partitions(); ++tau) {
    CHECK(ms.y[tau].rows() == plan.measurements(tau));
    CHECK(ms.y[tau].cols() == 10);
    CHECK(ms.y[tau].minCoeff() >= 0.0);
    for (Index k = 0; k < 10; ++k) {
      const auto a = gen_sensing<double>(15, plan.measurements(tau), 11, k, tau);
      const Eigen::VectorXd expect = (a.transpose() * x.col(k)).cwiseAbs();
      CHECK(ms.y[tau].col(k) == expect);  // same arithmetic path, exact
    }
  }
  CHECK(ms.noise_norms.isZero(0.0));

  const auto again = measure(gt, plan, NoiseSpec{}, 11);
  for (int tau = 0; tau < plan.partitions(); ++tau)
    CHECK(again.y[tau] == ms.y[tau]);
}

TEST_CASE("complex measurements use the adjoint") {
  const auto gt = generate_ground_truth<C>(10, 6, 2, 2.0, 13);
  const SamplePlan plan{20, 8, 1};
  const auto ms = measure(gt, plan, NoiseSpec{}, 13);
  const Matrix<C> x = assemble_x(gt);
  const auto a = gen_sensing<C>(10, 8, 13, 3, 1);
  const Eigen::VectorXd expect = (a.adjoint() * x.col(3)).cwiseAbs();
  CHECK(ms.y[1].col(3).isApprox(expect, 1e-15));
}

TEST_CASE("bounded noise hits the requested column norms exactly") {
  const auto gt = generate_ground_truth<double>(12, 8, 2, 3.0, 21);
  const SamplePlan plan{25, 10, 2};
  const NoiseSpec noise{NoiseKind::BoundedGaussianShape, 0.05};
  const auto noisy = measure(gt, plan, noise, 21);
  const auto clean = measure(gt, plan, NoiseSpec{}, 21);
  const Eigen::MatrixXd x = assemble_x(gt);
  for (int tau = 0; tau < plan.partitions(); ++tau) {
    for (Index k = 0; k < 8; ++k) {
      const Eigen::VectorXd v = noisy.y[tau].col(k) - clean.y[tau].col(k);
      const double target = 0.05 * x.col(k).norm();
      CHECK(v.norm() == doctest::Approx(target).epsilon(1e-12));
      CHECK(noisy.noise_norms(tau, k) ==
            doctest::Approx(target).epsilon(1e-12));
    }
  }
  // noise streams differ across partitions and columns
  CHECK((noisy.y[1] - clean.y[1]).col(0) != (noisy.y[2] - clean.y[2]).col(0));
}

TEST_CASE("zero columns stay exactly zero under shaped noise") {
  Matrix<double> x = Matrix<double>::Zero(6, 3);
  x.col(0).setOnes();
  const SamplePlan plan{10, 5, 1};
  const NoiseSpec noise{NoiseKind::BoundedGaussianShape, 0.1};
  const auto ms = measure_matrix(x, plan, noise, 4);
  for (int tau = 0; tau < plan.partitions(); ++tau) {
    CHECK(ms.y[tau].col(1).isZero(0.0));
    CHECK(ms.y[tau].col(2).isZero(0.0));
    CHECK(ms.noise_norms(tau, 1) == 0.0);
    CHECK(ms.y[tau].col(0).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("batch streaming matches materialized partitions") {
  const auto gt = generate_ground_truth<C>(9, 5, 2, 2.0, 31);
  const SamplePlan plan{14, 7, 1};
  const auto ms = measure(gt, plan, NoiseSpec{}, 31);
  const auto as = materialize_partition(ms, 2);
  REQUIRE(as.size() == 5);
  Index visited = 0;
  batch(ms, 2, [&](Index k, const auto& yk, const Matrix<C>& a) {
    CHECK(a == as[size_t(k)]);
    CHECK(Eigen::VectorXd(yk) == Eigen::VectorXd(ms.y[2].col(k)));
    ++visited;
  });
  CHECK(visited == 5);
  CHECK_THROWS_AS(check_partition(ms, 3), IndexError);
  CHECK_THROWS_AS(check_partition(ms, -1), IndexError);
  CHECK_THROWS_AS(materialize_partition(ms, 5), IndexError);
}

TEST_CASE("binary magnitude dump is little-endian tau-major") {
  const auto gt = generate_ground_truth<double>(6, 3, 1, 1.0, 8);
  const SamplePlan plan{4, 2, 1};
  const auto ms = measure(gt, plan, NoiseSpec{}, 8);
  const std::string path =
      (std::filesystem::temp_directory_path() / "lrpr_y_test.bin").string();
  dump_y_binary(ms, path);

  const std::string blob = read_text_file(path);
  const size_t total = size_t(plan.total_per_column()) * 3;
  REQUIRE(blob.size() == total * sizeof(double));
  std::vector<double> vals(total);
  std::memcpy(vals.data(), blob.data(), blob.size());

  size_t i = 0;
  for (int tau = 0; tau < plan.partitions(); ++tau)
    for (Index k = 0; k < 3; ++k)
      for (Index row = 0; row < plan.measurements(tau); ++row)
        CHECK(vals[i++] == ms.y[tau](row, k));
  std::filesystem::remove(path);
}

TEST_CASE("measurement metadata serializes shape and provenance") {
  const auto gt = generate_ground_truth<C>(7, 4, 2, 2.0, 77);
  const SamplePlan plan{10, 5, 2};
  const NoiseSpec noise{NoiseKind::BoundedGaussianShape, 0.01};
  const auto ms = measure(gt, plan, noise, 77);
  const json j = measurement_meta_to_json(ms);
  CHECK(j.at("n") == 7);
  CHECK(j.at("q") == 4);
  CHECK(j.at("master_seed") == 77);
  CHECK(j.at("field") == "complex");
  CHECK(j.at("plan").at("m0") == 10);
  CHECK(j.at("noise").at("eps_snr") == 0.01);
}
