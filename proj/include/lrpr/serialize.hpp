#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "lrpr/altmin.hpp"
#include "lrpr/model.hpp"
#include "lrpr/sensing.hpp"
#include "lrpr/spectral_init.hpp"

namespace lrpr {

using json = nlohmann::json;

inline Field field_from_name(const std::string& s) {
  if (s == "real") return Field::Real;
  if (s == "complex") return Field::Complex;
  throw ParameterError("unknown field name: " + s);
}

// Matrices are flattened row-major; complex entries interleave re, im.
template <typename Scalar>
json matrix_to_json(const Matrix<Scalar>& m) {
  json flat = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      if constexpr (is_complex_v<Scalar>) {
        flat.push_back(m(i, j).real());
        flat.push_back(m(i, j).imag());
      } else {
        flat.push_back(m(i, j));
      }
    }
  return flat;
}

template <typename Scalar>
Matrix<Scalar> matrix_from_json(const json& flat, Index rows, Index cols) {
  const Index per = is_complex_v<Scalar> ? 2 : 1;
  if (Index(flat.size()) != rows * cols * per)
    throw DimensionError("matrix payload has wrong length");
  Matrix<Scalar> m(rows, cols);
  Index p = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      if constexpr (is_complex_v<Scalar>) {
        const double re = flat[p++];
        const double im = flat[p++];
        m(i, j) = Scalar(re, im);
      } else {
        m(i, j) = flat[p++];
      }
    }
  return m;
}

template <typename Scalar>
json to_json(const GroundTruth<Scalar>& gt) {
  json j;
  j["type"] = "ground_truth";
  j["field"] = field_name(gt.field);
  j["n"] = gt.n;
  j["q"] = gt.q;
  j["r"] = gt.r;
  j["seed"] = gt.seed;
  j["sigma"] = std::vector<double>(gt.sigma.data(), gt.sigma.data() + gt.r);
  j["u_star"] = matrix_to_json(gt.u_star);
  j["v_star"] = matrix_to_json(gt.v_star);
  return j;
}

template <typename Scalar>
GroundTruth<Scalar> ground_truth_from_json(const json& j) {
  GroundTruth<Scalar> gt;
  if (field_from_name(j.at("field")) != gt.field)
    throw UnsupportedFieldError("ground truth payload is for the other field");
  gt.n = j.at("n");
  gt.q = j.at("q");
  gt.r = j.at("r");
  gt.seed = j.at("seed");
  const std::vector<double> s = j.at("sigma");
  gt.sigma = Eigen::Map<const Eigen::VectorXd>(s.data(), Index(s.size()));
  gt.u_star = matrix_from_json<Scalar>(j.at("u_star"), gt.n, gt.r);
  gt.v_star = matrix_from_json<Scalar>(j.at("v_star"), gt.q, gt.r);
  validate(gt);
  return gt;
}

inline json to_json(const SamplePlan& p) {
  return json{{"m0", p.m0}, {"m1", p.m1}, {"T", p.T}};
}

inline SamplePlan sample_plan_from_json(const json& j) {
  SamplePlan p;
  p.m0 = j.at("m0");
  p.m1 = j.at("m1");
  p.T = j.at("T");
  validate(p);
  return p;
}

inline json to_json(const NoiseSpec& s) {
  return json{{"kind", s.kind == NoiseKind::None ? "none" : "bounded_gaussian_shape"},
              {"eps_snr", s.eps_snr}};
}

inline NoiseSpec noise_spec_from_json(const json& j) {
  NoiseSpec s;
  const std::string kind = j.at("kind");
  if (kind == "none")
    s.kind = NoiseKind::None;
  else if (kind == "bounded_gaussian_shape")
    s.kind = NoiseKind::BoundedGaussianShape;
  else
    throw ParameterError("unknown noise kind: " + kind);
  s.eps_snr = j.at("eps_snr");
  validate(s);
  return s;
}

// Metadata only; the y payload goes to the binary dump below.
template <typename Scalar>
json measurement_meta_to_json(const MeasurementSet<Scalar>& ms) {
  json j;
  j["type"] = "measurement_set";
  j["field"] = field_name(ms.field);
  j["n"] = ms.n;
  j["q"] = ms.q;
  j["master_seed"] = ms.master_seed;
  j["plan"] = to_json(ms.plan);
  j["noise"] = to_json(ms.noise);
  j["noise_norms"] = matrix_to_json<double>(ms.noise_norms);
  return j;
}

// Raw magnitudes as little-endian float64, ordered by partition then column:
// for tau = 0..2T, for k = 0..q-1, the m(tau) entries of y_k^(tau).
template <typename Scalar>
void dump_y_binary(const MeasurementSet<Scalar>& ms, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  for (int tau = 0; tau < ms.plan.partitions(); ++tau)
    for (Index k = 0; k < ms.q; ++k)
      out.write(reinterpret_cast<const char*>(ms.y[tau].col(k).data()),
                std::streamsize(sizeof(double) * ms.y[tau].rows()));
}

inline json to_json(const RankSelection& sel) {
  json j;
  j["mode"] = sel.mode == RankSelection::Mode::Threshold ? "threshold" : "known_rank";
  if (sel.mode == RankSelection::Mode::Threshold)
    j["omega"] = sel.omega;
  else
    j["rank"] = sel.rank;
  return j;
}

inline RankSelection rank_selection_from_json(const json& j) {
  const std::string mode = j.at("mode");
  if (mode == "threshold") return RankSelection::threshold(j.at("omega"));
  if (mode == "known_rank") return RankSelection::known_rank(j.at("rank"));
  throw ParameterError("unknown rank selection mode: " + mode);
}

inline json to_json(const RunConfig& cfg) {
  json j;
  j["T"] = cfg.T;
  j["t_pr_base"] = cfg.t_pr_base;
  j["t_pr_growth"] = cfg.t_pr_growth;
  j["rank_mode"] = to_json(cfg.rank_mode);
  j["ls_tol"] = cfg.ls_tol;
  j["ls_max_iters"] = cfg.ls_max_iters;
  j["rwf_step"] = cfg.rwf_step;
  j["trunc_const"] = cfg.trunc_const;
  j["kappa_oracle"] = cfg.kappa_oracle;
  j["mu_oracle"] = cfg.mu_oracle;
  j["conv_sef_tol"] = cfg.conv_sef_tol;
  j["seed"] = cfg.seed;
  return j;
}

inline RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  cfg.T = j.value("T", cfg.T);
  cfg.t_pr_base = j.value("t_pr_base", cfg.t_pr_base);
  cfg.t_pr_growth = j.value("t_pr_growth", cfg.t_pr_growth);
  if (j.contains("rank_mode"))
    cfg.rank_mode = rank_selection_from_json(j.at("rank_mode"));
  cfg.ls_tol = j.value("ls_tol", cfg.ls_tol);
  cfg.ls_max_iters = j.value("ls_max_iters", cfg.ls_max_iters);
  cfg.rwf_step = j.value("rwf_step", cfg.rwf_step);
  cfg.trunc_const = j.value("trunc_const", cfg.trunc_const);
  cfg.kappa_oracle = j.value("kappa_oracle", cfg.kappa_oracle);
  cfg.mu_oracle = j.value("mu_oracle", cfg.mu_oracle);
  cfg.conv_sef_tol = j.value("conv_sef_tol", cfg.conv_sef_tol);
  cfg.seed = j.value("seed", cfg.seed);
  validate(cfg);
  return cfg;
}

// CSV float cell: fixed scientific form so equal doubles always render to
// equal bytes.
inline std::string csv_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

inline std::string trajectory_csv(const RunReport& rep) {
  std::string out = "iter,se2,sef,matdist_rel,t_pr_used,wall_time_ms\n";
  for (const auto& row : rep.trajectory) {
    out += std::to_string(row.iter);
    out += ',';
    out += csv_double(row.se2);
    out += ',';
    out += csv_double(row.sef);
    out += ',';
    out += csv_double(row.matdist_rel);
    out += ',';
    out += std::to_string(row.t_pr_used);
    out += ',';
    out += csv_double(row.wall_time_ms);
    out += '\n';
  }
  return out;
}

inline json to_json(const RunReport& rep) {
  json j;
  j["type"] = "run_report";
  j["field"] = field_name(rep.field);
  j["r_hat"] = rep.r_hat;
  j["converged"] = rep.converged;
  j["mu_estimate"] = rep.mu_estimate;
  j["total_time_ms"] = rep.total_time_ms;
  j["seed"] = rep.seed;
  j["plan"] = to_json(rep.plan);
  j["config"] = to_json(rep.config);
  j["warnings"] = rep.warnings;
  json rows = json::array();
  for (const auto& row : rep.trajectory)
    rows.push_back(json{{"iter", row.iter},
                        {"se2", row.se2},
                        {"sef", row.sef},
                        {"matdist_rel", row.matdist_rel},
                        {"t_pr_used", row.t_pr_used},
                        {"wall_time_ms", row.wall_time_ms}});
  j["trajectory"] = rows;
  return j;
}

template <typename Scalar>
json spectral_diag_to_json(const SpectralInit<Scalar>& si) {
  json j;
  j["type"] = "spectral_init";
  j["r_hat"] = si.r_hat;
  j["eigenvalues"] = std::vector<double>(
      si.eigenvalues.data(), si.eigenvalues.data() + si.eigenvalues.size());
  return j;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << body;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace lrpr
