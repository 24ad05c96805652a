#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "lrpr/altmin.hpp"
#include "lrpr/oracles.hpp"
#include "lrpr/serialize.hpp"
#include "lrpr/threads.hpp"

namespace lrpr {

// splitmix64-style mixing so per-trial master seeds are decorrelated while
// staying a pure function of (base, trial).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class ExperimentKind { Convergence, PhaseTransition, NoiseSweep, OracleSuite };

inline const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Convergence: return "convergence";
    case ExperimentKind::PhaseTransition: return "phase_transition";
    case ExperimentKind::NoiseSweep: return "noise_sweep";
    case ExperimentKind::OracleSuite: return "oracle_suite";
  }
  return "unknown";
}

inline ExperimentKind kind_from_name(const std::string& s) {
  if (s == "convergence") return ExperimentKind::Convergence;
  if (s == "phase_transition") return ExperimentKind::PhaseTransition;
  if (s == "noise_sweep") return ExperimentKind::NoiseSweep;
  if (s == "oracle_suite") return ExperimentKind::OracleSuite;
  throw ParameterError("unknown experiment kind: " + s);
}

// One synthetic problem instance; defaults are the reference desk-scale
// configuration used throughout the regression suite.
struct InstanceSpec {
  Index n = 60;
  Index q = 120;
  Index r = 2;
  double kappa = 2.0;
  Field field = Field::Real;
  SamplePlan plan{150, 60, 25};
  double eps_snr = 0.0;
};

struct Experiment {
  ExperimentKind kind = ExperimentKind::Convergence;
  InstanceSpec base;
  RunConfig run;                    // T is synced from the plan per trial
  std::string sweep_param;          // "", "m0", "m1", "eps_snr"
  std::vector<double> sweep_values; // strictly increasing when present
  int trials = 1;
  double success_tol = 1e-6;
  std::uint64_t seed = 0;
};

inline void validate(const Experiment& ex) {
  if (ex.trials < 1) throw ParameterError("experiment: trials >= 1");
  if (!(ex.success_tol > 0.0))
    throw ParameterError("experiment: success_tol > 0");
  if (!ex.sweep_param.empty() && ex.sweep_param != "m0" &&
      ex.sweep_param != "m1" && ex.sweep_param != "eps_snr")
    throw ParameterError("experiment: unknown sweep parameter " + ex.sweep_param);
  if (!ex.sweep_param.empty() && ex.sweep_values.empty())
    throw ParameterError("experiment: sweep values missing");
  if (ex.sweep_param.empty() && !ex.sweep_values.empty())
    throw ParameterError("experiment: sweep values without a parameter");
  for (size_t i = 1; i < ex.sweep_values.size(); ++i)
    if (!(ex.sweep_values[i] > ex.sweep_values[i - 1]))
      throw ParameterError("experiment: sweep values must be strictly increasing");
  if (ex.kind == ExperimentKind::PhaseTransition && ex.sweep_param != "m0" &&
      ex.sweep_param != "m1")
    throw ParameterError("experiment: phase transition sweeps m0 or m1");
  if (ex.kind == ExperimentKind::NoiseSweep && ex.sweep_param != "eps_snr")
    throw ParameterError("experiment: noise sweep sweeps eps_snr");
}

// One row per (grid point, trial); all CSV columns in declaration order.
struct TrialRow {
  std::string kind;
  InstanceSpec inst;
  std::string sweep_param;
  double sweep_value = std::numeric_limits<double>::quiet_NaN();
  int trial = 0;
  std::uint64_t seed = 0;
  double mu_measured = std::numeric_limits<double>::quiet_NaN();
  int r_hat = 0;
  double final_se2 = std::numeric_limits<double>::quiet_NaN();
  double final_sef = std::numeric_limits<double>::quiet_NaN();
  double final_matdist_rel = std::numeric_limits<double>::quiet_NaN();
  double noise_floor = 0.0;
  bool success = false;
  std::string error;
  double wall_time_ms = 0.0;
};

inline const std::string& trial_csv_header() {
  static const std::string header =
      "kind,n,q,r,kappa,field,m0,m1,T,eps_snr,sweep_param,sweep_value,trial,"
      "seed,mu_measured,r_hat,final_se2,final_sef,final_matdist_rel,"
      "noise_floor,success,error,wall_time_ms";
  return header;
}

inline std::string trial_csv_row(const TrialRow& row) {
  auto sanitize = [](std::string s) {
    for (char& c : s)
      if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
  };
  std::string out;
  out += row.kind;
  out += ',' + std::to_string(row.inst.n);
  out += ',' + std::to_string(row.inst.q);
  out += ',' + std::to_string(row.inst.r);
  out += ',' + csv_double(row.inst.kappa);
  out += ',';
  out += field_name(row.inst.field);
  out += ',' + std::to_string(row.inst.plan.m0);
  out += ',' + std::to_string(row.inst.plan.m1);
  out += ',' + std::to_string(row.inst.plan.T);
  out += ',' + csv_double(row.inst.eps_snr);
  out += ',' + row.sweep_param;
  out += ',' + csv_double(row.sweep_value);
  out += ',' + std::to_string(row.trial);
  out += ',' + std::to_string(row.seed);
  out += ',' + csv_double(row.mu_measured);
  out += ',' + std::to_string(row.r_hat);
  out += ',' + csv_double(row.final_se2);
  out += ',' + csv_double(row.final_sef);
  out += ',' + csv_double(row.final_matdist_rel);
  out += ',' + csv_double(row.noise_floor);
  out += ',' + std::string(row.success ? "1" : "0");
  out += ',' + sanitize(row.error);
  out += ',' + csv_double(row.wall_time_ms);
  return out;
}

struct ExperimentResult {
  std::vector<TrialRow> rows;  // (grid point, trial) order
  json summary;
  std::string csv;             // header + one line per row
};

namespace detail {

inline double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(),
                         [](double x) { return !std::isfinite(x); }),
          v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Window-3 running median with clamped edges; used to read transition curves.
inline std::vector<double> median_smooth3(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    double a = v[i > 0 ? i - 1 : i];
    double b = v[i];
    double c = v[i + 1 < v.size() ? i + 1 : i];
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    out[i] = b;
  }
  return out;
}

// Least squares slope of log10(y) against log10(x).
inline double loglog_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += std::log10(x[i]);
    my += std::log10(y[i]);
  }
  mx /= double(n);
  my /= double(n);
  double num = 0, den = 0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = std::log10(x[i]) - mx;
    num += dx * (std::log10(y[i]) - my);
    den += dx * dx;
  }
  return num / den;
}

template <typename Scalar>
TrialRow run_one_trial(const Experiment& ex, const InstanceSpec& inst,
                       double sweep_value, int trial) {
  const auto start = std::chrono::steady_clock::now();
  TrialRow row;
  row.kind = kind_name(ex.kind);
  row.inst = inst;
  row.sweep_param = ex.sweep_param;
  row.sweep_value = sweep_value;
  row.trial = trial;
  row.seed = mix_seed(ex.seed, std::uint64_t(trial));
  try {
    const GroundTruth<Scalar> gt = generate_ground_truth<Scalar>(
        inst.n, inst.q, inst.r, inst.kappa, row.seed);
    row.mu_measured = incoherence_mu(gt.v_star);

    NoiseSpec noise;
    if (inst.eps_snr > 0.0) {
      noise.kind = NoiseKind::BoundedGaussianShape;
      noise.eps_snr = inst.eps_snr;
    }
    const MeasurementSet<Scalar> ms = measure(gt, inst.plan, noise, row.seed);

    RunConfig cfg = ex.run;
    cfg.T = inst.plan.T;
    cfg.seed = row.seed;
    cfg.kappa_oracle = gt.kappa();
    cfg.mu_oracle = std::max(1.0, row.mu_measured);
    if (cfg.rank_mode.mode == RankSelection::Mode::KnownRank) {
      if (cfg.rank_mode.rank == 0) cfg.rank_mode.rank = int(inst.r);
    } else if (cfg.rank_mode.omega == 0.0) {
      cfg.rank_mode.omega =
          1.3 * gt.sigma_min() * gt.sigma_min() / double(inst.q);
    }

    const RunReport rep = run_altmin<Scalar>(&gt, ms, cfg);
    row.r_hat = rep.r_hat;
    row.final_se2 = rep.trajectory.back().se2;
    row.final_sef = rep.trajectory.back().sef;
    row.final_matdist_rel = rep.trajectory.back().matdist_rel;
    if (inst.eps_snr > 0.0) row.noise_floor = compute_noise_floor(ms, gt);
    row.success = std::isfinite(row.final_matdist_rel) &&
                  row.final_matdist_rel <= ex.success_tol;
  } catch (const std::exception& e) {
    row.error = e.what();
    row.success = false;
  }
  row.wall_time_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return row;
}

// Grid runner shared by the sweep kinds. Trials are independent and may run
// on worker threads; rows land in (grid, trial) order either way.
inline ExperimentResult run_grid(const Experiment& ex, int threads) {
  validate(ex);
  std::vector<InstanceSpec> grid;
  std::vector<double> values;
  if (ex.sweep_param.empty()) {
    grid.push_back(ex.base);
    values.push_back(std::numeric_limits<double>::quiet_NaN());
  } else {
    for (double v : ex.sweep_values) {
      InstanceSpec inst = ex.base;
      if (ex.sweep_param == "m0")
        inst.plan.m0 = int(std::lround(v));
      else if (ex.sweep_param == "m1")
        inst.plan.m1 = int(std::lround(v));
      else
        inst.eps_snr = v;
      grid.push_back(inst);
      values.push_back(v);
    }
  }

  ExperimentResult res;
  res.rows.resize(grid.size() * size_t(ex.trials));
  parallel_chunks(Index(res.rows.size()), threads,
                  [&](int, Index begin, Index end) {
                    for (Index j = begin; j < end; ++j) {
                      const size_t gi = size_t(j) / size_t(ex.trials);
                      const int trial = int(size_t(j) % size_t(ex.trials));
                      if (ex.base.field == Field::Real)
                        res.rows[j] = run_one_trial<double>(
                            ex, grid[gi], values[gi], trial);
                      else
                        res.rows[j] = run_one_trial<std::complex<double>>(
                            ex, grid[gi], values[gi], trial);
                    }
                  });

  res.csv = trial_csv_header() + "\n";
  for (const auto& row : res.rows) res.csv += trial_csv_row(row) + "\n";

  json points = json::array();
  std::vector<double> fractions;
  std::vector<double> medians;
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    std::vector<double> md, sef;
    int ok = 0, errors = 0;
    for (int t = 0; t < ex.trials; ++t) {
      const TrialRow& row = res.rows[gi * size_t(ex.trials) + size_t(t)];
      md.push_back(row.final_matdist_rel);
      sef.push_back(row.final_sef);
      ok += row.success ? 1 : 0;
      errors += row.error.empty() ? 0 : 1;
    }
    const double frac = double(ok) / double(ex.trials);
    fractions.push_back(frac);
    medians.push_back(median(md));
    points.push_back(json{{"sweep_param", ex.sweep_param},
                          {"sweep_value", values[gi]},
                          {"success_fraction", frac},
                          {"median_final_matdist_rel", median(md)},
                          {"median_final_sef", median(sef)},
                          {"errors", errors}});
  }
  res.summary["type"] = "experiment_summary";
  res.summary["kind"] = kind_name(ex.kind);
  res.summary["trials"] = ex.trials;
  res.summary["success_tol"] = ex.success_tol;
  res.summary["seed"] = ex.seed;
  res.summary["grid"] = points;
  if (ex.kind == ExperimentKind::NoiseSweep && values.size() >= 2)
    res.summary["loglog_slope"] = loglog_slope(values, medians);
  if (ex.kind == ExperimentKind::PhaseTransition)
    res.summary["smoothed_success"] = median_smooth3(fractions);
  return res;
}

}  // namespace detail

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

inline std::vector<CriterionResult> run_acceptance(int threads = 1,
                                                   std::ostream* log = nullptr);

// Runs an experiment description end to end. The oracle suite kind maps each
// acceptance criterion onto one row so its results flow through the same CSV
// pipeline as the sweeps.
inline ExperimentResult run_experiment(const Experiment& ex, int threads = 1) {
  if (ex.kind != ExperimentKind::OracleSuite)
    return detail::run_grid(ex, threads);
  ExperimentResult res;
  const std::vector<CriterionResult> crit = run_acceptance(threads);
  res.csv = trial_csv_header() + "\n";
  json items = json::array();
  for (const auto& c : crit) {
    TrialRow row;
    row.kind = kind_name(ex.kind);
    row.inst = ex.base;
    row.trial = c.id;
    row.success = c.pass;
    row.error = c.pass ? "" : c.detail;
    row.wall_time_ms = c.seconds * 1000.0;
    res.rows.push_back(row);
    res.csv += trial_csv_row(row) + "\n";
    items.push_back(json{{"id", c.id},
                         {"name", c.name},
                         {"pass", c.pass},
                         {"detail", c.detail},
                         {"seconds", c.seconds}});
  }
  res.summary["type"] = "experiment_summary";
  res.summary["kind"] = kind_name(ex.kind);
  res.summary["criteria"] = items;
  return res;
}

inline json to_json(const InstanceSpec& inst) {
  json j;
  j["n"] = inst.n;
  j["q"] = inst.q;
  j["r"] = inst.r;
  j["kappa"] = inst.kappa;
  j["field"] = field_name(inst.field);
  j["plan"] = to_json(inst.plan);
  j["eps_snr"] = inst.eps_snr;
  return j;
}

inline InstanceSpec instance_from_json(const json& j) {
  InstanceSpec inst;
  inst.n = j.value("n", inst.n);
  inst.q = j.value("q", inst.q);
  inst.r = j.value("r", inst.r);
  inst.kappa = j.value("kappa", inst.kappa);
  if (j.contains("field")) inst.field = field_from_name(j.at("field"));
  if (j.contains("plan")) inst.plan = sample_plan_from_json(j.at("plan"));
  inst.eps_snr = j.value("eps_snr", inst.eps_snr);
  return inst;
}

inline json to_json(const Experiment& ex) {
  json j;
  j["kind"] = kind_name(ex.kind);
  j["base"] = to_json(ex.base);
  j["run"] = to_json(ex.run);
  if (!ex.sweep_param.empty())
    j["sweep"] = json{{"param", ex.sweep_param}, {"values", ex.sweep_values}};
  j["trials"] = ex.trials;
  j["success_tol"] = ex.success_tol;
  j["seed"] = ex.seed;
  return j;
}

inline Experiment experiment_from_json(const json& j) {
  Experiment ex;
  ex.kind = kind_from_name(j.value("kind", std::string("convergence")));
  if (j.contains("base")) ex.base = instance_from_json(j.at("base"));
  if (j.contains("run")) ex.run = run_config_from_json(j.at("run"));
  if (j.contains("sweep")) {
    ex.sweep_param = j.at("sweep").at("param");
    ex.sweep_values = j.at("sweep").at("values").get<std::vector<double>>();
  }
  ex.trials = j.value("trials", ex.trials);
  ex.success_tol = j.value("success_tol", ex.success_tol);
  ex.seed = j.value("seed", ex.seed);
  if (ex.kind != ExperimentKind::OracleSuite) validate(ex);
  return ex;
}

}  // namespace lrpr

#include "lrpr/acceptance.hpp"
