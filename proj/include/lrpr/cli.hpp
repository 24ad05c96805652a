#pragma once

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lrpr/harness.hpp"

namespace lrpr {

namespace cli_detail {

// Resolves the deferred rank-mode values against a planted model, mirroring
// what the sweep harness does per trial.
template <typename Scalar>
RunConfig resolve_config(RunConfig cfg, const InstanceSpec& inst,
                         const GroundTruth<Scalar>& gt, std::uint64_t seed) {
  cfg.T = inst.plan.T;
  cfg.seed = seed;
  cfg.kappa_oracle = gt.kappa();
  cfg.mu_oracle = std::max(1.0, incoherence_mu(gt.v_star));
  if (cfg.rank_mode.mode == RankSelection::Mode::KnownRank) {
    if (cfg.rank_mode.rank == 0) cfg.rank_mode.rank = int(inst.r);
  } else if (cfg.rank_mode.omega == 0.0) {
    cfg.rank_mode.omega = 1.3 * gt.sigma_min() * gt.sigma_min() / double(inst.q);
  }
  return cfg;
}

inline NoiseSpec noise_of(const InstanceSpec& inst) {
  NoiseSpec noise;
  if (inst.eps_snr > 0.0) {
    noise.kind = NoiseKind::BoundedGaussianShape;
    noise.eps_snr = inst.eps_snr;
  }
  return noise;
}

template <typename Scalar>
int do_run(const InstanceSpec& inst, const RunConfig& raw_cfg,
           std::uint64_t seed, const std::string& out_dir, int threads,
           bool as_json) {
  const GroundTruth<Scalar> gt = generate_ground_truth<Scalar>(
      inst.n, inst.q, inst.r, inst.kappa, seed);
  const MeasurementSet<Scalar> ms =
      measure(gt, inst.plan, noise_of(inst), seed);
  const RunConfig cfg = resolve_config(raw_cfg, inst, gt, seed);
  const RunReport rep = run_altmin<Scalar>(&gt, ms, cfg, nullptr, threads);

  json summary = to_json(rep);
  if (inst.eps_snr > 0.0)
    summary["noise_floor"] = compute_noise_floor(ms, gt);
  write_text_file(out_dir + "/trajectory.csv", trajectory_csv(rep));
  write_text_file(out_dir + "/run_report.json", summary.dump(2) + "\n");

  if (as_json) {
    std::cout << summary.dump() << std::endl;
  } else {
    const auto& last = rep.trajectory.back();
    std::cout << "r_hat=" << rep.r_hat << " final_sef=" << last.sef
              << " final_matdist_rel=" << last.matdist_rel
              << " converged=" << (rep.converged ? "yes" : "no")
              << " wall_ms=" << rep.total_time_ms << "\n"
              << "wrote " << out_dir << "/trajectory.csv and "
              << out_dir << "/run_report.json" << std::endl;
  }
  return 0;
}

template <typename Scalar>
int do_gen(const InstanceSpec& inst, std::uint64_t seed,
           const std::string& out_dir, bool dump_y, bool as_json) {
  const GroundTruth<Scalar> gt = generate_ground_truth<Scalar>(
      inst.n, inst.q, inst.r, inst.kappa, seed);
  const MeasurementSet<Scalar> ms =
      measure(gt, inst.plan, noise_of(inst), seed);
  write_text_file(out_dir + "/ground_truth.json", to_json(gt).dump(2) + "\n");
  write_text_file(out_dir + "/measurements.json",
                  measurement_meta_to_json(ms).dump(2) + "\n");
  if (dump_y) dump_y_binary(ms, out_dir + "/y.bin");
  json info{{"n", inst.n},       {"q", inst.q},
            {"r", inst.r},       {"field", field_name(inst.field)},
            {"seed", seed},      {"mu", incoherence_mu(gt.v_star)},
            {"dumped_y", dump_y}};
  if (as_json)
    std::cout << info.dump() << std::endl;
  else
    std::cout << "wrote ground_truth.json, measurements.json"
              << (dump_y ? ", y.bin" : "") << " to " << out_dir << std::endl;
  return 0;
}

}  // namespace cli_detail

// Entry point behind main(); returns 0 on success, 1 on usage errors, 2 on
// runtime failures (and oracle criterion failures).
inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"low rank phase retrieval from per-column magnitude projections"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int threads = 1;
  std::string field = "real";
  bool as_json = false;
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--field", field, "scalar field")
      ->check(CLI::IsMember({"real", "complex"}));
  app.add_flag("--json", as_json, "machine readable stdout");

  InstanceSpec inst;
  RunConfig cfg;
  std::string config_path;
  std::string rank_mode = "known";
  double omega = 0.0;
  bool dump_y = false;

  auto add_instance_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--n", inst.n, "signal dimension");
    cmd->add_option("--q", inst.q, "number of columns");
    cmd->add_option("--r", inst.r, "planted rank");
    cmd->add_option("--kappa", inst.kappa, "planted condition number");
    cmd->add_option("--m0", inst.plan.m0, "init measurements per column");
    cmd->add_option("--m1", inst.plan.m1, "per-iteration measurements per column");
    cmd->add_option("--T", inst.plan.T, "outer iterations");
    cmd->add_option("--eps-snr", inst.eps_snr, "relative noise level");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "single reconstruction run");
  run_cmd->fallthrough();
  add_instance_flags(run_cmd);
  run_cmd->add_option("--rank-mode", rank_mode, "rank selection")
      ->check(CLI::IsMember({"known", "threshold"}));
  run_cmd->add_option("--omega", omega, "threshold gap (0 = derive)");
  run_cmd->add_option("--t-pr-base", cfg.t_pr_base, "inner iteration base");
  run_cmd->add_option("--t-pr-growth", cfg.t_pr_growth, "inner iteration ramp");
  run_cmd->add_option("--ls-tol", cfg.ls_tol, "least squares tolerance");
  run_cmd->add_option("--ls-max-iters", cfg.ls_max_iters, "least squares cap");
  run_cmd->add_option("--rwf-step", cfg.rwf_step, "gradient step");
  run_cmd->add_option("--trunc-const", cfg.trunc_const, "spectral truncation");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "trial grid from a config");
  sweep_cmd->fallthrough();
  std::string sweep_config;
  sweep_cmd->add_option("--config", sweep_config, "experiment JSON")->required();

  CLI::App* oracle_cmd = app.add_subcommand("oracle", "acceptance property suite");
  oracle_cmd->fallthrough();

  CLI::App* gen_cmd = app.add_subcommand("gen", "dump a planted instance");
  gen_cmd->fallthrough();
  add_instance_flags(gen_cmd);
  gen_cmd->add_flag("--dump-y", dump_y, "write raw magnitudes as y.bin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\nsee --help for usage" << std::endl;
    return 1;
  }

  try {
    std::filesystem::create_directories(out_dir);
    const bool complex_field = field == "complex";

    // a config file seeds the defaults; explicitly passed flags win
    auto load_config = [&](CLI::App* cmd) {
      if (config_path.empty()) return;
      const json j = json::parse(read_text_file(config_path));
      if (j.contains("base")) {
        const InstanceSpec file_inst = instance_from_json(j.at("base"));
        auto keep = [&](const char* flag, auto member, auto file_value) {
          if (cmd->count(flag) == 0) inst.*member = file_value;
        };
        keep("--n", &InstanceSpec::n, file_inst.n);
        keep("--q", &InstanceSpec::q, file_inst.q);
        keep("--r", &InstanceSpec::r, file_inst.r);
        keep("--kappa", &InstanceSpec::kappa, file_inst.kappa);
        keep("--eps-snr", &InstanceSpec::eps_snr, file_inst.eps_snr);
        if (cmd->count("--m0") == 0) inst.plan.m0 = file_inst.plan.m0;
        if (cmd->count("--m1") == 0) inst.plan.m1 = file_inst.plan.m1;
        if (cmd->count("--T") == 0) inst.plan.T = file_inst.plan.T;
        if (app.count("--field") == 0) inst.field = file_inst.field;
      }
      if (j.contains("run")) {
        const RunConfig file_cfg = run_config_from_json(j.at("run"));
        if (cmd->count("--t-pr-base") == 0) cfg.t_pr_base = file_cfg.t_pr_base;
        if (cmd->count("--t-pr-growth") == 0)
          cfg.t_pr_growth = file_cfg.t_pr_growth;
        if (cmd->count("--ls-tol") == 0) cfg.ls_tol = file_cfg.ls_tol;
        if (cmd->count("--ls-max-iters") == 0)
          cfg.ls_max_iters = file_cfg.ls_max_iters;
        if (cmd->count("--rwf-step") == 0) cfg.rwf_step = file_cfg.rwf_step;
        if (cmd->count("--trunc-const") == 0)
          cfg.trunc_const = file_cfg.trunc_const;
        if (cmd->count("--rank-mode") == 0 && cmd->count("--omega") == 0)
          cfg.rank_mode = file_cfg.rank_mode;
      }
    };

    if (run_cmd->parsed()) {
      load_config(run_cmd);
      if (app.count("--field") > 0 || config_path.empty())
        inst.field = complex_field ? Field::Complex : Field::Real;
      if (run_cmd->count("--rank-mode") > 0 || run_cmd->count("--omega") > 0)
        cfg.rank_mode = rank_mode == "known" ? RankSelection::known_rank(0)
                                             : RankSelection::threshold(omega);
      return inst.field == Field::Complex
                 ? cli_detail::do_run<std::complex<double>>(inst, cfg, seed,
                                                            out_dir, threads,
                                                            as_json)
                 : cli_detail::do_run<double>(inst, cfg, seed, out_dir, threads,
                                              as_json);
    }
    if (sweep_cmd->parsed()) {
      Experiment ex = experiment_from_json(json::parse(read_text_file(sweep_config)));
      if (app.count("--seed") > 0) ex.seed = seed;
      const ExperimentResult res = run_experiment(ex, threads);
      write_text_file(out_dir + "/sweep.csv", res.csv);
      write_text_file(out_dir + "/summary.json", res.summary.dump(2) + "\n");
      if (as_json)
        std::cout << res.summary.dump() << std::endl;
      else
        std::cout << "wrote " << res.rows.size() << " rows to " << out_dir
                  << "/sweep.csv" << std::endl;
      return 0;
    }
    if (oracle_cmd->parsed()) {
      std::vector<CriterionResult> crit;
      if (as_json) {
        crit = run_acceptance(threads);
        json arr = json::array();
        for (const auto& c : crit)
          arr.push_back(json{{"id", c.id},
                             {"name", c.name},
                             {"pass", c.pass},
                             {"detail", c.detail},
                             {"seconds", c.seconds}});
        std::cout << arr.dump() << std::endl;
      } else {
        crit = run_acceptance(threads, &std::cout);
      }
      for (const auto& c : crit)
        if (!c.pass) return 2;
      return 0;
    }
    if (gen_cmd->parsed()) {
      load_config(gen_cmd);
      if (app.count("--field") > 0 || config_path.empty())
        inst.field = complex_field ? Field::Complex : Field::Real;
      return inst.field == Field::Complex
                 ? cli_detail::do_gen<std::complex<double>>(inst, seed, out_dir,
                                                            dump_y, as_json)
                 : cli_detail::do_gen<double>(inst, seed, out_dir, dump_y,
                                              as_json);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 1;
}

}  // namespace lrpr
