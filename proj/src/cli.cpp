#include "mdpm/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mdpm/verification.hpp"

namespace mdpm {

namespace fs = std::filesystem;

RunSummary run_simulation(const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelConfig cfg = load_model_config(opt.config_path);
  if (!opt.output_dir.empty()) cfg.output_dir = opt.output_dir;
  if (opt.vtk_every >= 0) cfg.vtk_every = opt.vtk_every;
  const Model model = build_model(cfg);
  fs::create_directories(cfg.output_dir);

  nlohmann::json meta;
  meta["geometry"] = fs::absolute(resolve_data_path(cfg.geometry_file)).string();
  meta["h"] = cfg.h;
  meta["dt"] = cfg.dt;
  meta["steps"] = cfg.steps();
  std::ofstream(fs::path(cfg.output_dir) / "run.json") << meta.dump(2) << '\n';

  RunSummary sum;
  sum.config = opt.config_path;
  sum.dt = cfg.dt;
  sum.nu = cfg.nu;
  PoroState initial = zero_state(model.sys);
  sum.initial_mass = total_fluid_mass(initial, model.sys);
  double prev_mass = sum.initial_mass;
  write_state_csv(initial, cfg.output_dir, 0);

  auto observe = [&](const PoroState& s, const StepStats& st, int k) {
    write_state_csv(s, cfg.output_dir, k);
    if (cfg.vtk_every > 0 && k % cfg.vtk_every == 0) {
      write_vtk(*model.mesh, s.u, s.p, s.t, step_file(cfg.output_dir, "snapshot", k, "vtk"));
    }
    const double mass = total_fluid_mass(s, model.sys);
    sum.max_mass_drift = std::max(sum.max_mass_drift, std::abs(mass - prev_mass));
    prev_mass = mass;
    sum.final_mass = mass;
    sum.newton_iterations.push_back(st.newton_iterations);
    if (st.fallback) ++sum.fallback_steps;
    sum.rate_cap_warning = sum.rate_cap_warning || st.rate_cap_warning;
    sum.steps = k;
  };
  Trajectory traj;
  try {
    traj = simulate(model.sys, make_forcing(cfg.forcing, *model.ops), cfg.steps(), initial, observe);
  } catch (const SolverError&) {
    write_summary(sum, (fs::path(cfg.output_dir) / "summary.json").string());
    throw;
  }
  sum.weighted_norm = weighted_norm(traj, model.sys, cfg.nu);
  sum.weighted_forcing_norm = weighted_forcing_norm(traj, model.sys, cfg.nu);
  sum.bound_ratio = bound_check(traj, model.sys, cfg.nu);
  sum.final_energy = energy(traj.states.back(), model.sys);
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_summary(sum, (fs::path(cfg.output_dir) / "summary.json").string());
  return sum;
}

std::vector<std::string> export_vtk(const std::string& run_dir, int every) {
  std::ifstream in(fs::path(run_dir) / "run.json");
  if (!in) throw Error("no run.json in " + run_dir);
  const nlohmann::json meta = nlohmann::json::parse(in);
  auto geom = std::make_shared<const MdGeometry>(load_geometry(meta.at("geometry").get<std::string>()));
  auto mesh = std::make_shared<const MdMesh>(build_mesh(geom, meta.at("h").get<double>()));
  const SpacePtr U = build_space(mesh, SpaceKind::Vector);
  const SpacePtr P = build_space(mesh, SpaceKind::Density);
  const double dt = meta.at("dt").get<double>();
  std::vector<std::string> out;
  for (int k = 0; k <= meta.at("steps").get<int>(); k += std::max(every, 1)) {
    const std::string uf = step_file(run_dir, "u", k, "csv");
    if (!fs::exists(uf)) break;
    const MdFunction u = read_function_csv(U, uf);
    const MdFunction p = read_function_csv(P, step_file(run_dir, "p", k, "csv"));
    const std::string path = step_file(run_dir, "snapshot", k, "vtk");
    write_vtk(*mesh, u, p, k * dt, path);
    out.push_back(path);
  }
  return out;
}

std::vector<std::string> export_matrices(const std::string& config_path, const std::string& dir) {
  const ModelConfig cfg = load_model_config(config_path);
  const Model model = build_model(cfg);
  fs::create_directories(dir);
  const OperatorSet& o = *model.ops;
  std::vector<std::string> out;
  for (const MdOperator* op : {&o.symgrad_bc, &o.co_symgrad, &o.div_bc, &o.co_div, &o.trace_t, &o.trace, &o.extension}) {
    std::string name = op->name;
    for (char& c : name) {
      if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    }
    const std::string path = (fs::path(dir) / (name + ".mtx")).string();
    save_matrix_market(*op, path);
    out.push_back(path);
  }
  return out;
}

namespace {

int run_verify(const std::vector<std::string>& suites, const VerifyOptions& opt, int jobs) {
  std::vector<std::function<SuiteReport()>> work;
  for (const auto& s : suites) {
    if (s == "operators") work.emplace_back([opt] { return operator_suite(opt); });
    if (s == "relations") work.emplace_back([opt] { return relation_suite(opt); });
    if (s == "strain") work.emplace_back([opt] { return strain_suite(opt); });
    if (s == "reductions") work.emplace_back([opt] { return reduction_suite(opt); });
  }
  std::vector<SuiteReport> reports;
  if (jobs > 1) {
    std::vector<std::future<SuiteReport>> futures;
    for (auto& w : work) futures.push_back(std::async(std::launch::async, w));
    for (auto& f : futures) reports.push_back(f.get());
  } else {
    for (auto& w : work) reports.push_back(w());
  }
  bool ok = true;
  std::cout << "seed " << opt.seed << ", tolerance scale " << opt.tol_scale << '\n';
  for (const auto& r : reports) {
    std::cout << r.table();
    ok = ok && r.pass();
  }
  std::cout << (ok ? "all suites passed" : "some checks failed") << '\n';
  return ok ? exit_pass : exit_failure;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"mixed-dimensional poromechanics solver"};
  app.require_subcommand(1);

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "simulate a config");
  run->add_option("config", run_opt.config_path, "config file")->required();
  run->add_option("-o,--output", run_opt.output_dir, "output directory");
  run->add_option("--vtk-every", run_opt.vtk_every, "VTK snapshot interval in steps (0: none)");

  VerifyOptions vopt;
  int jobs = 1;
  bool v_rel = false, v_ops = false, v_strain = false, v_red = false, v_all = false;
  auto* verify = app.add_subcommand("verify", "run verification suites");
  verify->add_flag("--relations", v_rel, "monotonicity certification");
  verify->add_flag("--operators", v_ops, "adjointness, conservation and kernel checks");
  verify->add_flag("--strain", v_strain, "rigid invariance and linearization consistency");
  verify->add_flag("--reductions", v_red, "classical reductions");
  verify->add_flag("--all", v_all, "every suite");
  verify->add_option("--seed", vopt.seed, "random seed");
  verify->add_option("--tol-scale", vopt.tol_scale, "multiplier for every tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--jobs", jobs, "suites run concurrently")->check(CLI::PositiveNumber);

  std::string geometry;
  auto* inspect = app.add_subcommand("inspect", "print the forest of a geometry file");
  inspect->add_option("geometry", geometry, "geometry file")->required();

  std::string export_dir, export_config, matrix_dir = "matrices";
  bool to_vtk = false;
  int every = 1;
  auto* exp = app.add_subcommand("export", "convert run output or export operators");
  exp->add_flag("--vtk", to_vtk, "write VTK snapshots from the CSV output of a run");
  exp->add_option("--run", export_dir, "run output directory");
  exp->add_option("--vtk-every", every, "snapshot interval in steps")->check(CLI::PositiveNumber);
  exp->add_option("--matrices", export_config, "config whose operators are written as Matrix Market");
  exp->add_option("--matrix-dir", matrix_dir, "directory for Matrix Market files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_pass : exit_usage;
  }

  try {
    if (*run) {
      const RunSummary s = run_simulation(run_opt);
      std::cout << summary_json(s) << '\n';
      return exit_pass;
    }
    if (*verify) {
      std::vector<std::string> suites;
      if (v_all || v_ops) suites.push_back("operators");
      if (v_all || v_rel) suites.push_back("relations");
      if (v_all || v_strain) suites.push_back("strain");
      if (v_all || v_red) suites.push_back("reductions");
      if (suites.empty()) suites = {"operators", "relations", "strain", "reductions"};
      return run_verify(suites, vopt, jobs);
    }
    if (*inspect) {
      std::cout << describe_forest(load_geometry(resolve_data_path(geometry)));
      return exit_pass;
    }
    if (*exp) {
      if (!to_vtk && export_config.empty()) {
        std::cerr << "export: give --vtk --run <dir> or --matrices <config>\n";
        return exit_usage;
      }
      if (to_vtk) {
        if (export_dir.empty()) {
          std::cerr << "export --vtk needs --run <dir>\n";
          return exit_usage;
        }
        for (const auto& f : export_vtk(export_dir, every)) std::cout << f << '\n';
      }
      if (!export_config.empty()) {
        for (const auto& f : export_matrices(export_config, matrix_dir)) std::cout << f << '\n';
      }
      return exit_pass;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_fault;
  }
  return exit_usage;
}

}  // namespace mdpm
