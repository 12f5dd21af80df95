#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "strom/config.hpp"
#include "strom/io.hpp"
#include "strom/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitSuiteFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file (key = value)");
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "random seed (overrides config)");
  cmd->add_option("--threads", args.threads, "worker threads (overrides config)");
}

strom::RunConfig load_config(const CommonArgs& args, const std::string& mode) {
  strom::RunConfig cfg = args.config_path.empty()
                             ? strom::RunConfig::from_kv(strom::KeyValueFile::parse_text(""), mode)
                             : strom::RunConfig::from_file(args.config_path, mode);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.threads > 0) cfg.threads = args.threads;
  strom::set_thread_count(cfg.threads);
  return cfg;
}

void ensure_out(const strom::RunConfig& cfg) { fs::create_directories(cfg.out_dir); }

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw strom::UsageError("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

json rows_json(const std::vector<strom::CheckRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json row;
    row["id"] = r.id;
    row["desc"] = r.desc;
    row["residual"] = r.residual;
    row["tolerance"] = r.tol;
    row["status"] = r.status == strom::CheckRow::Status::Pass   ? "pass"
                    : r.status == strom::CheckRow::Status::Fail ? "fail"
                                                                : "skip";
    arr.push_back(row);
  }
  return arr;
}

int cmd_verify(const CommonArgs& args) {
  const strom::RunConfig cfg = load_config(args, "verify");
  ensure_out(cfg);
  strom::VerifyOptions opt;
  opt.n = cfg.lattice_n;
  opt.active_axes = cfg.active_axes;
  opt.periods = cfg.periods;
  opt.g_hat = cfg.make_g_hat();
  opt.rank = cfg.rank;
  opt.seed = cfg.seed;
  opt.fault_lambda_scale = cfg.fault_lambda_scale;
  const auto rows = strom::run_verify_battery(opt);
  std::cout << strom::format_rows(rows);
  json rep;
  rep["schema_version"] = 1;
  rep["suite"] = "verify";
  rep["seed"] = cfg.seed;
  rep["n"] = cfg.lattice_n;
  rep["rows"] = rows_json(rows);
  rep["all_pass"] = strom::all_pass(rows);
  write_json(cfg.out_dir + "/verify.json", rep);
  if (!strom::all_pass(rows)) {
    std::cout << "FAILED rows present; see " << cfg.out_dir << "/verify.json\n";
    return kExitSuiteFailure;
  }
  std::cout << "all rows pass\n";
  return kExitPass;
}

int cmd_linearize(const CommonArgs& args) {
  const strom::RunConfig cfg = load_config(args, "linearize");
  ensure_out(cfg);
  const strom::Testbed tb = cfg.make_testbed();

  // per-mode operator symbols
  {
    std::ofstream os(cfg.out_dir + "/symbols.csv");
    os << "# schema_version=1\n";
    os << "bin,modes,sigma_l1,sigma_l2\n";
    for (std::size_t i = 0; i < tb.lat->size(); ++i) {
      const auto bin = tb.lat->coords(i);
      const double s = strom::laplace_symbol(*tb.lat, tb.g_hat, bin);
      os << i << ",\"";
      for (int a = 0; a < 6; ++a) os << tb.lat->mode_number(a, bin[a]) << (a < 5 ? " " : "");
      os << "\"," << s << "," << (-0.5 / tb.omega_norm_hat) * s << "\n";
    }
  }
  // identity residual table
  strom::VerifyOptions opt;
  opt.n = cfg.lattice_n;
  opt.active_axes = cfg.active_axes;
  opt.periods = cfg.periods;
  opt.g_hat = cfg.make_g_hat();
  opt.rank = cfg.rank;
  opt.seed = cfg.seed;
  const auto rows = strom::run_verify_battery(opt);
  {
    std::ofstream os(cfg.out_dir + "/residuals.csv");
    os << "# schema_version=1\n";
    os << "id,residual,tolerance,status\n";
    for (const auto& r : rows)
      os << r.id << "," << r.residual << "," << r.tol << ","
         << (r.status == strom::CheckRow::Status::Pass   ? "pass"
             : r.status == strom::CheckRow::Status::Fail ? "fail"
                                                         : "skip")
         << "\n";
  }
  // dense reduced-lattice operator with the synthetic fixture, plus the measured
  // Gateaux factor of the off-diagonal block
  json rep;
  rep["schema_version"] = 1;
  const strom::MatrixForm fix =
      strom::synthetic_curvature_fixture(tb, strom::band_limit_linear(*tb.lat), cfg.seed + 5);
  if (tb.lat->size() <= 256) {
    const strom::DenseBlockOperator dbo = strom::assemble_dense_block_operator(tb, &fix);
    std::ofstream os(cfg.out_dir + "/dense_operator.csv");
    os << "# schema_version=1\n";
    for (int i = 0; i < dbo.op.rows(); ++i) {
      for (int j = 0; j < dbo.op.cols(); ++j) os << dbo.op(i, j) << (j + 1 < dbo.op.cols() ? "," : "");
      os << "\n";
    }
    rep["dense_operator"] = {{"nu", dbo.nu()}, {"ntheta", dbo.ntheta()}};
  }
  // Constant between the displayed A-block and the measured Gateaux derivative of
  // the first component along Theta with a frozen synthetic curvature.
  rep["a_block_gateaux_factor"] = strom::measure_A_gateaux_factor(tb, fix, cfg.seed + 21);
  const strom::GateauxReport gr = strom::gateaux_vs_blocks(tb, cfg.seed + 17);
  rep["gateaux_orders"] = {gr.order_lo, gr.order_hi};
  rep["gateaux_block_err"] = gr.block_err;
  rep["offdiag_block_orders"] = {gr.offdiag_order_lo, gr.offdiag_order_hi};
  write_json(cfg.out_dir + "/linearize.json", rep);
  std::cout << "wrote " << cfg.out_dir << "/{symbols.csv,residuals.csv,linearize.json}\n";
  return kExitPass;
}

int cmd_residual(const CommonArgs& args) {
  const strom::RunConfig cfg = load_config(args, "residual");
  ensure_out(cfg);
  if (cfg.input_state.empty()) throw strom::UsageError("residual: input.state required in config");
  auto [tb, state] = strom::load_state(cfg.input_state);
  strom::Derived d;
  const strom::Residual r =
      state.coupled() ? strom::eval_F_coupled(tb, state, &d) : strom::eval_F(tb, state, &d);
  json rep;
  rep["schema_version"] = 1;
  rep["alpha"] = state.alpha;
  rep["hym_l2"] = r.hym_l2;
  rep["hym_max"] = r.hym_max;
  rep["anomaly_l2"] = r.anomaly_l2;
  rep["anomaly_max"] = r.anomaly_max;
  rep["ellipticity"] = strom::ellipticity_monitor(tb, d, state.alpha);
  rep["positivity_margin"] = d.positivity_margin;
  if (state.alpha > 0)
    rep["class_factor"] = tb.omega_norm_hat / std::sqrt(state.alpha);
  else
    rep["class_factor"] = nullptr;
  write_json(cfg.out_dir + "/residual.json", rep);
  std::cout << "hym_l2 " << r.hym_l2 << "  anomaly_l2 " << r.anomaly_l2 << "\n";
  return kExitPass;
}

int cmd_squareroot(const CommonArgs& args) {
  const strom::RunConfig cfg = load_config(args, "squareroot");
  ensure_out(cfg);
  if (cfg.input_form.empty()) throw strom::UsageError("squareroot: input.form required in config");
  const strom::FieldVariant fv = strom::load_field(cfg.input_form);
  const auto* psi = std::get_if<strom::FormField>(&fv);
  if (!psi || psi->p != 2 || psi->q != 2)
    throw strom::UsageError("squareroot: input must be a (2,2)-form container");
  const strom::HolVolForm vol{strom::cplx(cfg.f_re, cfg.f_im)};
  const strom::HermitianMetric g = strom::sqrt_positive_22(*psi, vol);
  strom::save_field(cfg.out_dir + "/metric.spfc", g.g);
  // round trip residual
  strom::FormField back = strom::balanced_form(g, vol);
  back -= *psi;
  json rep;
  rep["schema_version"] = 1;
  rep["roundtrip_max"] = back.max_abs();
  rep["roundtrip_rel"] = back.max_abs() / std::max(1e-300, psi->max_abs());
  const auto [lo, site] = strom::positivity_margin(*psi);
  rep["positivity_margin"] = lo;
  rep["worst_site"] = site;
  write_json(cfg.out_dir + "/squareroot.json", rep);
  std::cout << "roundtrip residual " << back.max_abs() << "\n";
  return kExitPass;
}

int run_solve(const CommonArgs& args, bool coupled) {
  const strom::RunConfig cfg = load_config(args, coupled ? "solve-coupled" : "solve");
  ensure_out(cfg);
  const strom::Testbed tb = cfg.make_testbed();
  strom::ContinuationConfig ccfg = cfg.continuation;
  ccfg.coupled = coupled;
  std::optional<strom::ManufacturedProblem> mp;
  if (cfg.manufactured_enabled)
    mp = strom::make_manufactured(tb, cfg.manufactured_amplitude, cfg.manufactured_max_mode,
                                  cfg.seed, coupled);
  const strom::PathReport rep =
      strom::continue_in_alpha(tb, ccfg, mp ? &*mp : nullptr);

  {
    std::ofstream os(cfg.out_dir + "/path.csv");
    os << "# schema_version=1\n";
    os << "alpha,step,newton_iters,hym_l2,anomaly_l2,residual_l2,ellipticity,positivity_margin,"
          "class_factor,quadratic_ratio_max\n";
    for (const auto& s : rep.steps)
      os << s.alpha << "," << s.step << "," << s.newton_iters << "," << s.hym_l2 << ","
         << s.anomaly_l2 << "," << s.residual_l2 << "," << s.ellipticity << ","
         << s.positivity_margin << "," << s.class_factor << "," << s.quadratic_ratio_max << "\n";
  }
  strom::save_state(cfg.out_dir + "/state.spbd", tb, rep.final_state);

  json j;
  j["schema_version"] = 1;
  j["reached_target"] = rep.reached_target;
  j["alpha_reached"] = rep.alpha_reached;
  j["stop_reason"] = rep.stop_reason;
  j["steps"] = rep.steps.size();
  if (!rep.steps.empty()) {
    j["final_residual_l2"] = rep.steps.back().residual_l2;
    j["final_ellipticity"] = rep.steps.back().ellipticity;
  }
  if (mp) {
    const double err = strom::state_distance(tb, rep.final_state, mp->target_state);
    j["manufactured_recovery_error"] = err;
    std::cout << "manufactured recovery error " << err << "\n";
  }
  write_json(cfg.out_dir + "/report.json", j);
  std::cout << (rep.reached_target ? "reached" : "stopped at") << " alpha " << rep.alpha_reached
            << "\n";
  return rep.reached_target ? kExitPass : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral toolkit for the Strominger system on flat torus testbeds"};
  app.require_subcommand(1);
  CommonArgs args;

  auto* verify = app.add_subcommand("verify", "run the identity battery");
  add_common(verify, args);
  auto* linearize = app.add_subcommand("linearize", "dump operator symbols and residual tables");
  add_common(linearize, args);
  auto* residual = app.add_subcommand("residual", "evaluate the residual of a stored state");
  add_common(residual, args);
  auto* squareroot = app.add_subcommand("squareroot", "extract the metric from a (2,2)-form file");
  add_common(squareroot, args);
  auto* solve = app.add_subcommand("solve", "Newton continuation in alpha'");
  add_common(solve, args);
  auto* solve_coupled =
      app.add_subcommand("solve-coupled", "continuation for the coupled tangent-bundle system");
  add_common(solve_coupled, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (verify->parsed()) return cmd_verify(args);
    if (linearize->parsed()) return cmd_linearize(args);
    if (residual->parsed()) return cmd_residual(args);
    if (squareroot->parsed()) return cmd_squareroot(args);
    if (solve->parsed()) return run_solve(args, false);
    if (solve_coupled->parsed()) return run_solve(args, true);
  } catch (const strom::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const strom::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
