#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "dinsys/config.hpp"
#include "dinsys/diagnostics.hpp"
#include "dinsys/problems.hpp"

namespace fs = std::filesystem;
using namespace dinsys;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFail = 1;
constexpr int kExitRunFail = 2;
constexpr int kExitUsage = 64;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
  const NormFamily& nf = traj.system->norms();
  std::ofstream out(path);
  out << "n,t,|V|_H,||U||_V,E,Psi(V),PsiStar,xi_residual,inner_iters\n";
  for (const StepRecord& r : traj.records) {
    out << r.index << ',' << fmt(r.t) << ','
        << fmt(std::sqrt(nf.inner_H(r.V, r.V))) << ','
        << fmt(nf.norm(Space::V, r.U)) << ',' << fmt(r.energy_value) << ','
        << fmt(r.psi_value) << ',' << fmt(r.psi_star_value) << ','
        << fmt(r.optimality_residual) << ',' << r.inner_iterations << '\n';
  }
}

void write_edi_csv(const fs::path& path, const EdiReport& report) {
  std::ofstream out(path);
  out << "s,t,lhs,rhs,slack\n";
  for (const EdiRow& r : report.rows)
    out << fmt(r.s) << ',' << fmt(r.t) << ',' << fmt(r.lhs) << ','
        << fmt(r.rhs) << ',' << fmt(r.slack) << '\n';
}

void write_apriori_csv(const fs::path& path, const AprioriReport& rep) {
  std::ofstream out(path);
  out << "M_velocity,M_energy,M_power,dissipation_integral,"
         "gap_U_under_bar,gap_U_hat_bar,gap_V_bar_hat,gap_V_under_bar\n";
  out << fmt(rep.M_velocity) << ',' << fmt(rep.M_energy) << ','
      << fmt(rep.M_power) << ',' << fmt(rep.dissipation_integral) << ','
      << fmt(rep.gap_U_under_bar) << ',' << fmt(rep.gap_U_hat_bar) << ','
      << fmt(rep.gap_V_bar_hat) << ',' << fmt(rep.gap_V_under_bar) << '\n';
}

void append_audit_report(std::ostream& out, const AuditReport& report) {
  out << "assumption audit: " << (report.pass ? "pass" : "FAIL") << '\n';
  for (const AuditEntry& e : report.entries) {
    out << "  [" << (e.pass ? "pass" : "FAIL") << "] " << e.name
        << ": measured " << fmt(e.measured);
    if (e.bound != 0.0) out << " vs bound " << fmt(e.bound);
    out << "  (" << e.detail << ")\n";
  }
}

struct LoadedRun {
  RunConfig cfg;
  BuiltProblem built;
};

LoadedRun load(const std::string& config_path, bool strict,
               const std::string& out_override) {
  LoadedRun lr;
  lr.cfg = parse_config(config_path, strict);
  if (!out_override.empty()) lr.cfg.output.dir = out_override;
  lr.built = build_problem(lr.cfg.problem);
  return lr;
}

int cmd_run(const std::string& config_path, bool strict,
            const std::string& out_override) {
  LoadedRun lr = load(config_path, strict, out_override);
  const RunConfig& cfg = lr.cfg;
  fs::create_directories(cfg.output.dir);
  const fs::path out_dir = cfg.output.dir;

  std::ofstream audit_out(out_dir / "audit.txt");
  for (const std::string& w : cfg.warnings) audit_out << "warning: " << w << '\n';

  Trajectory traj;
  try {
    traj = run(*lr.built.system, lr.built.u0, lr.built.v0, cfg.solver);
  } catch (const RunFailure& e) {
    write_trajectory_csv(out_dir / "trajectory.csv", e.partial);
    audit_out << "run failure: " << e.what() << '\n';
    std::cerr << "run failure: " << e.what() << '\n';
    return kExitRunFail;
  }
  write_trajectory_csv(out_dir / "trajectory.csv", traj);
  for (const std::string& w : traj.warnings) audit_out << "warning: " << w << '\n';

  bool pass = true;
  if (cfg.output.edi) {
    std::vector<std::pair<double, double>> pairs;
    for (int n = 1; n <= traj.steps(); ++n)
      pairs.emplace_back((n - 1) * traj.tau, n * traj.tau);
    pairs.emplace_back(0.0, traj.T);
    EdiReport edi = edi_check(traj, pairs);
    write_edi_csv(out_dir / "edi.csv", edi);
    audit_out << "energy-dissipation inequality: "
              << (edi.pass ? "pass" : "FAIL " + edi.violation) << '\n';
    pass = pass && edi.pass;
  }
  if (cfg.output.apriori)
    write_apriori_csv(out_dir / "apriori.csv", apriori_report(traj));
  for (double h : cfg.output.shift_gaps)
    audit_out << "shift gap h=" << fmt(h)
              << ": V " << fmt(shift_gap(traj, h, Space::V))
              << ", W " << fmt(shift_gap(traj, h, Space::W)) << '\n';
  if (cfg.output.audit) {
    AuditReport report = assumption_audit(*lr.built.system,
                                          cfg.output.audit_samples,
                                          cfg.output.seed);
    append_audit_report(audit_out, report);
    pass = pass && report.pass;
  }
  audit_out << "tau_star: " << fmt(estimate_tau_star(*lr.built.system)) << '\n';
  return pass ? kExitPass : kExitCheckFail;
}

int cmd_sweep(const std::string& config_path, bool strict,
              const std::string& out_override, int jobs) {
  LoadedRun lr = load(config_path, strict, out_override);
  const RunConfig& cfg = lr.cfg;
  if (!cfg.sweep.present)
    throw ContractViolation("sweep requires a [sweep] section");
  if (!lr.built.closed_form && cfg.sweep.reference_tau <= 0.0)
    throw ContractViolation(
        "sweep.reference_tau required (no closed form for this problem)");
  fs::create_directories(cfg.output.dir);

  std::vector<ConvergenceRow> rows = convergence_study(
      *lr.built.system, lr.built.u0, lr.built.v0, cfg.sweep.taus,
      cfg.sweep.reference_tau, cfg.solver, lr.built.closed_form, jobs);

  std::ofstream out(fs::path(cfg.output.dir) / "convergence.csv");
  out << "tau,err_CH,err_L2V,err_V_CH,order_estimate\n";
  for (const ConvergenceRow& r : rows) {
    out << fmt(r.tau) << ',' << fmt(r.err_CH) << ',' << fmt(r.err_L2V) << ','
        << fmt(r.err_V_CH) << ',';
    if (r.order_estimate) out << fmt(*r.order_estimate);
    out << '\n';
  }
  if (rows.size() != cfg.sweep.taus.size()) {
    std::cerr << "sweep aborted after " << rows.size() << " of "
              << cfg.sweep.taus.size() << " runs\n";
    return kExitRunFail;
  }
  return kExitPass;
}

int cmd_audit(const std::string& config_path, bool strict,
              const std::string& out_override) {
  LoadedRun lr = load(config_path, strict, out_override);
  fs::create_directories(lr.cfg.output.dir);
  AuditReport report = assumption_audit(*lr.built.system,
                                        lr.cfg.output.audit_samples,
                                        lr.cfg.output.seed);
  std::ofstream audit_out(fs::path(lr.cfg.output.dir) / "audit.txt");
  for (const std::string& w : lr.cfg.warnings)
    audit_out << "warning: " << w << '\n';
  append_audit_report(audit_out, report);
  append_audit_report(std::cout, report);
  return report.pass ? kExitPass : kExitCheckFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dinsys: semi-implicit variational solver for damped "
               "inertial systems"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  bool strict = false;
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;

  app.add_flag("--strict", strict, "treat unknown config keys as errors");
  app.add_option("--out", out_override, "override the output directory");
  app.add_option("--jobs", jobs, "worker pool size for sweeps")
      ->check(CLI::PositiveNumber);

  CLI::App* run_cmd = app.add_subcommand("run", "run one trajectory + reports");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "tau-refinement study");
  CLI::App* audit_cmd = app.add_subcommand("audit", "assumption audit only");
  for (CLI::App* sub : {run_cmd, sweep_cmd, audit_cmd}) {
    sub->add_option("config", config_path, "configuration file")->required();
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, strict, out_override);
    if (sweep_cmd->parsed())
      return cmd_sweep(config_path, strict, out_override, jobs);
    return cmd_audit(config_path, strict, out_override);
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFail;
  }
}
