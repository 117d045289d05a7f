#include "dinsys/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dinsys {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw ContractViolation("config line " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& v, int line, const std::string& key) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    parse_fail(line, key + " expects a number, got '" + v + "'");
  }
  if (used != v.size())
    parse_fail(line, key + " expects a number, got '" + v + "'");
  return out;
}

int to_int(const std::string& v, int line, const std::string& key) {
  const double d = to_double(v, line, key);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    parse_fail(line, key + " expects an integer, got '" + v + "'");
  return i;
}

bool to_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  parse_fail(line, key + " expects true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& v, int line,
                            const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item, line, key));
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open config file '" + path + "'");

  RunConfig cfg;
  std::string section, line;
  int lineno = 0;
  bool solver_tau_set = false;

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    std::string body = trim(hash == std::string::npos ? line
                                                      : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') parse_fail(lineno, "unterminated section header");
      section = trim(body.substr(1, body.size() - 2));
      if (section != "problem" && section != "solver" && section != "output" &&
          section != "sweep")
        parse_fail(lineno, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) parse_fail(lineno, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string val = trim(body.substr(eq + 1));
    if (key.empty()) parse_fail(lineno, "empty key");
    if (section.empty()) parse_fail(lineno, "key before any [section]");
    const std::string full = section + "." + key;

    bool known = true;
    if (section == "problem") {
      ProblemConfig& p = cfg.problem;
      if (key == "id") p.id = val;
      else if (key == "nodes") p.grid = GridSpec::line(to_int(val, lineno, full), p.grid.extent[0]);
      else if (key == "length") p.grid.extent = {to_double(val, lineno, full), to_double(val, lineno, full)};
      else if (key == "p") p.p = to_double(val, lineno, full);
      else if (key == "q") p.q = to_double(val, lineno, full);
      else if (key == "r") p.r = to_double(val, lineno, full);
      else if (key == "s_u") p.s_u = to_int(val, lineno, full);
      else if (key == "s_v") p.s_v = to_int(val, lineno, full);
      else if (key == "mu") p.mu = to_double(val, lineno, full);
      else if (key == "nu") p.nu = to_double(val, lineno, full);
      else if (key == "rho") p.rho = to_double(val, lineno, full);
      else if (key == "double_well") p.double_well = to_bool(val, lineno, full);
      else if (key == "b") p.b_kind = val;
      else if (key == "stress") p.stress = val;
      else if (key == "sigma_route") p.sigma_route = val;
      else if (key == "forcing") p.forcing_expr = val;
      else if (key == "u0") p.u0_expr = val;
      else if (key == "v0") p.v0_expr = val;
      else if (key == "dim") p.oscillator_dim = to_int(val, lineno, full);
      else if (key == "k") p.oscillator_k = to_double(val, lineno, full);
      else if (key == "c") p.oscillator_c = to_double(val, lineno, full);
      else known = false;
    } else if (section == "solver") {
      SolverConfig& s = cfg.solver;
      if (key == "tau") { s.tau = to_double(val, lineno, full); solver_tau_set = true; }
      else if (key == "T") s.T = to_double(val, lineno, full);
      else if (key == "inner_tol") s.inner_tol = to_double(val, lineno, full);
      else if (key == "inner_max_iters") s.inner_max_iters = to_int(val, lineno, full);
      else if (key == "tau_star_guard") s.tau_star_guard = to_bool(val, lineno, full);
      else known = false;
    } else if (section == "output") {
      OutputConfig& o = cfg.output;
      if (key == "dir") o.dir = val;
      else if (key == "edi") o.edi = to_bool(val, lineno, full);
      else if (key == "apriori") o.apriori = to_bool(val, lineno, full);
      else if (key == "audit") o.audit = to_bool(val, lineno, full);
      else if (key == "shift_gaps") o.shift_gaps = to_list(val, lineno, full);
      else if (key == "audit_samples") o.audit_samples = to_int(val, lineno, full);
      else if (key == "seed") o.seed = static_cast<unsigned>(to_int(val, lineno, full));
      else known = false;
    } else {  // sweep
      SweepConfig& w = cfg.sweep;
      w.present = true;
      if (key == "taus") w.taus = to_list(val, lineno, full);
      else if (key == "reference_tau") w.reference_tau = to_double(val, lineno, full);
      else known = false;
    }
    if (!known) {
      if (strict) parse_fail(lineno, "unknown key '" + full + "'");
      cfg.warnings.push_back("line " + std::to_string(lineno) +
                             ": unknown key '" + full + "' ignored");
    }
  }

  // Validation beyond the syntactic layer.
  if (!solver_tau_set && cfg.solver.tau <= 0.0)
    throw ContractViolation("solver.tau must be positive");
  if (cfg.solver.tau <= 0.0)
    throw ContractViolation("solver.tau must be positive");
  if (cfg.solver.T <= 0.0) throw ContractViolation("solver.T must be positive");
  if (cfg.solver.inner_tol <= 0.0)
    throw ContractViolation("solver.inner_tol must be positive");
  if (cfg.solver.inner_max_iters < 1)
    throw ContractViolation("solver.inner_max_iters must be >= 1");
  cfg.problem.validate();
  if (cfg.output.audit_samples < 1)
    throw ContractViolation("output.audit_samples must be >= 1");
  for (double h : cfg.output.shift_gaps)
    if (!(h > 0.0) || !(h < cfg.solver.T))
      throw ContractViolation("output.shift_gaps entries must lie in (0, T)");
  if (cfg.sweep.present) {
    if (cfg.sweep.taus.empty())
      throw ContractViolation("sweep.taus must be nonempty");
    for (std::size_t i = 0; i + 1 < cfg.sweep.taus.size(); ++i)
      if (!(cfg.sweep.taus[i] > cfg.sweep.taus[i + 1]))
        throw ContractViolation("sweep.taus must be strictly decreasing");
    for (double t : cfg.sweep.taus)
      if (t <= 0.0) throw ContractViolation("sweep.taus must be positive");
    if (cfg.sweep.reference_tau < 0.0)
      throw ContractViolation("sweep.reference_tau must be nonnegative");
    if (cfg.sweep.reference_tau > 0.0 &&
        !(cfg.sweep.reference_tau < cfg.sweep.taus.back() / 4.0))
      throw ContractViolation(
          "sweep.reference_tau must be below min(sweep.taus)/4");
  }
  return cfg;
}

}  // namespace dinsys
