#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// Black-box tests of the installed CLI; the binary path is injected by the
// build so the tests run from any working directory.
#ifndef DINSYS_CLI_PATH
#error "DINSYS_CLI_PATH must be defined by the build"
#endif

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(DINSYS_CLI_PATH) + " " + args + " > cli_stdout.txt 2>&1";
  const int raw = std::system(cmd.c_str());
  REQUIRE(raw != -1);
  return WEXITSTATUS(raw);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir("cli_ws_" + name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  fs::path write(const std::string& name, const std::string& text) const {
    fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
  }
};

const char* kOscConfig =
    "[problem]\n"
    "id = oscillator\n"
    "[solver]\n"
    "tau = 0.01\n"
    "T = 0.2\n";

}  // namespace

TEST_CASE("cli: usage errors exit 64") {
  CHECK(run_cli("") == 64);
  CHECK(run_cli("frobnicate config.ini") == 64);
  CHECK(run_cli("run") == 64);
  CHECK(run_cli("run no_such_config.ini") == 64);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("cli: run writes the expected files") {
  Workspace ws("run");
  fs::path cfg = ws.write("osc.ini", kOscConfig);
  CHECK(run_cli("run " + cfg.string() + " --out " + (ws.dir / "out").string()) ==
        0);

  const std::string traj = slurp(ws.dir / "out" / "trajectory.csv");
  std::vector<std::string> tl = lines_of(traj);
  CHECK(tl[0] ==
        "n,t,|V|_H,||U||_V,E,Psi(V),PsiStar,xi_residual,inner_iters");
  CHECK(tl.size() == 1 + 21);  // header + records 0..N for N = 20

  const std::string edi = slurp(ws.dir / "out" / "edi.csv");
  CHECK(lines_of(edi)[0] == "s,t,lhs,rhs,slack");

  const std::string apriori = slurp(ws.dir / "out" / "apriori.csv");
  CHECK(lines_of(apriori)[0].rfind("M_velocity", 0) == 0);

  const std::string audit = slurp(ws.dir / "out" / "audit.txt");
  CHECK(audit.find("energy lower bound") != std::string::npos);
  CHECK(audit.find("dissipation growth") != std::string::npos);
}

TEST_CASE("cli: identical runs are bitwise identical") {
  Workspace ws("det");
  fs::path cfg = ws.write("osc.ini",
                          "[problem]\nid = P1\nnodes = 12\n"
                          "[solver]\ntau = 0.02\nT = 0.1\n");
  REQUIRE(run_cli("run " + cfg.string() + " --out " +
                  (ws.dir / "a").string()) == 0);
  REQUIRE(run_cli("run " + cfg.string() + " --out " +
                  (ws.dir / "b").string()) == 0);
  CHECK(slurp(ws.dir / "a" / "trajectory.csv") ==
        slurp(ws.dir / "b" / "trajectory.csv"));
  CHECK(slurp(ws.dir / "a" / "edi.csv") == slurp(ws.dir / "b" / "edi.csv"));
}

TEST_CASE("cli: strict mode rejects unknown keys") {
  Workspace ws("strict");
  fs::path cfg = ws.write("osc.ini",
                          std::string(kOscConfig) + "turbo = yes\n");
  CHECK(run_cli("run " + cfg.string() + " --out " + (ws.dir / "o1").string()) ==
        0);
  CHECK(run_cli("run " + cfg.string() + " --strict --out " +
                (ws.dir / "o2").string()) == 64);
}

TEST_CASE("cli: sweep writes convergence.csv") {
  Workspace ws("sweep");
  fs::path cfg = ws.write("osc.ini",
                          std::string(kOscConfig) +
                              "[sweep]\ntaus = 0.02, 0.01, 0.005\n");
  CHECK(run_cli("sweep " + cfg.string() + " --jobs 2 --out " +
                (ws.dir / "out").string()) == 0);
  std::vector<std::string> cl =
      lines_of(slurp(ws.dir / "out" / "convergence.csv"));
  REQUIRE(cl.size() == 4);
  CHECK(cl[0] == "tau,err_CH,err_L2V,err_V_CH,order_estimate");
  // First row has no Richardson estimate -> trailing field empty.
  CHECK(cl[1].back() == ',');
  CHECK(cl[3].back() != ',');
}

TEST_CASE("cli: sweep without a [sweep] section is a usage error") {
  Workspace ws("nosweep");
  fs::path cfg = ws.write("osc.ini", kOscConfig);
  CHECK(run_cli("sweep " + cfg.string() + " --out " +
                (ws.dir / "out").string()) == 64);
}

TEST_CASE("cli: single-tau sweep leaves order empty without error") {
  Workspace ws("sweep1");
  fs::path cfg = ws.write("osc.ini",
                          std::string(kOscConfig) + "[sweep]\ntaus = 0.01\n");
  CHECK(run_cli("sweep " + cfg.string() + " --out " +
                (ws.dir / "out").string()) == 0);
  std::vector<std::string> cl =
      lines_of(slurp(ws.dir / "out" / "convergence.csv"));
  REQUIRE(cl.size() == 2);
  CHECK(cl[1].back() == ',');
}

TEST_CASE("cli: audit subcommand") {
  Workspace ws("audit");
  fs::path cfg = ws.write("osc.ini", kOscConfig);
  CHECK(run_cli("audit " + cfg.string() + " --out " +
                (ws.dir / "out").string()) == 0);
  const std::string audit = slurp(ws.dir / "out" / "audit.txt");
  CHECK(audit.find("assumption audit: pass") != std::string::npos);
}

TEST_CASE("cli: inner-solver failure exits 2 with a partial trajectory") {
  Workspace ws("fail2");
  fs::path cfg = ws.write("p1.ini",
                          "[problem]\nid = P1\nnodes = 12\np = 4\n"
                          "[solver]\ntau = 0.02\nT = 0.1\n"
                          "inner_max_iters = 1\ninner_tol = 1e-14\n");
  CHECK(run_cli("run " + cfg.string() + " --out " +
                (ws.dir / "out").string()) == 2);
  // The partial trajectory and the failure note still land on disk.
  CHECK(fs::exists(ws.dir / "out" / "trajectory.csv"));
  CHECK(slurp(ws.dir / "out" / "audit.txt").find("run failure") !=
        std::string::npos);
}

TEST_CASE("cli: failed assumption audit exits 1") {
  // Fast-growing perturbation (|u|^{q-1} with q = 8) outruns the standing
  // growth bound at the audit's larger sample scales.
  Workspace ws("fail1");
  fs::path cfg = ws.write("p1.ini",
                          "[problem]\nid = P1\nnodes = 12\nq = 8\n"
                          "[solver]\ntau = 0.01\nT = 0.1\n"
                          "[output]\naudit_samples = 200\n");
  CHECK(run_cli("audit " + cfg.string() + " --out " +
                (ws.dir / "out").string()) == 1);
  CHECK(slurp(ws.dir / "out" / "audit.txt").find("FAIL") !=
        std::string::npos);
}
