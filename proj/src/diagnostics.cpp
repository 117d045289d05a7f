#include "dinsys/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

namespace dinsys {

Interpolants::Interpolants(const Trajectory& traj) : traj_(&traj) {
  if (traj.records.empty())
    throw ContractViolation("Interpolants: empty trajectory");
}

int Interpolants::right_index(double t) const {
  const double tau = traj_->tau;
  const int N = traj_->steps();
  if (t < 0.0 || t > traj_->T * (1.0 + 1e-12))
    throw ContractViolation("Interpolants: t out of [0,T]");
  int n = static_cast<int>(std::ceil(t / tau - 1e-12));
  return std::clamp(n, 1, N);
}

double Interpolants::t_bar(double t) const {
  if (t == 0.0) return 0.0;
  return right_index(t) * traj_->tau;
}

double Interpolants::t_under(double t) const {
  // Right-node label on [t_{n-1}, t_n); matches the explicit evaluation
  // point of B in the scheme.
  if (t >= traj_->T) return traj_->T;
  const double tau = traj_->tau;
  int n = static_cast<int>(std::floor(t / tau + 1e-12)) + 1;
  return std::min(n, traj_->steps()) * tau;
}

Eigen::VectorXd Interpolants::eval(InterpTag which, double t) const {
  const double tau = traj_->tau;
  const int N = traj_->steps();
  const auto& rec = traj_->records;
  if (t < 0.0 || t > traj_->T * (1.0 + 1e-12))
    throw ContractViolation("Interpolants: t out of [0,T]");

  // Left-closed conventions (under/hat/xi/f) use the interval [t_{n-1},t_n).
  const int n_left =
      std::min(static_cast<int>(std::floor(t / tau + 1e-12)) + 1, N);
  const int n_right = (t == 0.0) ? 0 : right_index(t);

  switch (which) {
    case InterpTag::U_bar:
      return rec[n_right].U.values;
    case InterpTag::V_bar:
      return rec[n_right].V.values;
    case InterpTag::U_under:
      return (t >= traj_->T) ? rec[N].U.values : rec[n_left - 1].U.values;
    case InterpTag::V_under:
      return (t >= traj_->T) ? rec[N].V.values : rec[n_left - 1].V.values;
    case InterpTag::U_hat: {
      if (t >= traj_->T) return rec[N].U.values;
      const double tn = n_left * tau;
      const double a = (tn - t) / tau;
      return a * rec[n_left - 1].U.values + (1.0 - a) * rec[n_left].U.values;
    }
    case InterpTag::V_hat: {
      if (t >= traj_->T) return rec[N].V.values;
      const double tn = n_left * tau;
      const double a = (tn - t) / tau;
      return a * rec[n_left - 1].V.values + (1.0 - a) * rec[n_left].V.values;
    }
    case InterpTag::Xi:
      return (t >= traj_->T) ? rec[N].xi.values : rec[n_left].xi.values;
    case InterpTag::F_tau:
      return (t >= traj_->T) ? rec[N].f_n.values : rec[n_left].f_n.values;
  }
  return {};
}

namespace {

// int_{t_{n-1}}^{t_n} d/dr E(r, U^{n-1}) dr by 3-point Gauss, with a
// midpoint-rule comparison as the error estimate.
std::pair<double, double> power_integral(const SystemSpec& sys,
                                         const StateVec& u, double a,
                                         double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double x = std::sqrt(3.0 / 5.0);
  const double gauss = half * ((5.0 / 9.0) * sys.dtE(mid - half * x, u) +
                               (8.0 / 9.0) * sys.dtE(mid, u) +
                               (5.0 / 9.0) * sys.dtE(mid + half * x, u));
  const double midrule = (b - a) * sys.dtE(mid, u);
  return {gauss, std::abs(gauss - midrule)};
}

}  // namespace

EdiReport edi_check(const Trajectory& traj,
                    const std::vector<std::pair<double, double>>& pairs,
                    double tol_scale) {
  if (traj.records.empty() || traj.system == nullptr)
    throw ContractViolation("edi_check: incomplete trajectory");
  const SystemSpec& sys = *traj.system;
  const double tau = traj.tau;
  const int N = traj.steps();
  const double lam = std::abs(sys.lambda);

  EdiReport report;
  report.tol = tol_scale;
  for (auto [s, t] : pairs) {
    if (!(s < t))
      throw ContractViolation("edi_check: pairs must satisfy s < t");
    const int ns = (s <= 0.0) ? 0 : std::clamp(
        static_cast<int>(std::ceil(s / tau - 1e-12)), 1, N);
    const int nt = std::clamp(static_cast<int>(std::ceil(t / tau - 1e-12)),
                              1, N);
    if (ns >= nt) continue;

    const auto& rs = traj.records[ns];
    const auto& rt = traj.records[nt];
    double dissipation = 0.0, power = 0.0, work = 0.0, lam_term = 0.0,
           quad_err = 0.0;
    for (int n = ns + 1; n <= nt; ++n) {
      const auto& rn = traj.records[n];
      const auto& rp = traj.records[n - 1];
      dissipation += tau * (rn.psi_value + rn.psi_star_value);
      auto [pi, pe] = power_integral(sys, rp.U, rp.t, rn.t);
      power += pi;
      quad_err += pe;
      const Eigen::VectorXd s_dual =
          sys.norms().gram_H() * rn.f_n.values - rn.B_n.values;
      work += tau * s_dual.dot(rn.V.values);
      lam_term += tau * rn.V.values.dot(sys.norms().gram_V() * rn.V.values);
    }
    EdiRow row;
    row.s = ns * tau;
    row.t = nt * tau;
    row.lhs = 0.5 * sys.norms().inner_H(rt.V, rt.V) + rt.energy_value +
              dissipation;
    const double base = 0.5 * sys.norms().inner_H(rs.V, rs.V) +
                        rs.energy_value + power + work;
    row.rhs = base + tau * lam * lam_term;
    row.slack = row.rhs - row.lhs;
    row.slack_half_lambda = base + tau * 0.5 * lam * lam_term - row.lhs;
    row.quad_error = quad_err;
    const double tol =
        tol_scale * (1.0 + std::max(std::abs(row.lhs), std::abs(row.rhs)));
    if (row.slack < -tol && report.pass) {
      report.pass = false;
      report.violation = "EDI violated on (" + std::to_string(row.s) + ", " +
                         std::to_string(row.t) + ")";
    }
    report.rows.push_back(row);
  }
  return report;
}

AprioriReport apriori_report(const Trajectory& traj) {
  if (traj.records.empty() || traj.system == nullptr)
    throw ContractViolation("apriori_report: incomplete trajectory");
  const SystemSpec& sys = *traj.system;
  const NormFamily& nf = sys.norms();
  const double tau = traj.tau;
  const int N = traj.steps();
  Interpolants interp(traj);

  AprioriReport rep;
  auto dual_of_state = [&](const Eigen::VectorXd& z) {
    return nf.dual_norm(DualSpace::Vstar, DualVec{nf.gram_H() * z});
  };
  for (int n = 0; n <= N; ++n) {
    const auto& r = traj.records[n];
    rep.M_velocity = std::max(rep.M_velocity,
                              std::sqrt(nf.inner_H(r.V, r.V)));
    rep.M_energy = std::max(rep.M_energy, r.energy_value);
    rep.M_power = std::max(rep.M_power, std::abs(sys.dtE(r.t, r.U)));
    if (n >= 1) rep.dissipation_integral += tau * (r.psi_value + r.psi_star_value);
  }
  // Gap quantities at nodes and interval midpoints.
  std::vector<double> samples;
  for (int n = 0; n <= N; ++n) {
    samples.push_back(n * tau);
    if (n < N) samples.push_back((n + 0.5) * tau);
  }
  for (double t : samples) {
    const Eigen::VectorXd ub = interp.eval(InterpTag::U_bar, t);
    const Eigen::VectorXd uu = interp.eval(InterpTag::U_under, t);
    const Eigen::VectorXd uh = interp.eval(InterpTag::U_hat, t);
    const Eigen::VectorXd vb = interp.eval(InterpTag::V_bar, t);
    const Eigen::VectorXd vu = interp.eval(InterpTag::V_under, t);
    const Eigen::VectorXd vh = interp.eval(InterpTag::V_hat, t);
    rep.gap_U_under_bar = std::max(rep.gap_U_under_bar,
                                   nf.norm(Space::V, StateVec{uu - ub}));
    rep.gap_U_hat_bar = std::max(rep.gap_U_hat_bar,
                                 nf.norm(Space::V, StateVec{uh - ub}));
    rep.gap_V_bar_hat = std::max(rep.gap_V_bar_hat, dual_of_state(vb - vh));
    rep.gap_V_under_bar = std::max(rep.gap_V_under_bar,
                                   dual_of_state(vu - vb));
    const double tm = std::max(t, 1e-300);
    rep.M_power = std::max(rep.M_power,
                           std::abs(sys.dtE(tm, StateVec{uu})));
  }
  return rep;
}

double shift_gap(const Trajectory& traj, double h, Space norm_tag) {
  if (!(h > 0.0) || !(h < traj.T))
    throw ContractViolation("shift_gap: need 0 < h < T");
  const SystemSpec& sys = *traj.system;
  Interpolants interp(traj);
  const double tau = traj.tau;
  const int N = traj.steps();

  std::set<double> bps{0.0, traj.T - h};
  for (int n = 0; n <= N; ++n) {
    const double tn = n * tau;
    if (tn < traj.T - h) bps.insert(tn);
    if (tn - h > 0.0 && tn - h < traj.T - h) bps.insert(tn - h);
  }
  std::vector<double> pts(bps.begin(), bps.end());
  const double r = sys.norms().w_exponent();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    const double mid = 0.5 * (a + b);
    const Eigen::VectorXd d = interp.eval(InterpTag::U_bar, mid + h) -
                              interp.eval(InterpTag::U_bar, mid);
    if (norm_tag == Space::W) {
      acc += (b - a) * std::pow(sys.norms().norm(Space::W, StateVec{d}), r);
    } else {
      const double nv = sys.norms().norm(norm_tag, StateVec{d});
      acc += (b - a) * nv * nv;
    }
  }
  return norm_tag == Space::W ? std::pow(acc, 1.0 / r) : std::sqrt(acc);
}

std::vector<ConvergenceRow> convergence_study(
    const SystemSpec& system, const StateVec& u0, const StateVec& v0,
    const std::vector<double>& taus, double reference_tau,
    const SolverConfig& base_config, const ClosedFormRef& closed_form,
    int jobs) {
  std::optional<Trajectory> ref_traj;
  std::optional<Interpolants> ref_interp;
  if (!closed_form) {
    const double tmin = *std::min_element(taus.begin(), taus.end());
    if (!(reference_tau < tmin / 4.0))
      throw ContractViolation(
          "convergence_study: reference_tau must be < min(taus)/4");
    SolverConfig rc = base_config;
    rc.tau = reference_tau;
    ref_traj = run(system, u0, v0, rc);
    ref_interp.emplace(*ref_traj);
  }
  auto ref_u = [&](double t) {
    if (closed_form) return closed_form(t).first;
    return ref_interp->eval(InterpTag::U_hat, t);
  };
  auto ref_v = [&](double t) {
    if (closed_form) return closed_form(t).second;
    return ref_interp->eval(InterpTag::V_hat, t);
  };

  const NormFamily& nf = system.norms();

  // Worker pool over the tau list; error rows are assembled serially in
  // list order, and a failed run truncates the table there.
  std::vector<std::optional<Trajectory>> trajs(taus.size());
  {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= taus.size()) return;
        SolverConfig cfg = base_config;
        cfg.tau = taus[i];
        try {
          trajs[i] = run(system, u0, v0, cfg);
        } catch (const RunFailure&) {
          // leave empty
        }
      }
    };
    const int nthreads = std::clamp<int>(jobs, 1, static_cast<int>(taus.size()));
    if (nthreads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
  }

  std::vector<ConvergenceRow> rows;
  for (std::size_t ti = 0; ti < taus.size(); ++ti) {
    if (!trajs[ti]) return rows;  // partial table
    const Trajectory& traj = *trajs[ti];
    Interpolants interp(traj);
    const int N = traj.steps();
    ConvergenceRow row;
    row.tau = traj.tau;
    double l2v = 0.0;
    for (int n = 0; n < N; ++n) {
      const double a = n * traj.tau, b = (n + 1) * traj.tau;
      for (double t : {a, 0.5 * (a + b), b}) {
        const Eigen::VectorXd du = interp.eval(InterpTag::U_hat, t) - ref_u(t);
        const Eigen::VectorXd dv = interp.eval(InterpTag::V_hat, t) - ref_v(t);
        row.err_CH = std::max(row.err_CH, nf.norm(Space::H, StateVec{du}));
        row.err_V_CH = std::max(row.err_V_CH, nf.norm(Space::H, StateVec{dv}));
      }
      // Simpson per step for the L2(0,T;V) error
      auto sq = [&](double t) {
        const Eigen::VectorXd du = interp.eval(InterpTag::U_hat, t) - ref_u(t);
        const double nv = nf.norm(Space::V, StateVec{du});
        return nv * nv;
      };
      l2v += (b - a) / 6.0 * (sq(a) + 4.0 * sq(0.5 * (a + b)) + sq(b));
    }
    row.err_L2V = std::sqrt(l2v);
    if (!rows.empty() && rows.back().err_CH > 0.0 && row.err_CH > 0.0 &&
        rows.back().tau != row.tau) {
      row.order_estimate = std::log(rows.back().err_CH / row.err_CH) /
                           std::log(rows.back().tau / row.tau);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dinsys
