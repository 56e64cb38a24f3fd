#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "infoepi/integrator.hpp"
#include "infoepi/numerics.hpp"
#include "infoepi/slow_analysis.hpp"

namespace infoepi {

/// Exit point p0 > 0 of the planar entry-exit map for a slow passage past a
/// loss of normal stability: the first p with
///   integral_{y0}^{p} f(y)/g(y) dy = 0,
/// computed by adaptive quadrature of the antiderivative and a bracketed
/// root find. Requires y0 < 0, g > 0 on [y0, search_bound], and
/// sign(f(y)) = sign(y) there.
inline double planar_exit_point(const std::function<double(double)>& f,
                                const std::function<double(double)>& g, double y0,
                                double search_bound, double tol = 1e-10) {
  if (!(y0 < 0.0)) throw std::invalid_argument("planar_exit_point: y0 must be negative");
  if (!(search_bound > 0.0))
    throw std::invalid_argument("planar_exit_point: search bound must be positive");
  const double span = search_bound - y0;
  for (int i = 0; i <= 200; ++i) {
    const double y = y0 + span * i / 200.0;
    if (!(g(y) > 0.0))
      throw std::invalid_argument("planar_exit_point: g must be positive on the interval");
    if (std::abs(y) > 1e-6 * span && f(y) * y <= 0.0)
      throw std::invalid_argument("planar_exit_point: sign(f) must equal sign(y)");
  }
  auto phi = [&](double p) {
    return integrate_adaptive([&](double y) { return f(y) / g(y); }, y0, p, tol / 10.0);
  };
  if (phi(search_bound) < 0.0)
    throw BracketError("planar_exit_point: exit lies beyond the search bound");
  const double width = std::max(tol * 1e-3, 4e-16 * std::max(1.0, search_bound));
  return bisect(phi, 0.0, search_bound, width);
}

enum class PredictStatus {
  Exit,        ///< accumulated exponent returned to zero
  NoExit,      ///< reduced flow settles where the branch stays attracting
  NonMonotone  ///< endemic state sits on the stability threshold; prediction declined
};

inline const char* to_string(PredictStatus s) {
  switch (s) {
    case PredictStatus::Exit: return "exit";
    case PredictStatus::NoExit: return "no_predicted_exit";
    default: return "non_monotone_regime";
  }
}

struct PredictedExit {
  PredictStatus status;
  double time = std::numeric_limits<double>::quiet_NaN();  ///< fast time (Exit only)
  double I = std::numeric_limits<double>::quiet_NaN();     ///< infection level at exit
  double tau_elapsed = std::numeric_limits<double>::quiet_NaN();
  double min_accumulated = 0.0;  ///< most negative value of the accumulated exponent
  std::string caveat;
};

/// Fixed disclaimer attached to every prediction: the classical hypotheses
/// behind the planar map do not all hold for this model.
inline constexpr const char* kPredictorCaveat =
    "heuristic: the transversal eigenvalue is non-monotone along the slow flow and "
    "spectral separation is unverified";

/// Accumulated-exponent exit prediction: integrates the reduced slow flow on
/// the branch from the entry state and accumulates A(tau) = integral of
/// lambda3(I(tau)); the predicted exit is the first return of A to zero after
/// it has gone negative. Requires lambda3 < 0 at entry. Declines with
/// NonMonotone when the branch endemic state sits on the lambda3 = 0
/// threshold (|lambda3(I*)| < 1e-6), where repeated sign changes defeat the
/// construction.
inline PredictedExit predict_exit(const Params& p, BranchId branch,
                                  const SlowState& entry_slow, double entry_time,
                                  const IntegratorConfig& cfg, double tau_horizon = 500.0) {
  const double lam_entry = branch_lambda3(p, branch, entry_slow.I);
  if (!(lam_entry < 0.0))
    throw std::invalid_argument("predict_exit: entry is not on the attracting part");

  PredictedExit out;
  out.caveat = kPredictorCaveat;

  const auto ee = endemic_equilibrium(p, branch);
  if (ee && std::abs(branch_lambda3(p, branch, ee->state.I)) < 1e-6) {
    out.status = PredictStatus::NonMonotone;
    return out;
  }

  auto rhs = [&p, branch](double, const std::array<double, 4>& y) {
    const auto d = reduced_slow_rhs(p, branch, {y[0], y[1], y[2]});
    return std::array<double, 4>{d[0], d[1], d[2], branch_lambda3(p, branch, y[1])};
  };
  std::vector<RawEventSpec<4>> events(1);
  events[0].g = [](double, const std::array<double, 4>& y) { return y[3]; };
  events[0].direction = +1;
  events[0].terminal = true;

  auto filter = [&cfg](std::array<double, 4>& y) {
    for (int i = 0; i < 3; ++i) {
      if (y[i] < 0.0) {
        if (y[i] < -cfg.atol) return false;
        y[i] = 0.0;
      }
    }
    return true;
  };
  const auto res = rk45_integrate<4>(rhs, {entry_slow.S, entry_slow.I, entry_slow.R, 0.0},
                                     0.0, tau_horizon, cfg, std::move(events), filter);
  for (const auto& y : res.y) out.min_accumulated = std::min(out.min_accumulated, y[3]);

  if (res.event_terminated) {
    const auto& ev = res.events.front();
    out.status = PredictStatus::Exit;
    out.tau_elapsed = ev.t;
    out.time = entry_time + ev.t / p.epsilon;
    out.I = ev.y[1];
    return out;
  }

  // No return of A to zero within the horizon: legitimate only if the flow
  // settled where the branch stays attracting.
  const auto& last = res.y.back();
  const SlowState target = ee ? ee->state : SlowState{1.0, 0.0, 0.0};
  const double lam_target = branch_lambda3(p, branch, target.I);
  const double dist = std::max({std::abs(last[0] - target.S), std::abs(last[1] - target.I),
                                std::abs(last[2] - target.R)});
  if (lam_target < 0.0 && dist < 1e-3) {
    out.status = PredictStatus::NoExit;
    return out;
  }
  throw IntegrationError("predict_exit: horizon exceeded before the accumulated exponent resolved",
                         res.t.back(), {last.begin(), last.end()});
}

/// One measured slow passage near a branch. A trailing entry that never
/// exits (asymptotic convergence) leaves the exit fields empty.
struct EntryExitRecord {
  BranchId branch;
  double entry_time;
  std::optional<double> exit_time;
  FullState entry_state;
  std::optional<FullState> exit_state;
  double entry_I;
  std::optional<double> exit_I;
  std::optional<PredictedExit> predicted;
  double accumulated_exponent_at_exit =
      std::numeric_limits<double>::quiet_NaN();  ///< integral of lambda3 dtau over the episode
  double min_eigen_gap =
      std::numeric_limits<double>::infinity();  ///< min distance from lambda3 to the
                                                ///< other frozen eigenvalues (diagnostic)
};

/// Pairs BranchEnter/BranchExit events of one branch watch into episode
/// records. An exit with no preceding enter opens an episode at the start of
/// the trajectory (orbit born inside the tube); a trailing enter yields an
/// open record.
inline std::vector<EntryExitRecord> measure_entry_exit(const Trajectory& traj,
                                                       const Params& p, BranchId branch,
                                                       double delta) {
  std::vector<EntryExitRecord> records;
  if (traj.times.empty()) return records;
  std::optional<EntryExitRecord> open;

  auto other_eigs = [&](double I) {
    if (branch == BranchId::C01)
      return std::array<double, 2>{-p.mu1, p.mu1 - p.b1};
    const double q = 1.0 - p.K * I;
    return std::array<double, 2>{-p.mu1, (p.mu1 * q - p.b2) / q};
  };
  auto close_episode = [&](double t_exit, const FullState& s_exit) {
    open->exit_time = t_exit;
    open->exit_state = s_exit;
    open->exit_I = s_exit.slow.I;
    double acc = 0.0;
    double gap = std::numeric_limits<double>::infinity();
    double tp = open->entry_time;
    double lp = branch_lambda3(p, branch, open->entry_state.slow.I);
    auto visit = [&](double t, double I) {
      const double l = branch_lambda3(p, branch, I);
      acc += 0.5 * (l + lp) * (t - tp) * p.epsilon;
      for (double o : other_eigs(I)) gap = std::min(gap, std::abs(l - o));
      tp = t;
      lp = l;
    };
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      if (traj.times[k] <= open->entry_time) continue;
      if (traj.times[k] >= t_exit) break;
      visit(traj.times[k], traj.states[k].slow.I);
    }
    visit(t_exit, s_exit.slow.I);
    open->accumulated_exponent_at_exit = acc;
    open->min_eigen_gap = gap;
    records.push_back(*open);
    open.reset();
  };

  for (const auto& ev : traj.events) {
    if (!ev.branch || *ev.branch != branch) continue;
    if (std::isnan(ev.delta) || std::abs(ev.delta - delta) > 1e-15) continue;
    if (ev.kind == EventKind::BranchEnter) {
      if (open) continue;  // duplicate enter; keep the earlier one
      EntryExitRecord r;
      r.branch = branch;
      r.entry_time = ev.time;
      r.entry_state = ev.state;
      r.entry_I = ev.state.slow.I;
      open = r;
    } else if (ev.kind == EventKind::BranchExit) {
      if (!open) {
        if (distance_to_branch(p, traj.states.front(), branch) >= delta) continue;
        EntryExitRecord r;
        r.branch = branch;
        r.entry_time = traj.times.front();
        r.entry_state = traj.states.front();
        r.entry_I = traj.states.front().slow.I;
        open = r;
      }
      close_episode(ev.time, ev.state);
    }
  }
  if (open) records.push_back(*open);
  return records;
}

}  // namespace infoepi
