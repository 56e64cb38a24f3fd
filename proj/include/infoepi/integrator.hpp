#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "infoepi/model.hpp"
#include "infoepi/rk45.hpp"
#include "infoepi/slow_analysis.hpp"

namespace infoepi {

/// Euclidean distance in (U,M,Z) between the fast coordinates of a state and
/// the branch point at the state's infection level; +infinity when the branch
/// is infeasible there.
inline double distance_to_branch(const Params& p, const FullState& s, BranchId b) {
  const auto target = branch_fast_state(p, b, s.slow.I);
  if (!target) return std::numeric_limits<double>::infinity();
  const double du = s.fast.U - target->U;
  const double dm = s.fast.M - target->M;
  const double dz = s.fast.Z - target->Z;
  return std::sqrt(du * du + dm * dm + dz * dz);
}

enum class EventKind { BranchEnter, BranchExit, Lambda3ZeroCrossing, InfectionExtremum };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::BranchEnter: return "branch_enter";
    case EventKind::BranchExit: return "branch_exit";
    case EventKind::Lambda3ZeroCrossing: return "lambda3_zero";
    default: return "infection_extremum";
  }
}

/// What to watch while integrating the coupled system.
struct EventWatch {
  enum class Type { BranchProximity, Lambda3, InfectionExtremum };
  Type type;
  std::optional<BranchId> branch;  ///< required for BranchProximity and Lambda3
  double delta = 1e-2;             ///< BranchProximity tube radius
  bool terminal = false;
};

struct Event {
  EventKind kind;
  double time;  ///< fast time
  FullState state;
  std::optional<BranchId> branch;
  double value;  ///< distance at branch events, I at the other kinds
  double delta = std::numeric_limits<double>::quiet_NaN();  ///< branch events only
  double bracket_width;
};

struct Trajectory {
  std::vector<double> times;  ///< fast time, strictly increasing
  std::vector<FullState> states;
  std::vector<Event> events;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double max_fast_drift = 0.0;  ///< max |U+M+Z-1| over accepted samples
  double max_slow_drift = 0.0;
  bool event_terminated = false;
};

struct SlowTrajectory {
  std::vector<double> times;  ///< slow time
  std::vector<SlowState> states;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double max_drift = 0.0;
};

struct FastTrajectory {
  std::vector<double> times;
  std::vector<FastState> states;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double max_drift = 0.0;
};

namespace detail {
/// Components below zero by at most `atol` are integration roundoff and get
/// clamped; anything more negative vetoes the step.
template <std::size_t N>
bool clamp_filter(std::array<double, N>& y, double atol) {
  for (double& v : y) {
    if (v < 0.0) {
      if (v < -atol) return false;
      v = 0.0;
    }
  }
  return true;
}
}  // namespace detail

/// Integrates the coupled system in fast time with event watching.
inline Trajectory integrate_full(const Params& p, const FullState& state0, double t_end,
                                 const IntegratorConfig& cfg,
                                 std::span<const EventWatch> watch = {}) {
  p.validate();
  if (!(p.epsilon > 0.0))
    throw std::invalid_argument("integrate_full: epsilon must be positive");
  if (!state0.on_simplex())
    throw std::invalid_argument("integrate_full: initial state violates unit-sum invariants");

  std::vector<RawEventSpec<6>> raw;
  raw.reserve(watch.size());
  for (std::size_t i = 0; i < watch.size(); ++i) {
    const auto& w = watch[i];
    RawEventSpec<6> spec;
    spec.tag = static_cast<int>(i);
    spec.terminal = w.terminal;
    switch (w.type) {
      case EventWatch::Type::BranchProximity: {
        const BranchId b = w.branch.value();
        const double delta = w.delta;
        spec.g = [&p, b, delta](double, const std::array<double, 6>& y) {
          return distance_to_branch(p, FullState::from_array(y), b) - delta;
        };
        break;
      }
      case EventWatch::Type::Lambda3: {
        const BranchId b = w.branch.value();
        spec.g = [&p, b](double, const std::array<double, 6>& y) {
          return branch_lambda3(p, b, y[4]);
        };
        spec.hysteresis = 1e-6;
        break;
      }
      case EventWatch::Type::InfectionExtremum: {
        spec.g = [&p](double, const std::array<double, 6>& y) {
          return slow_rhs(p, {y[3], y[4], y[5]}, y[1], y[2])[1];
        };
        spec.hysteresis = 1e-8;
        break;
      }
    }
    raw.push_back(std::move(spec));
  }

  auto rhs = [&p](double, const std::array<double, 6>& y) {
    return full_rhs(p, FullState::from_array(y));
  };
  auto filter = [&cfg](std::array<double, 6>& y) {
    return detail::clamp_filter<6>(y, cfg.atol);
  };
  const auto res =
      rk45_integrate<6>(rhs, state0.to_array(), 0.0, t_end, cfg, std::move(raw), filter);

  Trajectory traj;
  traj.accepted = res.accepted;
  traj.rejected = res.rejected;
  traj.event_terminated = res.event_terminated;
  traj.times = res.t;
  traj.states.reserve(res.y.size());
  for (const auto& y : res.y) {
    const auto s = FullState::from_array(y);
    traj.states.push_back(s);
    traj.max_fast_drift = std::max(traj.max_fast_drift, std::abs(s.fast.sum() - 1.0));
    traj.max_slow_drift = std::max(traj.max_slow_drift, std::abs(s.slow.sum() - 1.0));
  }
  for (const auto& ev : res.events) {
    const auto& w = watch[static_cast<std::size_t>(ev.tag)];
    Event e;
    e.time = ev.t;
    e.state = FullState::from_array(ev.y);
    e.branch = w.branch;
    e.bracket_width = ev.bracket_width;
    switch (w.type) {
      case EventWatch::Type::BranchProximity:
        e.kind = ev.direction < 0 ? EventKind::BranchEnter : EventKind::BranchExit;
        e.value = distance_to_branch(p, e.state, *w.branch);
        e.delta = w.delta;
        break;
      case EventWatch::Type::Lambda3:
        e.kind = EventKind::Lambda3ZeroCrossing;
        e.value = e.state.slow.I;
        break;
      case EventWatch::Type::InfectionExtremum:
        e.kind = EventKind::InfectionExtremum;
        e.value = e.state.slow.I;
        break;
    }
    traj.events.push_back(e);
  }
  std::sort(traj.events.begin(), traj.events.end(),
            [](const Event& a, const Event& b) { return a.time < b.time; });
  return traj;
}

/// Integrates the reduced slow flow on a branch in slow time.
inline SlowTrajectory integrate_reduced(const Params& p, BranchId branch,
                                        const SlowState& state0, double tau_end,
                                        const IntegratorConfig& cfg) {
  p.validate(true);
  if (!state0.on_simplex())
    throw std::invalid_argument("integrate_reduced: initial state violates unit-sum invariants");
  auto rhs = [&p, branch](double, const std::array<double, 3>& y) {
    return reduced_slow_rhs(p, branch, {y[0], y[1], y[2]});
  };
  auto filter = [&cfg](std::array<double, 3>& y) {
    return detail::clamp_filter<3>(y, cfg.atol);
  };
  const auto res = rk45_integrate<3>(rhs, {state0.S, state0.I, state0.R}, 0.0, tau_end,
                                     cfg, {}, filter);
  SlowTrajectory traj;
  traj.accepted = res.accepted;
  traj.rejected = res.rejected;
  traj.times = res.t;
  traj.states.reserve(res.y.size());
  for (const auto& y : res.y) {
    traj.states.push_back({y[0], y[1], y[2]});
    traj.max_drift = std::max(traj.max_drift, std::abs(y[0] + y[1] + y[2] - 1.0));
  }
  return traj;
}

/// Integrates the information subsystem with the infected fraction frozen.
inline FastTrajectory integrate_fast(const Params& p, double I, const FastState& state0,
                                     double t_end, const IntegratorConfig& cfg) {
  p.validate(true);
  if (!state0.on_simplex())
    throw std::invalid_argument("integrate_fast: initial state violates unit-sum invariants");
  auto rhs = [&p, I](double, const std::array<double, 3>& y) {
    return fast_rhs(p, {y[0], y[1], y[2]}, I);
  };
  auto filter = [&cfg](std::array<double, 3>& y) {
    return detail::clamp_filter<3>(y, cfg.atol);
  };
  const auto res =
      rk45_integrate<3>(rhs, {state0.U, state0.M, state0.Z}, 0.0, t_end, cfg, {}, filter);
  FastTrajectory traj;
  traj.accepted = res.accepted;
  traj.rejected = res.rejected;
  traj.times = res.t;
  traj.states.reserve(res.y.size());
  for (const auto& y : res.y) {
    traj.states.push_back({y[0], y[1], y[2]});
    traj.max_drift = std::max(traj.max_drift, std::abs(y[0] + y[1] + y[2] - 1.0));
  }
  return traj;
}

}  // namespace infoepi
