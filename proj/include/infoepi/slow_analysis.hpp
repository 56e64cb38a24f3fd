#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "infoepi/fast_analysis.hpp"
#include "infoepi/model.hpp"
#include "infoepi/numerics.hpp"

namespace infoepi {

/// Branches of the critical manifold: fast state pinned at the free,
/// skeptical-free, or misinformed-free equilibrium respectively.
enum class BranchId { C00, C01, C02 };

inline const char* to_string(BranchId b) {
  switch (b) {
    case BranchId::C00: return "c00";
    case BranchId::C01: return "c01";
    default: return "c02";
  }
}

/// Frozen infection rate of the reduced slow flow on a branch; only C02
/// keeps a state dependence through the feedback on skepticism adoption.
inline double branch_rate(const Params& p, BranchId b, double I) {
  switch (b) {
    case BranchId::C00: return p.beta;
    case BranchId::C01:
      if (p.b1 <= 0.0) throw std::domain_error("branch_rate: b1 must be positive on C01");
      return p.beta * (2.0 * p.b1 - p.mu1) / p.b1;
    default: {
      const double denom = 2.0 * p.b2 - p.mu1 * (1.0 - p.K * I);
      if (denom <= 0.0) throw std::domain_error("branch_rate: degenerate denominator on C02");
      return p.beta * p.b2 / denom;
    }
  }
}

/// Reproduction number of the reduced slow flow on a branch (evaluated at
/// the disease-free state for C02).
inline double r0_slow(const Params& p, BranchId b) {
  const double gm = p.gamma + p.mu2;
  if (gm <= 0.0) throw std::domain_error("r0_slow: gamma + mu2 must be positive");
  return branch_rate(p, b, 0.0) / gm;
}

/// Fast coordinates of a branch at infection level I; absent when the
/// underlying fast equilibrium is infeasible there.
inline std::optional<FastState> branch_fast_state(const Params& p, BranchId b, double I) {
  switch (b) {
    case BranchId::C00: return FastState{1.0, 0.0, 0.0};
    case BranchId::C01: {
      const auto e = sfe(p, I);
      if (!e.feasible) return std::nullopt;
      return e.state;
    }
    default: {
      const auto e = mfe(p, I);
      if (!e.feasible) return std::nullopt;
      return e.state;
    }
  }
}

struct BranchLambda3 {
  double value;
  int argmax;  ///< C00 only: 0 if the b1 arm attains the max, 1 if the b2 arm; -1 otherwise
};

/// Transversal eigenvalue of the frozen fast system on a branch; the only
/// eigenvalue that can change sign under the slow flow.
inline BranchLambda3 branch_lambda3_info(const Params& p, BranchId b, double I) {
  switch (b) {
    case BranchId::C00: {
      const double l1 = p.b1 - p.mu1;
      const double l2 = feedback_b2(p, I) - p.mu1;
      return l1 >= l2 ? BranchLambda3{l1, 0} : BranchLambda3{l2, 1};
    }
    case BranchId::C01:
      return {p.mu1 * (p.b2 / (p.b1 * (1.0 - p.K * I)) - 1.0), -1};
    default:
      return {p.mu1 * (p.b1 * (1.0 - p.K * I) / p.b2 - 1.0), -1};
  }
}

inline double branch_lambda3(const Params& p, BranchId b, double I) {
  return branch_lambda3_info(p, b, I).value;
}

/// Reduced slow flow on a branch: the SIRS field with the infection rate
/// frozen at the branch value.
inline std::array<double, 3> reduced_slow_rhs(const Params& p, BranchId b,
                                              const SlowState& s) {
  const double rate = branch_rate(p, b, s.I);
  const double infection = rate * s.S * s.I;
  const double recovery = p.gamma * s.I;
  const double waning = p.eta * s.R;
  return {p.mu2 - infection + waning - p.mu2 * s.S,
          infection - recovery - p.mu2 * s.I,
          recovery - waning - p.mu2 * s.R};
}

struct SlowEquilibrium {
  enum class Kind { DFE, EE };
  BranchId branch;
  Kind kind;
  SlowState state;
  double r0;
};

inline SlowEquilibrium dfe(const Params& p, BranchId b) {
  return {b, SlowEquilibrium::Kind::DFE, {1.0, 0.0, 0.0}, r0_slow(p, b)};
}

/// Endemic equilibrium of the reduced slow flow; absent when the branch
/// reproduction number does not exceed one. On C02 the closed-form infection
/// level is polished by one Newton step on the (affine) consistency residual
/// S(I) + I + R(I) - 1, which lands on the exact root.
inline std::optional<SlowEquilibrium> endemic_equilibrium(const Params& p, BranchId b) {
  const double r0 = r0_slow(p, b);
  if (!(r0 > 1.0)) return std::nullopt;
  const double gm = p.gamma + p.mu2;
  const double em = p.eta + p.mu2;
  SlowState s;
  if (b == BranchId::C02) {
    const double bb = p.beta * p.b2;
    double I = gm * (bb - gm * (2.0 * p.b2 - p.mu1)) /
               (bb * (em + p.gamma) + p.mu1 * p.K * em * gm);
    auto consistency = [&](double i) {
      return gm * (2.0 * p.b2 - p.mu1 * (1.0 - p.K * i)) / bb + i + p.gamma * i / em - 1.0;
    };
    const double slope = gm * p.mu1 * p.K / bb + 1.0 + p.gamma / em;
    I -= consistency(I) / slope;
    s.I = I;
    s.R = p.gamma * I / em;
    s.S = gm / branch_rate(p, b, I);
  } else {
    const double rate = branch_rate(p, b, 0.0);
    s.S = gm / rate;
    s.I = (rate - gm) * em / (rate * (p.gamma + em));
    s.R = p.gamma * s.I / em;
  }
  return SlowEquilibrium{b, SlowEquilibrium::Kind::EE, s, r0};
}

// ---------------------------------------------------------------------------
// Equilibria of the coupled six-dimensional system
// ---------------------------------------------------------------------------

enum class FullEqLabel { E0, E1, E2, E3, E4, E5, Estar };

inline const char* to_string(FullEqLabel l) {
  switch (l) {
    case FullEqLabel::E0: return "E0";
    case FullEqLabel::E1: return "E1";
    case FullEqLabel::E2: return "E2";
    case FullEqLabel::E3: return "E3";
    case FullEqLabel::E4: return "E4";
    case FullEqLabel::E5: return "E5";
    default: return "Estar";
  }
}

struct FullEquilibrium {
  FullEqLabel label;
  FullState state;
  std::array<std::complex<double>, 6> eigenvalues;  ///< numeric, sorted by (Re, Im)
  bool feasible;
  Stability stability;
  double residual;   ///< sup-norm of the coupled field at the state
  std::string note;  ///< nonempty when a printed closed form was overridden
};

namespace detail {

inline Stability stability_from6(const std::array<std::complex<double>, 6>& eig,
                                 double tol = kMarginalTol) {
  double max_re = eig[0].real();
  for (const auto& e : eig) max_re = std::max(max_re, e.real());
  if (max_re < -tol) return Stability::Stable;
  if (max_re > tol) return Stability::Unstable;
  return Stability::Marginal;
}

inline FullEquilibrium finish_equilibrium(const Params& p, FullEqLabel label,
                                          const FullState& st, bool feasibility_condition,
                                          std::string note = {}) {
  FullEquilibrium e;
  e.label = label;
  e.state = st;
  e.note = std::move(note);
  const auto f = full_rhs(p, st);
  e.residual = 0.0;
  for (double v : f) e.residual = std::max(e.residual, std::abs(v));
  e.feasible = feasibility_condition && st.on_simplex(1e-9);
  auto wrapped = [&p](const std::array<double, 6>& x) {
    return full_rhs(p, FullState::from_array(x));
  };
  e.eigenvalues = eigenvalues<6>(fd_jacobian<6>(wrapped, st.to_array()));
  e.stability = stability_from6(e.eigenvalues);
  return e;
}

}  // namespace detail

/// All seven equilibrium candidates of the coupled system, each with numeric
/// eigenvalues from the finite-difference Jacobian. Infeasible candidates are
/// flagged rather than omitted so parameter scans can watch feasibility
/// boundaries. The coexistence point solves the two constraints
/// beta_eff(M,Z)*S = gamma+mu2 and U+M+Z = 1; the printed closed forms are
/// evaluated alongside and any disagreement is reported in `note`.
inline std::vector<FullEquilibrium> full_equilibria(const Params& p) {
  std::vector<FullEquilibrium> out;
  const SlowState free_slow{1.0, 0.0, 0.0};
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // E0: everything free.
  out.push_back(detail::finish_equilibrium(p, FullEqLabel::E0,
                                           {{1.0, 0.0, 0.0}, free_slow}, true));

  // E1: endemic on C00.
  {
    auto ee = endemic_equilibrium(p, BranchId::C00);
    SlowState s = ee ? ee->state : SlowState{nan, nan, nan};
    if (!ee) {  // evaluate the closed form anyway so the scan sees the crossing
      const double gm = p.gamma + p.mu2, em = p.eta + p.mu2;
      s = {gm / p.beta, (p.beta - gm) * em / (p.beta * (p.gamma + em)), 0.0};
      s.R = p.gamma * s.I / em;
    }
    out.push_back(detail::finish_equilibrium(p, FullEqLabel::E1, {{1.0, 0.0, 0.0}, s},
                                             ee.has_value()));
  }

  // E2 / E3: disease-free and endemic states on C01.
  {
    const auto fast = sfe(p, 0.0);
    out.push_back(detail::finish_equilibrium(p, FullEqLabel::E2, {fast.state, free_slow},
                                             fast.feasible));
    auto ee = endemic_equilibrium(p, BranchId::C01);
    if (ee) {
      out.push_back(detail::finish_equilibrium(p, FullEqLabel::E3, {fast.state, ee->state},
                                               fast.feasible));
    } else {
      out.push_back(detail::finish_equilibrium(
          p, FullEqLabel::E3, {fast.state, {nan, nan, nan}}, false));
    }
  }

  // E4 / E5: disease-free and endemic states on C02 (fast coordinates depend
  // on the infection level).
  {
    const auto fast0 = mfe(p, 0.0);
    out.push_back(detail::finish_equilibrium(p, FullEqLabel::E4, {fast0.state, free_slow},
                                             fast0.feasible));
    auto ee = endemic_equilibrium(p, BranchId::C02);
    if (ee) {
      const auto fast = mfe(p, ee->state.I);
      out.push_back(detail::finish_equilibrium(p, FullEqLabel::E5, {fast.state, ee->state},
                                               fast.feasible));
    } else {
      out.push_back(detail::finish_equilibrium(
          p, FullEqLabel::E5, {{nan, nan, nan}, {nan, nan, nan}}, false));
    }
  }

  // Coexistence: sits on the fast threshold set, off every branch.
  {
    FullEquilibrium e;
    if (p.K > 0.0 && p.b1 > 0.0) {
      const double Istar = (p.b1 - p.b2) / (p.K * p.b1);
      const double em = p.eta + p.mu2, gm = p.gamma + p.mu2;
      const double R = p.gamma * Istar / em;
      const double S = 1.0 - Istar - R;
      const double U = p.mu1 / p.b1;
      std::string note;
      if (p.beta * S > 0.0) {
        const double c = gm / (p.beta * S);
        const double Z = (2.0 - U - c) / (1.0 + c);
        const double M = 1.0 - U - Z;
        // Printed closed forms for comparison.
        const double z_printed = (p.b1 * gm + p.beta * S) / (p.b1 * (gm - p.beta * S));
        const double m_printed = (gm * (1.0 + Z) - p.beta * S) / (p.beta * S);
        if (std::abs(z_printed - Z) > 1e-9 * std::max(1.0, std::abs(Z)))
          note = "printed Z* expression disagrees with the constraint solution";
        else if (std::abs(m_printed - M) > 1e-9 * std::max(1.0, std::abs(M)))
          note = "printed M* expression disagrees with the constraint solution";
        e = detail::finish_equilibrium(p, FullEqLabel::Estar,
                                       {{U, M, Z}, {S, Istar, R}}, true, note);
      } else {
        e = detail::finish_equilibrium(p, FullEqLabel::Estar,
                                       {{U, nan, nan}, {S, Istar, R}}, false);
      }
    } else {
      e.label = FullEqLabel::Estar;
      e.state = {{nan, nan, nan}, {nan, nan, nan}};
      e.eigenvalues.fill(nan);
      e.feasible = false;
      e.stability = Stability::Marginal;
      e.residual = nan;
      e.note = "undefined: requires K > 0 and b1 > 0";
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace infoepi
