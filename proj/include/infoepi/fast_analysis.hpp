#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "infoepi/model.hpp"
#include "infoepi/numerics.hpp"

namespace infoepi {

enum class FastKind { MSFE, SFE, MFE, ThresholdLine };
enum class Stability { Stable, Unstable, Marginal };

/// |Re lambda| below this is classified as marginal rather than forced into a
/// stable/unstable boolean; the threshold set sits exactly on a zero eigenvalue.
inline constexpr double kMarginalTol = 1e-8;

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    default: return "marginal";
  }
}

inline const char* to_string(FastKind k) {
  switch (k) {
    case FastKind::MSFE: return "MSFE";
    case FastKind::SFE: return "SFE";
    case FastKind::MFE: return "MFE";
    default: return "ThresholdLine";
  }
}

/// Equilibrium of the information subsystem at a frozen infected fraction.
/// eigenvalues[2] is the transversal eigenvalue that changes sign under the
/// slow flow. For ThresholdLine, `state` holds the segment midpoint and
/// m_plus_z the conserved M+Z = 1 - U* along the set.
struct FastEquilibrium {
  FastKind kind;
  FastState state;
  std::array<std::complex<double>, 3> eigenvalues;
  bool feasible;
  Stability stability;
  double m_plus_z = 0.0;
};

namespace detail {
inline Stability stability_from(const std::array<std::complex<double>, 3>& eig,
                                double tol = kMarginalTol) {
  double max_re = eig[0].real();
  for (const auto& e : eig) max_re = std::max(max_re, e.real());
  if (max_re < -tol) return Stability::Stable;
  if (max_re > tol) return Stability::Unstable;
  return Stability::Marginal;
}
}  // namespace detail

struct R0Fast {
  double value;
  int argmax;  ///< 0: b1/mu1 attains the max, 1: b2/(mu1*(1-K*I)) does; ties report 0
};

/// Basic reproduction number of the information subsystem,
/// max{b1/mu1, b2/(mu1*(1-K*I))}.
inline R0Fast r0_fast(const Params& p, double I) {
  if (p.mu1 <= 0.0) throw std::domain_error("r0_fast: mu1 must be positive");
  const double r1 = p.b1 / p.mu1;
  const double r2 = feedback_b2(p, I) / p.mu1;
  return r1 >= r2 ? R0Fast{r1, 0} : R0Fast{r2, 1};
}

/// Misinformed-skeptical-free equilibrium (1,0,0); always feasible, stable
/// iff the fast reproduction number is below one.
inline FastEquilibrium msfe(const Params& p, double I) {
  FastEquilibrium e;
  e.kind = FastKind::MSFE;
  e.state = {1.0, 0.0, 0.0};
  e.eigenvalues = {-p.mu1, p.b1 - p.mu1, feedback_b2(p, I) - p.mu1};
  e.feasible = true;
  e.stability = detail::stability_from(e.eigenvalues);
  return e;
}

/// Skeptical-free equilibrium (mu1/b1, (b1-mu1)/b1, 0); feasible iff b1 > mu1,
/// stable iff b1 exceeds the effective skepticism-adoption rate.
inline FastEquilibrium sfe(const Params& p, double I) {
  if (p.b1 <= 0.0) throw std::domain_error("sfe: b1 must be positive");
  FastEquilibrium e;
  e.kind = FastKind::SFE;
  e.state = {p.mu1 / p.b1, (p.b1 - p.mu1) / p.b1, 0.0};
  e.eigenvalues = {-p.mu1, p.mu1 - p.b1,
                   p.mu1 * (p.b2 / (p.b1 * (1.0 - p.K * I)) - 1.0)};
  e.feasible = p.b1 > p.mu1;
  e.stability = detail::stability_from(e.eigenvalues);
  return e;
}

/// Misinformed-free equilibrium; feasible iff b2 > mu1*(1-K*I), stable iff b1
/// stays below the effective skepticism-adoption rate.
inline FastEquilibrium mfe(const Params& p, double I) {
  if (p.b2 <= 0.0) throw std::domain_error("mfe: b2 must be positive");
  const double q = 1.0 - p.K * I;
  FastEquilibrium e;
  e.kind = FastKind::MFE;
  e.state = {p.mu1 * q / p.b2, 0.0, (p.b2 - p.mu1 * q) / p.b2};
  e.eigenvalues = {-p.mu1, (p.mu1 * q - p.b2) / q, p.mu1 * (p.b1 * q / p.b2 - 1.0)};
  e.feasible = p.b2 > p.mu1 * q;
  e.stability = detail::stability_from(e.eigenvalues);
  return e;
}

/// One-dimensional set of equilibria present only when b1 equals the
/// effective skepticism-adoption rate (relative tolerance `tol`) and the fast
/// reproduction number exceeds one. U* = 1/R0 is fixed; M*+Z* = 1-U*
/// parametrizes the set; `state` carries the segment midpoint. Eigenvalues
/// are the published closed forms for this degenerate set.
inline std::optional<FastEquilibrium> threshold_line(const Params& p, double I,
                                                     double tol = 1e-9) {
  const double b = p.b1;
  const double bbar = feedback_b2(p, I);
  if (std::abs(b - bbar) > tol * std::max(1.0, std::abs(b))) return std::nullopt;
  const auto r0 = r0_fast(p, I);
  if (r0.value <= 1.0) return std::nullopt;
  FastEquilibrium e;
  e.kind = FastKind::ThresholdLine;
  const double ustar = 1.0 / r0.value;
  e.m_plus_z = 1.0 - ustar;
  e.state = {ustar, 0.5 * e.m_plus_z, 0.5 * e.m_plus_z};
  const double disc = std::sqrt((b - p.mu1) * (b - p.mu1) + 4.0 * p.mu1 * p.mu1);
  e.eigenvalues = {0.0, 0.5 * (-b - p.mu1 + disc), 0.5 * (-b - p.mu1 - disc)};
  e.feasible = true;
  e.stability = Stability::Marginal;
  return e;
}

/// All fast equilibria with feasibility and stability flags; the threshold
/// set is appended when its existence condition holds.
inline std::vector<FastEquilibrium> classify_fast(const Params& p, double I,
                                                  double threshold_tol = 1e-9) {
  std::vector<FastEquilibrium> out{msfe(p, I), sfe(p, I), mfe(p, I)};
  if (auto line = threshold_line(p, I, threshold_tol)) out.push_back(*line);
  return out;
}

// ---------------------------------------------------------------------------
// Lyapunov descent verification
// ---------------------------------------------------------------------------

enum class LyapunovRegime {
  MsfeExponential,  ///< R0 < 1: M+Z decays exponentially
  SfeGoh,           ///< SFE globally stable: Goh function over (U,M) plus Z
  MfeGoh,           ///< MFE globally stable: Goh function over (U,Z) plus M
  ThresholdGoh      ///< threshold set: quadratic in U plus Goh term in L=M+Z
};

/// Which global-stability hypothesis holds for (params, I); throws when none
/// matches (boundary cases such as R0 = 1).
inline LyapunovRegime lyapunov_regime(const Params& p, double I,
                                      double threshold_tol = 1e-9) {
  const double bbar = feedback_b2(p, I);
  if (std::abs(p.b1 - bbar) <= threshold_tol * std::max(1.0, p.b1)) {
    if (p.b1 > p.mu1) return LyapunovRegime::ThresholdGoh;
    if (p.b1 < p.mu1) return LyapunovRegime::MsfeExponential;
    throw std::invalid_argument("lyapunov_regime: R0 at threshold, no hypothesis applies");
  }
  if (std::max(p.b1, bbar) < p.mu1) return LyapunovRegime::MsfeExponential;
  if (p.b1 > p.mu1 && p.b1 > bbar) return LyapunovRegime::SfeGoh;
  if (bbar > p.mu1 && bbar > p.b1) return LyapunovRegime::MfeGoh;
  throw std::invalid_argument("lyapunov_regime: no global-stability hypothesis matches");
}

namespace detail {
/// Goh-Lotka-Volterra term; compartments vanishing at the target contribute
/// linearly.
inline double goh_term(double x, double xstar) {
  return xstar > 0.0 ? x - xstar * std::log(x) : x;
}
}  // namespace detail

/// Lyapunov function value for the given regime at a fast state.
inline double lyapunov_value(LyapunovRegime regime, const FastEquilibrium& target,
                             const FastState& s) {
  switch (regime) {
    case LyapunovRegime::MsfeExponential:
      return s.M + s.Z;
    case LyapunovRegime::SfeGoh:
      return detail::goh_term(s.U, target.state.U) +
             detail::goh_term(s.M, target.state.M) + s.Z;
    case LyapunovRegime::MfeGoh:
      return detail::goh_term(s.U, target.state.U) + s.M +
             detail::goh_term(s.Z, target.state.Z);
    case LyapunovRegime::ThresholdGoh: {
      const double du = s.U - target.state.U;
      return 0.5 * du * du + detail::goh_term(s.M + s.Z, target.m_plus_z);
    }
  }
  throw std::logic_error("lyapunov_value: unknown regime");
}

struct DescentReport {
  LyapunovRegime regime;
  double max_increase;       ///< largest V(k+1)-V(k) over consecutive samples
  double initial_value;
  double final_value;
  double decay_rate;         ///< MSFE only: fitted slope of log(M+Z); NaN otherwise
  double terminal_distance;  ///< distance to the target at the last sample
  bool pass;                 ///< max_increase <= tolerance
};

/// Evaluates the regime's Lyapunov function along a sampled trajectory and
/// reports the worst increase between consecutive samples. For the MSFE
/// regime the asymptotic decay rate of M+Z is fitted on the trailing half of
/// the samples. Distances are sup-norm in (U,M,Z); the threshold regime
/// measures in the reduced (U, M+Z) coordinates where its target is a point.
inline DescentReport lyapunov_check(const Params& p, double I,
                                    const FastEquilibrium& target,
                                    std::span<const double> times,
                                    std::span<const FastState> traj,
                                    double tol = 1e-8) {
  if (times.size() != traj.size() || traj.size() < 2)
    throw std::invalid_argument("lyapunov_check: need >= 2 samples");
  const LyapunovRegime regime = lyapunov_regime(p, I);
  const bool matches =
      (regime == LyapunovRegime::MsfeExponential && target.kind == FastKind::MSFE) ||
      (regime == LyapunovRegime::SfeGoh && target.kind == FastKind::SFE) ||
      (regime == LyapunovRegime::MfeGoh && target.kind == FastKind::MFE) ||
      (regime == LyapunovRegime::ThresholdGoh && target.kind == FastKind::ThresholdLine);
  if (!matches)
    throw std::invalid_argument("lyapunov_check: target is not the GAS candidate here");

  DescentReport r{};
  r.regime = regime;
  r.decay_rate = std::numeric_limits<double>::quiet_NaN();
  double prev = lyapunov_value(regime, target, traj[0]);
  r.initial_value = prev;
  r.max_increase = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double v = lyapunov_value(regime, target, traj[k]);
    r.max_increase = std::max(r.max_increase, v - prev);
    prev = v;
  }
  r.final_value = prev;

  if (regime == LyapunovRegime::MsfeExponential) {
    std::vector<double> ts, logs;
    for (std::size_t k = traj.size() / 2; k < traj.size(); ++k) {
      const double l = traj[k].M + traj[k].Z;
      if (l > 1e-250) {
        ts.push_back(times[k]);
        logs.push_back(std::log(l));
      }
    }
    if (ts.size() >= 2) r.decay_rate = linear_fit(ts, logs).slope;
  }

  const FastState& last = traj.back();
  if (regime == LyapunovRegime::ThresholdGoh) {
    r.terminal_distance = std::max(std::abs(last.U - target.state.U),
                                   std::abs(last.M + last.Z - target.m_plus_z));
  } else {
    r.terminal_distance = std::max({std::abs(last.U - target.state.U),
                                    std::abs(last.M - target.state.M),
                                    std::abs(last.Z - target.state.Z)});
  }
  r.pass = r.max_increase <= tol;
  return r;
}

// ---------------------------------------------------------------------------
// Transcritical bifurcation detection
// ---------------------------------------------------------------------------

enum class BifParam { B1, B2 };

struct TranscriticalResult {
  double critical;            ///< located parameter value
  double cond_i;              ///< w . F_p at the bifurcation (should vanish)
  double cond_ii;             ///< w . [DF_p v]
  double cond_iii;            ///< w . D2F(v,v), one term per unordered index pair
  std::array<double, 3> v;    ///< right null vector, first component scaled to 1
  std::array<double, 3> w;    ///< left null vector, largest component scaled to 1
};

struct BracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Locates the transcritical bifurcation of the free equilibrium (1,0,0) in
/// b1 or b2 by bisection on the corresponding closed-form eigenvalue, then
/// verifies Sotomayor's three conditions by finite differences. cond_iii is
/// reported as half the second directional derivative, counting each
/// unordered index pair once.
inline TranscriticalResult find_transcritical(const Params& base, BifParam which,
                                              double lo, double hi, double I,
                                              double tol = 1e-9) {
  auto with_param = [&](double v) {
    Params q = base;
    (which == BifParam::B1 ? q.b1 : q.b2) = v;
    return q;
  };
  auto eigenvalue = [&](double v) {
    const auto e = msfe(with_param(v), I);
    return which == BifParam::B1 ? e.eigenvalues[1].real() : e.eigenvalues[2].real();
  };
  if (eigenvalue(lo) * eigenvalue(hi) > 0.0)
    throw BracketError("find_transcritical: eigenvalue does not change sign over bracket");
  const double pstar = bisect(eigenvalue, lo, hi, tol);

  const Params pc = with_param(pstar);
  const std::array<double, 3> x0{1.0, 0.0, 0.0};
  auto rhs_at = [&](const Params& q) {
    return [&q, I](const std::array<double, 3>& x) {
      return fast_rhs(q, {x[0], x[1], x[2]}, I);
    };
  };

  // Null vectors of the Jacobian at the critical parameter.
  const Eigen::Matrix3d J = fd_jacobian<3>(rhs_at(pc), x0);
  Eigen::EigenSolver<Eigen::Matrix3d> right(J), left(Eigen::Matrix3d(J.transpose()));
  auto null_vector = [](const Eigen::EigenSolver<Eigen::Matrix3d>& es) {
    int arg = 0;
    double best = std::numeric_limits<double>::infinity(), second = best;
    for (int i = 0; i < 3; ++i) {
      const double mag = std::abs(es.eigenvalues()(i));
      if (mag < best) {
        second = best;
        best = mag;
        arg = i;
      } else {
        second = std::min(second, mag);
      }
    }
    if (second < 1e-7)
      throw DegeneracyError("find_transcritical: repeated near-zero eigenvalue");
    Eigen::Vector3d v = es.eigenvectors().col(arg).real();
    return v;
  };
  Eigen::Vector3d v = null_vector(right);
  Eigen::Vector3d w = null_vector(left);
  if (std::abs(v(0)) < 1e-8)
    throw DegeneracyError("find_transcritical: unexpected null-vector structure");
  v /= v(0);
  int wmax = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(w(i)) > std::abs(w(wmax))) wmax = i;
  w /= w(wmax);
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v(i)) < 1e-10) v(i) = 0.0;
    if (std::abs(w(i)) < 1e-10) w(i) = 0.0;
  }

  auto dot_rhs = [&](const Eigen::Vector3d& lhs, const std::array<double, 3>& f) {
    return lhs(0) * f[0] + lhs(1) * f[1] + lhs(2) * f[2];
  };

  // (i) w . F_p and (ii) w . [DF_p v], central differences in the parameter.
  const double dp = 1e-6 * std::max(1.0, std::abs(pstar));
  const auto fp = rhs_at(with_param(pstar + dp))(x0);
  const auto fm = rhs_at(with_param(pstar - dp))(x0);
  const double cond_i =
      dot_rhs(w, {(fp[0] - fm[0]) / (2 * dp), (fp[1] - fm[1]) / (2 * dp),
                  (fp[2] - fm[2]) / (2 * dp)});
  const Eigen::Matrix3d Jp = fd_jacobian<3>(rhs_at(with_param(pstar + dp)), x0);
  const Eigen::Matrix3d Jm = fd_jacobian<3>(rhs_at(with_param(pstar - dp)), x0);
  const Eigen::Matrix3d DFp = (Jp - Jm) / (2 * dp);
  const double cond_ii = w.dot(DFp * v);

  // (iii) second directional derivative along v; the RHS is quadratic in the
  // state so the central difference is exact.
  const double h = 1e-4;
  std::array<double, 3> xp{x0[0] + h * v(0), x0[1] + h * v(1), x0[2] + h * v(2)};
  std::array<double, 3> xm{x0[0] - h * v(0), x0[1] - h * v(1), x0[2] - h * v(2)};
  const auto f0 = rhs_at(pc)(x0), fvp = rhs_at(pc)(xp), fvm = rhs_at(pc)(xm);
  std::array<double, 3> d2{};
  for (int i = 0; i < 3; ++i) d2[i] = (fvp[i] - 2.0 * f0[i] + fvm[i]) / (h * h);
  const double cond_iii = 0.5 * dot_rhs(w, d2);

  if (std::abs(cond_ii) < 1e-6 || std::abs(cond_iii) < 1e-6)
    throw DegeneracyError("find_transcritical: Sotomayor condition degenerate");

  return {pstar, cond_i, cond_ii, cond_iii,
          {v(0), v(1), v(2)}, {w(0), w(1), w(2)}};
}

}  // namespace infoepi
