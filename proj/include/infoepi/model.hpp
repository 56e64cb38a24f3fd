#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace infoepi {

/// Default tolerance for the unit-sum (simplex) state invariants.
inline constexpr double kSimplexTol = 1e-9;

/// Model constants shared by every computation.
///
/// b1, b2, mu1 act on the fast (information) time scale; beta, gamma, eta,
/// mu2 act on the slow (epidemic) time scale; epsilon is the ratio of the
/// two scales and K gates the infection feedback on skepticism adoption.
struct Params {
  double b1;       ///< misinformation-adoption rate
  double b2;       ///< maximal skepticism-adoption rate
  double K;        ///< infection-feedback gain, in [0,1)
  double beta;     ///< baseline infection rate
  double gamma;    ///< recovery rate
  double eta;      ///< immunity-loss rate
  double mu1;      ///< opinion turnover rate
  double mu2;      ///< demographic turnover rate
  double epsilon;  ///< time-scale ratio, in (0,1]; 0 only for layer-problem evaluation

  /// Throws std::invalid_argument on any violated constraint. Layer-problem
  /// tooling (frozen slow variables) may pass allow_zero_epsilon = true.
  void validate(bool allow_zero_epsilon = false) const {
    auto nonneg = [](double v, const char* name) {
      if (!(v >= 0.0)) throw std::invalid_argument(std::string(name) + " must be >= 0");
    };
    nonneg(b1, "b1");
    nonneg(b2, "b2");
    nonneg(beta, "beta");
    nonneg(gamma, "gamma");
    nonneg(eta, "eta");
    nonneg(mu1, "mu1");
    nonneg(mu2, "mu2");
    if (!(K >= 0.0 && K < 1.0)) throw std::invalid_argument("K must be in [0,1)");
    if (allow_zero_epsilon) {
      if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("epsilon must be in [0,1]");
    } else if (!(epsilon > 0.0 && epsilon <= 1.0)) {
      throw std::invalid_argument("epsilon must be in (0,1]");
    }
  }
};

/// Point of the information layer. Unit total population is an invariant of
/// the flow, asserted at trajectory level; RHS evaluation accepts probe
/// points off the simplex.
struct FastState {
  double U;  ///< unaware fraction
  double M;  ///< misinformed fraction
  double Z;  ///< skeptical fraction

  double sum() const { return U + M + Z; }
  bool on_simplex(double tol = kSimplexTol) const {
    return U >= -tol && M >= -tol && Z >= -tol && std::abs(sum() - 1.0) <= tol;
  }
};

/// Point of the epidemic layer.
struct SlowState {
  double S;  ///< susceptible fraction
  double I;  ///< infected fraction
  double R;  ///< recovered fraction

  double sum() const { return S + I + R; }
  bool on_simplex(double tol = kSimplexTol) const {
    return S >= -tol && I >= -tol && R >= -tol && std::abs(sum() - 1.0) <= tol;
  }
};

/// Point of the coupled six-dimensional system.
struct FullState {
  FastState fast;
  SlowState slow;

  bool on_simplex(double tol = kSimplexTol) const {
    return fast.on_simplex(tol) && slow.on_simplex(tol);
  }

  std::array<double, 6> to_array() const {
    return {fast.U, fast.M, fast.Z, slow.S, slow.I, slow.R};
  }
  static FullState from_array(const std::array<double, 6>& a) {
    return {{a[0], a[1], a[2]}, {a[3], a[4], a[5]}};
  }
};

/// Skepticism-adoption rate b2/(1-K*I): nondecreasing in the infected
/// fraction, equal to b2 when the feedback is off (K=0 or I=0).
inline double feedback_b2(const Params& p, double I) {
  const double denom = 1.0 - p.K * I;
  if (!(denom > 0.0)) throw std::domain_error("feedback_b2: K*I >= 1");
  return p.b2 / denom;
}

/// Effective infection rate beta*(1+M)/(1+Z): misinformation amplifies
/// transmission, skepticism damps it.
inline double effective_beta(const Params& p, double M, double Z) {
  return p.beta * (1.0 + M) / (1.0 + Z);
}

/// Right-hand side of the information subsystem with the infected fraction
/// frozen. Unit total population is fixed, so the turnover inflow is mu1.
/// Returns (dU, dM, dZ) per fast time; the bilinear transfer terms cancel
/// pairwise, so the components sum to mu1*(1 - U - M - Z).
inline std::array<double, 3> fast_rhs(const Params& p, const FastState& s, double I) {
  const double adoptM = p.b1 * s.U * s.M;
  const double adoptZ = feedback_b2(p, I) * s.U * s.Z;
  return {p.mu1 - adoptM - adoptZ - p.mu1 * s.U,
          adoptM - p.mu1 * s.M,
          adoptZ - p.mu1 * s.Z};
}

/// Right-hand side of the epidemic subsystem with the information layer
/// frozen. Returns (dS, dI, dR) per slow time.
inline std::array<double, 3> slow_rhs(const Params& p, const SlowState& s, double M, double Z) {
  const double infection = effective_beta(p, M, Z) * s.S * s.I;
  const double recovery = p.gamma * s.I;
  const double waning = p.eta * s.R;
  return {p.mu2 - infection + waning - p.mu2 * s.S,
          infection - recovery - p.mu2 * s.I,
          recovery - waning - p.mu2 * s.R};
}

/// Right-hand side of the coupled system in the fast time variable. The slow
/// block carries the factor epsilon; at epsilon = 0 it vanishes identically
/// (layer problem).
inline std::array<double, 6> full_rhs(const Params& p, const FullState& s) {
  const auto f = fast_rhs(p, s.fast, s.slow.I);
  const auto g = slow_rhs(p, s.slow, s.fast.M, s.fast.Z);
  return {f[0], f[1], f[2], p.epsilon * g[0], p.epsilon * g[1], p.epsilon * g[2]};
}

}  // namespace infoepi
