#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace infoepi {

struct IntegratorConfig {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h0 = 1e-3;    ///< initial step, fast time
  double hmax = 5.0;   ///< step-size cap
  std::size_t max_steps = 5'000'000;
  double event_tol = 1e-10;  ///< event-time localization tolerance

  void validate() const {
    if (!(rtol >= 1e-14)) throw std::invalid_argument("rtol must be >= 1e-14");
    if (!(atol > 0.0 && h0 > 0.0 && hmax > 0.0 && event_tol > 0.0 && max_steps > 0))
      throw std::invalid_argument("integrator config fields must be positive");
  }
};

/// Raised when the step budget is exhausted or the controller drives the
/// step below representable resolution; carries the last reached point.
struct IntegrationError : std::runtime_error {
  IntegrationError(const std::string& msg, double t_, std::vector<double> y_)
      : std::runtime_error(msg), t(t_), last_state(std::move(y_)) {}
  double t;
  std::vector<double> last_state;
};

/// Continuous extension of one accepted step (quartic in the step fraction).
template <std::size_t N>
struct DenseSegment {
  double t0;
  double h;
  std::array<std::array<double, N>, 5> c;

  std::array<double, N> eval(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i)
      out[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
    return out;
  }
};

/// Scalar event function watched along the flow. A crossing is only recorded
/// while armed; after each recorded crossing the watch re-arms once |g| has
/// exceeded `hysteresis`, which suppresses chatter when the trajectory
/// settles onto a zero of g.
template <std::size_t N>
struct RawEventSpec {
  std::function<double(double, const std::array<double, N>&)> g;
  int direction = 0;  ///< +1 up-crossings, -1 down-crossings, 0 both
  bool terminal = false;
  double hysteresis = 0.0;
  int tag = 0;
};

template <std::size_t N>
struct RawEvent {
  double t;
  std::array<double, N> y;
  int tag;
  int direction;         ///< +1 up, -1 down
  double bracket_width;  ///< final bisection interval width
};

template <std::size_t N>
struct RkResult {
  std::vector<double> t;
  std::vector<std::array<double, N>> y;
  std::vector<RawEvent<N>> events;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool event_terminated = false;
};

namespace dopri5 {
// Dormand-Prince 5(4) tableau, FSAL.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - bhat, for the embedded 4th-order error estimate.
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous-extension weights.
inline constexpr double d1 = -12715105075.0 / 11282082432.0;
inline constexpr double d3 = 87487479700.0 / 32700410799.0;
inline constexpr double d4 = -10690763975.0 / 1880347072.0;
inline constexpr double d5 = 701980252875.0 / 199316789632.0;
inline constexpr double d6 = -1453857185.0 / 822651844.0;
inline constexpr double d7 = 69997945.0 / 29380423.0;
}  // namespace dopri5

/// Adaptive Dormand-Prince 5(4) driver with PI step control, dense output,
/// and bisection event localization on the continuous extension.
///
/// `accept_filter`, when given, may adjust a candidate state (e.g. clamp
/// roundoff-negative components) or veto it by returning false, in which
/// case the step is retried with half the step size.
template <std::size_t N, class RHS>
RkResult<N> rk45_integrate(
    RHS&& f, std::array<double, N> y, double t0, double t_end,
    const IntegratorConfig& cfg, std::vector<RawEventSpec<N>> events = {},
    const std::function<bool(std::array<double, N>&)>& accept_filter = nullptr) {
  using namespace dopri5;
  cfg.validate();
  if (!(t_end > t0)) throw std::invalid_argument("rk45: t_end must exceed t0");

  RkResult<N> out;
  out.t.push_back(t0);
  out.y.push_back(y);

  struct WatchState {
    double g_prev;
    bool armed = true;
    double excursion = 0.0;  // max |g| since the last recorded crossing
  };
  std::vector<WatchState> ws(events.size());
  double t = t0;
  for (std::size_t i = 0; i < events.size(); ++i) ws[i].g_prev = events[i].g(t, y);

  std::array<double, N> k1, k2, k3, k4, k5, k6, k7, ytmp, y1;
  k1 = f(t, y);

  double h = std::min({cfg.h0, cfg.hmax, t_end - t0});
  double facold = 1e-4;
  constexpr double beta_pi = 0.04;
  constexpr double expo1 = 0.2 - beta_pi * 0.75;
  constexpr double safe = 0.9, fac_min = 0.2, fac_max = 10.0;

  std::size_t steps = 0;
  bool done = false;
  while (!done) {
    if (++steps > cfg.max_steps)
      throw IntegrationError("rk45: step budget exhausted", t,
                             std::vector<double>(y.begin(), y.end()));
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw IntegrationError("rk45: step size underflow", t,
                             std::vector<double>(y.begin(), y.end()));
    bool last = false;
    if (t + h >= t_end) {
      h = t_end - t;
      last = true;
    }

    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    k2 = f(t + c2 * h, ytmp);
    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    k3 = f(t + c3 * h, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = f(t + c4 * h, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = f(t + c5 * h, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                            a65 * k5[i]);
    k6 = f(t + h, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      y1[i] = y[i] +
              h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    k7 = f(t + h, y1);

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                             e6 * k6[i] + e7 * k7[i]);
      const double sc = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      err += (ei / sc) * (ei / sc);
    }
    err = std::sqrt(err / static_cast<double>(N));

    if (err > 1.0) {
      ++out.rejected;
      h *= std::max(fac_min, safe * std::pow(err, -0.2));
      continue;
    }

    std::array<double, N> y_accept = y1;
    if (accept_filter && !accept_filter(y_accept)) {
      ++out.rejected;
      h *= 0.5;
      continue;
    }

    DenseSegment<N> seg;
    seg.t0 = t;
    seg.h = h;
    for (std::size_t i = 0; i < N; ++i) {
      const double dy = y1[i] - y[i];
      seg.c[0][i] = y[i];
      seg.c[1][i] = dy;
      seg.c[2][i] = h * k1[i] - dy;
      seg.c[3][i] = dy - h * k7[i] - seg.c[2][i];
      seg.c[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                         d6 * k6[i] + d7 * k7[i]);
    }

    // Event detection over the dense output, subdivided to catch crossings
    // well inside a long step.
    bool stop_at_event = false;
    double t_stop = t + h;
    constexpr int kSubdiv = 8;
    for (std::size_t e = 0; e < events.size() && !stop_at_event; ++e) {
      auto& st = ws[e];
      const auto& spec = events[e];
      double g_lo = st.g_prev;
      for (int s = 1; s <= kSubdiv; ++s) {
        const double ta = t + h * (s - 1) / kSubdiv;
        const double tb = t + h * s / kSubdiv;
        const double g_hi = spec.g(tb, s == kSubdiv ? y_accept : seg.eval(tb));
        if (!st.armed) {
          st.excursion = std::max(st.excursion, std::abs(g_hi));
          if (st.excursion >= spec.hysteresis) st.armed = true;
        }
        const int dir = (g_lo <= 0.0 && g_hi > 0.0)   ? +1
                        : (g_lo >= 0.0 && g_hi < 0.0) ? -1
                                                      : 0;
        if (dir != 0 && st.armed && (spec.direction == 0 || spec.direction == dir)) {
          double lo = ta, hi = tb, glo = g_lo;
          for (int it = 0; it < 60 && (hi - lo) > cfg.event_tol; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double gm = spec.g(mid, seg.eval(mid));
            if ((glo <= 0.0) == (gm <= 0.0)) {
              lo = mid;
              glo = gm;
            } else {
              hi = mid;
            }
          }
          const double te = 0.5 * (lo + hi);
          out.events.push_back({te, seg.eval(te), spec.tag, dir, hi - lo});
          st.armed = spec.hysteresis == 0.0;
          st.excursion = 0.0;
          if (spec.terminal) {
            stop_at_event = true;
            t_stop = te;
            break;
          }
        }
        g_lo = g_hi;
      }
      st.g_prev = g_lo;
    }

    if (stop_at_event) {
      out.event_terminated = true;
      const auto y_stop = seg.eval(t_stop);
      out.t.push_back(t_stop);
      out.y.push_back(y_stop);
      ++out.accepted;
      break;
    }

    t += h;
    y = y_accept;
    k1 = k7;
    out.t.push_back(t);
    out.y.push_back(y);
    ++out.accepted;
    if (last || t_end - t <= 1e-12 * std::max(1.0, std::abs(t_end))) {
      done = true;
      break;
    }
    // PI controller (Hairer's DOPRI5 settings).
    double fac = safe * std::pow(std::max(err, 1e-20), -expo1) * std::pow(facold, beta_pi);
    fac = std::min(fac_max, std::max(fac_min, fac));
    facold = std::max(err, 1e-4);
    h = std::min(h * fac, cfg.hmax);
  }
  return out;
}

}  // namespace infoepi
