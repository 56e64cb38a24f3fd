#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace infoepi {

/// Central-difference Jacobian with the step scaled by the component
/// magnitude. F maps std::array<double,N> -> std::array<double,N>.
template <std::size_t N, class F>
Eigen::Matrix<double, N, N> fd_jacobian(F&& f, const std::array<double, N>& x,
                                        double step = 1e-6) {
  Eigen::Matrix<double, N, N> J;
  std::array<double, N> xp = x, xm = x;
  for (std::size_t j = 0; j < N; ++j) {
    const double h = step * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    const auto fp = f(xp);
    const auto fm = f(xm);
    for (std::size_t i = 0; i < N; ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return J;
}

/// Eigenvalues of a dense real matrix, sorted by (Re, Im) for stable
/// comparison against closed forms.
template <std::size_t N>
std::array<std::complex<double>, N> eigenvalues(const Eigen::Matrix<double, N, N>& A) {
  Eigen::EigenSolver<Eigen::Matrix<double, N, N>> solver(A, /*computeEigenvectors=*/false);
  std::array<std::complex<double>, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = solver.eigenvalues()(static_cast<int>(i));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

/// Greatest |difference| when matching two eigenvalue multisets greedily.
template <std::size_t N>
double eigen_match_error(const std::array<std::complex<double>, N>& a,
                         const std::array<std::complex<double>, N>& b) {
  std::array<bool, N> used{};
  double worst = 0.0;
  for (const auto& x : a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = N;
    for (std::size_t j = 0; j < N; ++j) {
      if (used[j]) continue;
      const double d = std::abs(x - b[j]);
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    used[arg] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

/// Bisection for a bracketed root; the bracket must straddle a sign change.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double tol, int max_iter = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0) throw std::invalid_argument("bisect: no sign change over bracket");
  for (int i = 0; i < max_iter && (hi - lo) > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (flo * fm < 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

namespace detail {
inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature of a smooth integrand.
inline double integrate_adaptive(const std::function<double(double)>& f, double a,
                                 double b, double tol = 1e-12, int max_depth = 50) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

struct LineFit {
  double slope;
  double intercept;
};

/// Least-squares line through (x, y).
inline LineFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need >= 2 samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
  const double slope = (n * sxy - sx * sy) / denom;
  return {slope, (sy - slope * sx) / n};
}

}  // namespace infoepi
