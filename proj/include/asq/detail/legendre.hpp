#pragma once

// Gauss-Legendre quadrature and fully normalised associated Legendre tables
// for the spherical harmonic transform.
//
// Normalisation: Pbar_lm(x) = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(x),
// without the Condon-Shortley phase, so that the real harmonics
//   Y_l0 = Pbar_l0,  Y_l,+m = sqrt2 Pbar_lm cos(m phi),  Y_l,-m = sqrt2 Pbar_lm sin(m phi)
// are orthonormal on the unit sphere.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

namespace asq::detail {

struct GaussLegendre {
  std::vector<double> x;  // cos(colatitude), decreasing (north to south)
  std::vector<double> w;
};

/// n-point Gauss-Legendre rule on [-1, 1] by Newton iteration in long double.
inline GaussLegendre gauss_legendre(int n) {
  GaussLegendre rule;
  rule.x.resize(n);
  rule.w.resize(n);
  const long double pi = std::numbers::pi_v<long double>;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    long double z = std::cos(pi * (i + 0.75L) / (n + 0.5L));
    long double dp = 0.0L;
    for (int iter = 0; iter < 100; ++iter) {
      long double p0 = 1.0L, p1 = 0.0L;
      for (int j = 1; j <= n; ++j) {
        const long double p2 = p1;
        p1 = p0;
        p0 = ((2.0L * j - 1.0L) * z * p1 - (j - 1.0L) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0L);
      const long double dz = p0 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-18L) break;
    }
    const long double w = 2.0L / ((1.0L - z * z) * dp * dp);
    rule.x[i] = static_cast<double>(z);
    rule.x[n - 1 - i] = static_cast<double>(-z);
    rule.w[i] = rule.w[n - 1 - i] = static_cast<double>(w);
  }
  if (n % 2 == 1) rule.x[n / 2] = 0.0;
  return rule;
}

/// Associated Legendre values on a Gauss grid for all 0 <= m <= l <= band.
///
/// Rows are ordered by m, then l; entry (row, i) sits at [i * rows + row] so
/// that one colatitude's values are contiguous. Three tables are kept:
///   p   = Pbar_lm(x_i)
///   dp  = d Pbar_lm / d colatitude
///   ps  = Pbar_lm / sin(colatitude)
struct LegendreTable {
  int band = 0;
  int nlat = 0;
  int rows = 0;
  GaussLegendre rule;
  std::vector<double> sin_theta;
  std::vector<double> p, dp, ps;

  int row_start(int m) const { return m * (band + 1) - m * (m - 1) / 2; }
  int row(int l, int m) const { return row_start(m) + (l - m); }
};

/// Pbar_lm(x) for all l, m <= band at a single point, in row order.
/// Seeds and recurrences run in long double so that sectoral values near the
/// poles stay representable.
inline std::vector<long double> legendre_column(int band, long double x, long double s) {
  const int rows = (band + 1) * (band + 2) / 2;
  std::vector<long double> out(rows);
  long double pmm = 1.0L / std::sqrt(4.0L * std::numbers::pi_v<long double>);
  int start = 0;
  for (int m = 0; m <= band; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0L * m + 1.0L) / (2.0L * m)) * s;
    out[start] = pmm;
    if (m < band) {
      long double prev2 = pmm;
      long double prev1 = std::sqrt(2.0L * m + 3.0L) * x * pmm;
      out[start + 1] = prev1;
      for (int l = m + 2; l <= band; ++l) {
        const long double ll = l, mm = m;
        const long double a = std::sqrt((4.0L * ll * ll - 1.0L) / (ll * ll - mm * mm));
        const long double b =
            std::sqrt(((ll - 1.0L) * (ll - 1.0L) - mm * mm) / (4.0L * (ll - 1.0L) * (ll - 1.0L) - 1.0L));
        const long double cur = a * (x * prev1 - b * prev2);
        out[start + (l - m)] = cur;
        prev2 = prev1;
        prev1 = cur;
      }
    }
    start += band + 1 - m;
  }
  return out;
}

inline LegendreTable make_legendre_table(int grid_degree, int band) {
  LegendreTable t;
  t.band = band;
  t.nlat = grid_degree + 1;
  t.rows = (band + 1) * (band + 2) / 2;
  t.rule = gauss_legendre(t.nlat);
  t.sin_theta.resize(t.nlat);
  const std::size_t total = static_cast<std::size_t>(t.rows) * t.nlat;
  t.p.resize(total);
  t.dp.resize(total);
  t.ps.resize(total);
  for (int i = 0; i < t.nlat; ++i) {
    const long double x = t.rule.x[i];
    const long double s = std::sqrt((1.0L - x) * (1.0L + x));
    t.sin_theta[i] = static_cast<double>(s);
    const auto col = legendre_column(band, x, s);
    double* p = &t.p[static_cast<std::size_t>(i) * t.rows];
    double* dp = &t.dp[static_cast<std::size_t>(i) * t.rows];
    double* ps = &t.ps[static_cast<std::size_t>(i) * t.rows];
    for (int m = 0; m <= band; ++m) {
      for (int l = m; l <= band; ++l) {
        const int r = t.row(l, m);
        const long double ll = l, mm = m;
        // sin(theta) dPbar_lm/dtheta = l x Pbar_lm - sqrt((2l+1)/(2l-1) (l^2 - m^2)) Pbar_{l-1,m}
        const long double lower =
            l > m ? std::sqrt((2.0L * ll + 1.0L) / (2.0L * ll - 1.0L) * (ll * ll - mm * mm)) *
                        col[t.row(l - 1, m)]
                  : 0.0L;
        p[r] = static_cast<double>(col[r]);
        dp[r] = static_cast<double>((ll * x * col[r] - lower) / s);
        ps[r] = static_cast<double>(col[r] / s);
      }
    }
  }
  return t;
}

/// Shared, immutable tables keyed by (grid degree, band).
inline std::shared_ptr<const LegendreTable> legendre_table(int grid_degree, int band) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const LegendreTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{grid_degree, band}];
  if (!slot) slot = std::make_shared<const LegendreTable>(make_legendre_table(grid_degree, band));
  return slot;
}

}  // namespace asq::detail
