#pragma once

// Transforms between nodal and spectral representations and the spectral
// calculus built on them: fractional Laplace-Beltrami powers, gradients,
// divergence, mollification, quadrature and norms.
//
// Tori use FFTW real transforms; the sphere uses Gauss-Legendre quadrature in
// colatitude and FFTs in longitude. All transforms are exact for band-limited
// data on a grid that resolves them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "asq/detail/fft.hpp"
#include "asq/detail/legendre.hpp"
#include "asq/error.hpp"
#include "asq/fields.hpp"
#include "asq/manifold.hpp"

namespace asq {

namespace detail {

using cplx = std::complex<double>;

inline void require_grid(const SpectralField& f, const ManifoldSpec& grid) {
  if (grid.kind != f.kind()) throw StructuralError("grid and field live on different manifolds");
  if (grid.band_limit() < f.band_limit())
    throw StructuralError("grid resolution " + std::to_string(grid.resolution) +
                          " cannot carry band limit " + std::to_string(f.band_limit()));
}

// ---- tori -----------------------------------------------------------------

/// Synthesises sum_k mult(k) c_k e^{ik.x} on an n-point (per direction) grid.
template <class Mult>
std::vector<double> torus_synth(const SpectralField& f, int n, Mult&& mult) {
  const int band = f.band_limit();
  const auto modes = f.torus_modes();
  auto& fft = FftPlans::instance();
  if (f.kind() == ManifoldKind::Torus1D) {
    std::vector<cplx> buf(n / 2 + 1);
    for (int k = 0; k <= band; ++k) buf[k] = mult(k, 0) * modes[k];
    std::vector<double> out(n);
    fft.c2r_1d(n, buf.data(), out.data());
    return out;
  }
  const int h = n / 2 + 1;
  std::vector<cplx> buf(static_cast<std::size_t>(n) * h);
  for (int kx = -band; kx <= band; ++kx) {
    const int row = kx >= 0 ? kx : kx + n;
    for (int ky = 0; ky <= band; ++ky)
      buf[static_cast<std::size_t>(row) * h + ky] = mult(kx, ky) * modes[f.torus_index(kx, ky)];
  }
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  fft.c2r_2d(n, buf.data(), out.data());
  return out;
}

/// Forward transform of nodal values, returning exponential coefficients
/// (already divided by the point count) for |k_i| <= band.
inline SpectralField torus_analyze(std::vector<double> values, const ManifoldSpec& grid, int band) {
  SpectralField out = SpectralField::zeros(grid.kind, band);
  auto modes = out.torus_modes();
  const int n = grid.resolution;
  auto& fft = FftPlans::instance();
  if (grid.kind == ManifoldKind::Torus1D) {
    std::vector<cplx> buf(n / 2 + 1);
    fft.r2c_1d(n, values.data(), buf.data());
    for (int k = 0; k <= band; ++k) modes[k] = buf[k] / static_cast<double>(n);
    modes[0] = modes[0].real();
    return out;
  }
  const int h = n / 2 + 1;
  std::vector<cplx> buf(static_cast<std::size_t>(n) * h);
  fft.r2c_2d(n, values.data(), buf.data());
  const double norm = 1.0 / (static_cast<double>(n) * n);
  for (int kx = -band; kx <= band; ++kx) {
    const int row = kx >= 0 ? kx : kx + n;
    for (int ky = 0; ky <= band; ++ky)
      modes[out.torus_index(kx, ky)] = buf[static_cast<std::size_t>(row) * h + ky] * norm;
  }
  out.enforce_real();
  return out;
}

// ---- sphere ---------------------------------------------------------------

/// Coefficients rearranged into Legendre-table row order. `cos` carries the
/// factor of the cos(m phi) basis function (sqrt2 for m > 0), `sin` likewise.
struct PackedSH {
  std::vector<double> cos, sin;
};

inline PackedSH pack_sh(const SpectralField& f, const LegendreTable& t) {
  PackedSH p{std::vector<double>(t.rows, 0.0), std::vector<double>(t.rows, 0.0)};
  const int band = f.band_limit();
  for (int m = 0; m <= band; ++m)
    for (int l = m; l <= band; ++l) {
      const int r = t.row(l, m);
      if (m == 0) {
        p.cos[r] = f.sh(l, 0);
      } else {
        p.cos[r] = std::numbers::sqrt2 * f.sh(l, m);
        p.sin[r] = std::numbers::sqrt2 * f.sh(l, -m);
      }
    }
  return p;
}

inline SpectralField unpack_sh(const PackedSH& p, const LegendreTable& t) {
  SpectralField out = SpectralField::zeros(ManifoldKind::Sphere2D, t.band);
  for (int m = 0; m <= t.band; ++m)
    for (int l = m; l <= t.band; ++l) {
      const int r = t.row(l, m);
      if (m == 0) {
        out.sh(l, 0) = p.cos[r];
      } else {
        out.sh(l, m) = std::numbers::sqrt2 * p.cos[r];
        out.sh(l, -m) = std::numbers::sqrt2 * p.sin[r];
      }
    }
  return out;
}

/// sum_{l,m} [cos_lm cos(m phi) + sin_lm sin(m phi)] T_lm(x_i) on the grid,
/// with T one of the tables p / dp / ps.
inline std::vector<double> sphere_synth(const LegendreTable& t, const std::vector<double>& table,
                                        const PackedSH& coeffs, int nlon) {
  std::vector<double> out(static_cast<std::size_t>(t.nlat) * nlon);
  std::vector<cplx> buf(nlon / 2 + 1);
  auto& fft = FftPlans::instance();
  for (int i = 0; i < t.nlat; ++i) {
    const double* row = &table[static_cast<std::size_t>(i) * t.rows];
    std::fill(buf.begin(), buf.end(), cplx{});
    for (int m = 0; m <= t.band; ++m) {
      const int start = t.row_start(m);
      const int len = t.band + 1 - m;
      double gc = 0.0, gs = 0.0;
      for (int j = 0; j < len; ++j) {
        gc += row[start + j] * coeffs.cos[start + j];
        gs += row[start + j] * coeffs.sin[start + j];
      }
      buf[m] = m == 0 ? cplx(gc, 0.0) : 0.5 * cplx(gc, -gs);
    }
    fft.c2r_1d(nlon, buf.data(), &out[static_cast<std::size_t>(i) * nlon]);
  }
  return out;
}

/// Longitudinal Fourier integrals per colatitude:
///   cos[i][m] = int f cos(m phi) dphi,  sin[i][m] = int f sin(m phi) dphi.
struct LonFourier {
  std::vector<double> cos, sin;  // [i * (band + 1) + m]
};

inline LonFourier lon_fourier(std::vector<double> values, int nlat, int nlon, int band) {
  LonFourier out{std::vector<double>(static_cast<std::size_t>(nlat) * (band + 1)),
                 std::vector<double>(static_cast<std::size_t>(nlat) * (band + 1))};
  std::vector<cplx> buf(nlon / 2 + 1);
  auto& fft = FftPlans::instance();
  const double dphi = 2.0 * std::numbers::pi / nlon;
  for (int i = 0; i < nlat; ++i) {
    fft.r2c_1d(nlon, &values[static_cast<std::size_t>(i) * nlon], buf.data());
    for (int m = 0; m <= band; ++m) {
      out.cos[static_cast<std::size_t>(i) * (band + 1) + m] = buf[m].real() * dphi;
      out.sin[static_cast<std::size_t>(i) * (band + 1) + m] = -buf[m].imag() * dphi;
    }
  }
  return out;
}

inline SpectralField sphere_analyze(const NodalField& f, int band) {
  const auto t = legendre_table(f.grid.resolution, band);
  const int nlon = f.grid.cols();
  const auto fourier = lon_fourier(f.values, t->nlat, nlon, band);
  PackedSH acc{std::vector<double>(t->rows, 0.0), std::vector<double>(t->rows, 0.0)};
  for (int i = 0; i < t->nlat; ++i) {
    const double w = t->rule.w[i];
    const double* row = &t->p[static_cast<std::size_t>(i) * t->rows];
    for (int m = 0; m <= band; ++m) {
      const double fc = w * fourier.cos[static_cast<std::size_t>(i) * (band + 1) + m];
      const double fs = w * fourier.sin[static_cast<std::size_t>(i) * (band + 1) + m];
      const int start = t->row_start(m);
      for (int j = 0; j < band + 1 - m; ++j) {
        acc.cos[start + j] += row[start + j] * fc;
        acc.sin[start + j] += row[start + j] * fs;
      }
    }
  }
  return unpack_sh(acc, *t);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Transforms

/// Projection onto the eigenbasis up to `band`: a_k = <f, phi_k> by quadrature.
inline SpectralField analyze(const NodalField& f, int band) {
  f.grid.validate();
  if (f.values.size() != f.grid.grid_size())
    throw StructuralError("nodal array does not match the manifold grid");
  if (band < 0 || band > f.grid.band_limit())
    throw StructuralError("band limit " + std::to_string(band) + " not resolvable on grid " +
                          std::to_string(f.grid.resolution));
  if (is_torus(f.grid.kind)) return detail::torus_analyze(f.values, f.grid, band);
  return detail::sphere_analyze(f, band);
}

/// Projection at the grid's native band limit.
inline SpectralField analyze(const NodalField& f) { return analyze(f, f.grid.band_limit()); }

/// Values of sum_k a_k phi_k at the nodes of `grid` (any grid fine enough).
inline NodalField synthesize(const SpectralField& f, const ManifoldSpec& grid) {
  detail::require_grid(f, grid);
  if (is_torus(f.kind()))
    return NodalField(grid, detail::torus_synth(f, grid.resolution,
                                                [](int, int) { return 1.0; }));
  const auto t = detail::legendre_table(grid.resolution, f.band_limit());
  return NodalField(grid, detail::sphere_synth(*t, t->p, detail::pack_sh(f, *t), grid.cols()));
}

inline NodalField synthesize(const SpectralField& f) { return synthesize(f, f.manifold()); }

/// Surface gradient evaluated on `grid`.
inline NodalVectorField gradient(const SpectralField& f, const ManifoldSpec& grid) {
  detail::require_grid(f, grid);
  NodalVectorField out(grid);
  using detail::cplx;
  if (f.kind() == ManifoldKind::Torus1D) {
    out.components[0] =
        detail::torus_synth(f, grid.resolution, [](int kx, int) { return cplx(0.0, kx); });
    return out;
  }
  if (f.kind() == ManifoldKind::Torus2D) {
    out.components[0] =
        detail::torus_synth(f, grid.resolution, [](int kx, int) { return cplx(0.0, kx); });
    out.components[1] =
        detail::torus_synth(f, grid.resolution, [](int, int ky) { return cplx(0.0, ky); });
    return out;
  }
  const auto t = detail::legendre_table(grid.resolution, f.band_limit());
  const auto packed = detail::pack_sh(f, *t);
  out.components[0] = detail::sphere_synth(*t, t->dp, packed, grid.cols());
  // (1/sin) d/dphi maps cos(m phi) -> -m sin(m phi) and sin(m phi) -> m cos(m phi)
  detail::PackedSH dphi{std::vector<double>(t->rows), std::vector<double>(t->rows)};
  for (int m = 0; m <= t->band; ++m)
    for (int l = m; l <= t->band; ++l) {
      const int r = t->row(l, m);
      dphi.cos[r] = m * packed.sin[r];
      dphi.sin[r] = -m * packed.cos[r];
    }
  out.components[1] = detail::sphere_synth(*t, t->ps, dphi, grid.cols());
  return out;
}

inline NodalVectorField gradient(const SpectralField& f) { return gradient(f, f.manifold()); }

/// Divergence of a tangent field, projected onto modes <= band. On the sphere
/// this uses the weak form <div V, Y> = -<V, grad Y>, exact whenever V . grad Y
/// is resolved by the grid quadrature.
inline SpectralField divergence(const NodalVectorField& v, int band) {
  using detail::cplx;
  const auto& g = v.grid;
  if (band > g.band_limit()) throw StructuralError("divergence band exceeds grid band limit");
  if (is_torus(g.kind)) {
    SpectralField out = SpectralField::zeros(g.kind, band);
    for (int d = 0; d < g.dimension(); ++d) {
      const auto comp = analyze(NodalField(g, v.components[d]), band);
      const auto src = comp.torus_modes();
      auto dst = out.torus_modes();
      for (int kx = (g.kind == ManifoldKind::Torus1D ? 0 : -band); kx <= band; ++kx)
        for (int ky = 0; ky <= (g.kind == ManifoldKind::Torus1D ? 0 : band); ++ky) {
          const std::size_t i = out.torus_index(kx, ky);
          dst[i] += cplx(0.0, d == 0 ? kx : ky) * src[i];
        }
    }
    return out;
  }
  const auto t = detail::legendre_table(g.resolution, band);
  const int nlon = g.cols();
  const auto ft = detail::lon_fourier(v.components[0], t->nlat, nlon, band);
  const auto fp = detail::lon_fourier(v.components[1], t->nlat, nlon, band);
  detail::PackedSH acc{std::vector<double>(t->rows, 0.0), std::vector<double>(t->rows, 0.0)};
  for (int i = 0; i < t->nlat; ++i) {
    const double w = t->rule.w[i];
    const double* dp = &t->dp[static_cast<std::size_t>(i) * t->rows];
    const double* ps = &t->ps[static_cast<std::size_t>(i) * t->rows];
    for (int m = 0; m <= band; ++m) {
      const std::size_t k = static_cast<std::size_t>(i) * (band + 1) + m;
      const int start = t->row_start(m);
      for (int j = 0; j < band + 1 - m; ++j) {
        const int r = start + j;
        acc.cos[r] -= w * (dp[r] * ft.cos[k] - m * ps[r] * fp.sin[k]);
        acc.sin[r] -= w * (dp[r] * ft.sin[k] + m * ps[r] * fp.cos[k]);
      }
    }
  }
  return detail::unpack_sh(acc, *t);
}

// ---------------------------------------------------------------------------
// Spectral multipliers

/// Lambda^s: multiplies mode k by lambda_k^s. For s != 0 the constant mode is
/// annihilated (lambda_0 = 0 has no negative powers); Lambda^0 is the identity.
inline SpectralField apply_fractional_laplacian(SpectralField f, double s) {
  if (s == 0.0) return f;
  return std::move(f.scale_by([s](double lambda) { return lambda > 0.0 ? std::pow(lambda, s) : 0.0; }));
}

/// Heat-semigroup mollifier J_eps = e^{eps Delta}: mode k times e^{-eps lambda_k^2}.
inline SpectralField mollify(SpectralField f, double eps) {
  if (!(eps >= 0.0)) throw DomainError("mollify: eps must be >= 0");
  if (eps == 0.0) return f;
  return std::move(f.scale_by([eps](double lambda) { return std::exp(-eps * lambda * lambda); }));
}

/// Sum over stored modes of weight * |a_k|^2 * g(lambda_k), in the orthonormal
/// eigenbasis normalisation.
template <class G>
double spectral_energy(const SpectralField& f, G&& g) {
  const auto table = mode_table(f.kind(), f.band_limit());
  const auto data = f.data();
  double sum = 0.0;
  if (is_torus(f.kind())) {
    for (std::size_t i = 0; i < table->lambda.size(); ++i) {
      const double a2 = data[2 * i] * data[2 * i] + data[2 * i + 1] * data[2 * i + 1];
      if (a2 != 0.0) sum += table->weight[i] * a2 * g(table->lambda[i]);
    }
    return sum * f.manifold().volume();
  }
  for (std::size_t i = 0; i < table->lambda.size(); ++i)
    if (data[i] != 0.0) sum += data[i] * data[i] * g(table->lambda[i]);
  return sum;
}

/// Homogeneous Sobolev norm (sum_{k>=1} lambda_k^{2s} |a_k|^2)^{1/2}.
inline double norm_sobolev(const SpectralField& f, double s) {
  return std::sqrt(spectral_energy(
      f, [s](double lambda) { return lambda > 0.0 ? std::pow(lambda, 2.0 * s) : 0.0; }));
}

/// L^2 norm via Parseval, (sum_k |a_k|^2)^{1/2}.
inline double norm_l2_spectral(const SpectralField& f) {
  return std::sqrt(spectral_energy(f, [](double) { return 1.0; }));
}

/// Inhomogeneous H^s norm: (||f||_{L^2}^2 + ||f||_{\dot H^s}^2)^{1/2}.
inline double norm_hs(const SpectralField& f, double s) {
  const double l2 = norm_l2_spectral(f);
  const double hs = norm_sobolev(f, s);
  return std::sqrt(l2 * l2 + hs * hs);
}

// ---------------------------------------------------------------------------
// Quadrature and norms on nodal fields

inline double integrate(const NodalField& f) {
  const auto w = quadrature_weights(f.grid);
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += w[i] * f.values[i];
  return sum;
}

/// L^p norm by quadrature; p = infinity gives the maximum over nodes.
inline double norm_lp(const NodalField& f, double p) {
  if (std::isnan(p) || p < 1.0) throw DomainError("norm_lp: p must lie in [1, inf]");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
  }
  const auto w = quadrature_weights(f.grid);
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += w[i] * std::pow(std::abs(f.values[i]), p);
  return std::pow(sum, 1.0 / p);
}

/// Grid used for sup norms, truncations and L^1 norms of spectral fields.
inline ManifoldSpec oversampled(const SpectralField& f, int factor = 2) {
  return oversampled_grid(f.kind(), f.band_limit(), factor);
}

/// L^infinity norm of a spectral field, taken over a 2x oversampled grid.
inline double norm_linf(const SpectralField& f) { return norm_lp(synthesize(f, oversampled(f)), INFINITY); }

}  // namespace asq
