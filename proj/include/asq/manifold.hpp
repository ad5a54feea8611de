#pragma once

// Catalog manifolds (flat tori and the unit sphere) with closed-form
// Laplace-Beltrami eigendata.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "asq/error.hpp"

namespace asq {

enum class ManifoldKind : std::uint8_t { Torus1D = 0, Torus2D = 1, Sphere2D = 2 };

inline std::string_view to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Torus1D: return "torus1d";
    case ManifoldKind::Torus2D: return "torus2d";
    case ManifoldKind::Sphere2D: return "sphere";
  }
  return "unknown";
}

inline ManifoldKind parse_manifold_kind(std::string_view name) {
  if (name == "torus1d" || name == "T1") return ManifoldKind::Torus1D;
  if (name == "torus2d" || name == "T2") return ManifoldKind::Torus2D;
  if (name == "sphere" || name == "S2") return ManifoldKind::Sphere2D;
  throw ConfigError("unknown manifold kind '" + std::string(name) + "'");
}

inline bool is_torus(ManifoldKind kind) { return kind != ManifoldKind::Sphere2D; }

/// A catalog manifold at a given grid resolution.
///
/// For tori `resolution` is the number of grid points per periodic direction
/// (even, >= 8); fields on that grid carry modes |k_i| <= N/2 - 1. For the
/// sphere `resolution` is the grid degree G: G + 1 Gauss-Legendre colatitudes
/// times 2G + 2 equispaced longitudes, exact for products up to degree 2G + 1.
struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::Torus1D;
  int resolution = 8;
  double scale = 1.0;  // reserved; only unit scale is supported

  static ManifoldSpec torus1d(int n) { return make(ManifoldKind::Torus1D, n); }
  static ManifoldSpec torus2d(int n) { return make(ManifoldKind::Torus2D, n); }
  static ManifoldSpec sphere(int degree) { return make(ManifoldKind::Sphere2D, degree); }

  static ManifoldSpec make(ManifoldKind kind, int resolution) {
    ManifoldSpec spec{kind, resolution, 1.0};
    spec.validate();
    return spec;
  }

  /// Native grid for fields band-limited at `band`.
  static ManifoldSpec for_band(ManifoldKind kind, int band) {
    return make(kind, is_torus(kind) ? 2 * band + 2 : band);
  }

  void validate() const {
    if (scale != 1.0) throw StructuralError("manifold scale must be 1");
    if (resolution < 8) throw StructuralError("resolution must be >= 8");
    if (is_torus(kind) && resolution % 2 != 0)
      throw StructuralError("torus resolution must be even");
  }

  int dimension() const { return kind == ManifoldKind::Torus1D ? 1 : 2; }

  double volume() const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    switch (kind) {
      case ManifoldKind::Torus1D: return two_pi;
      case ManifoldKind::Torus2D: return two_pi * two_pi;
      case ManifoldKind::Sphere2D: return 4.0 * std::numbers::pi;
    }
    return 0.0;
  }

  /// Largest mode index representable on this grid.
  int band_limit() const { return is_torus(kind) ? resolution / 2 - 1 : resolution; }

  int rows() const {
    switch (kind) {
      case ManifoldKind::Torus1D: return 1;
      case ManifoldKind::Torus2D: return resolution;
      case ManifoldKind::Sphere2D: return resolution + 1;
    }
    return 0;
  }

  int cols() const { return kind == ManifoldKind::Sphere2D ? 2 * resolution + 2 : resolution; }

  std::size_t grid_size() const {
    return static_cast<std::size_t>(rows()) * static_cast<std::size_t>(cols());
  }

  /// Nominal node spacing used by the CFL condition.
  double spacing() const {
    if (is_torus(kind)) return 2.0 * std::numbers::pi / resolution;
    return std::numbers::pi / (resolution + 1);
  }

  ManifoldSpec with_resolution(int r) const { return make(kind, r); }

  friend bool operator==(const ManifoldSpec&, const ManifoldSpec&) = default;
};

inline int even_ceil(int n) { return n % 2 == 0 ? n : n + 1; }

/// Grid on which a quadratic product of band-`band` fields is analysed
/// without aliasing back onto modes <= band (3/2 rule).
inline ManifoldSpec product_grid(ManifoldKind kind, int band) {
  if (is_torus(kind)) return ManifoldSpec::make(kind, even_ceil(3 * (band + 1)));
  return ManifoldSpec::make(kind, (3 * band + 1) / 2);
}

/// Native grid refined by an integer factor.
inline ManifoldSpec oversampled_grid(ManifoldKind kind, int band, int factor) {
  const ManifoldSpec native = ManifoldSpec::for_band(kind, band);
  return ManifoldSpec::make(kind, native.resolution * factor);
}

/// Square-root eigenvalue of -Delta for a torus wavevector.
inline double torus_lambda(int kx, int ky = 0) {
  return std::sqrt(static_cast<double>(kx) * kx + static_cast<double>(ky) * ky);
}

/// lambda_l = sqrt(l (l + 1)) on the unit sphere.
inline double sphere_lambda(int degree) {
  return std::sqrt(static_cast<double>(degree) * (degree + 1));
}

struct Eigenvalue {
  double lambda = 0.0;  // square root of the -Delta eigenvalue
  int multiplicity = 0;
};

/// Distinct eigenvalues (with multiplicity) of the modes carried by a field
/// band-limited at `band`, sorted increasingly.
inline std::vector<Eigenvalue> eigenvalues(ManifoldKind kind, int band) {
  std::vector<Eigenvalue> out;
  switch (kind) {
    case ManifoldKind::Torus1D:
      out.push_back({0.0, 1});
      for (int k = 1; k <= band; ++k) out.push_back({static_cast<double>(k), 2});
      break;
    case ManifoldKind::Torus2D: {
      std::vector<int> count(2 * band * band + 1, 0);
      for (int kx = -band; kx <= band; ++kx)
        for (int ky = -band; ky <= band; ++ky) ++count[kx * kx + ky * ky];
      for (std::size_t n = 0; n < count.size(); ++n)
        if (count[n] > 0) out.push_back({std::sqrt(static_cast<double>(n)), count[n]});
      break;
    }
    case ManifoldKind::Sphere2D:
      for (int l = 0; l <= band; ++l) out.push_back({sphere_lambda(l), 2 * l + 1});
      break;
  }
  return out;
}

/// Exact eigenvalue counting function N(R) = #{k : lambda_k <= R} over the
/// full (unbounded) spectrum. A relative slack of 1e-12 absorbs rounding in R.
inline long long weyl_count(const ManifoldSpec& m, double radius) {
  if (radius < 0.0) throw DomainError("weyl_count: R must be >= 0");
  const double r2 = radius * radius * (1.0 + 1e-12);
  switch (m.kind) {
    case ManifoldKind::Torus1D: {
      const auto kmax = static_cast<long long>(std::floor(radius * (1.0 + 1e-12)));
      return 2 * kmax + 1;
    }
    case ManifoldKind::Torus2D: {
      const auto amax = static_cast<long long>(std::floor(std::sqrt(r2)));
      long long total = 0;
      for (long long a = -amax; a <= amax; ++a) {
        const double rem = r2 - static_cast<double>(a * a);
        auto b = static_cast<long long>(std::floor(std::sqrt(rem)));
        while (static_cast<double>(b * b) > rem) --b;
        while (static_cast<double>((b + 1) * (b + 1)) <= rem) ++b;
        total += 2 * b + 1;
      }
      return total;
    }
    case ManifoldKind::Sphere2D: {
      long long l = static_cast<long long>(std::floor(radius));
      while (l >= 0 && static_cast<double>(l * (l + 1)) > r2) --l;
      while (static_cast<double>((l + 1) * (l + 2)) <= r2) ++l;
      return (l + 1) * (l + 1);
    }
  }
  return 0;
}

/// Leading Weyl term omega_n vol(M) (2 pi)^{-n} R^n.
inline double weyl_leading_term(const ManifoldSpec& m, double radius) {
  const int n = m.dimension();
  const double omega = n == 1 ? 2.0 : std::numbers::pi;
  return omega * m.volume() / std::pow(2.0 * std::numbers::pi, n) * std::pow(radius, n);
}

}  // namespace asq
