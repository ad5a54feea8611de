#pragma once

// Field representations: spectral coefficients in the Laplace-Beltrami
// eigenbasis, nodal values on a quadrature grid, and tangent vector fields.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asq/detail/legendre.hpp"
#include "asq/error.hpp"
#include "asq/manifold.hpp"

namespace asq {

/// Number of stored modes for a field band-limited at `band`.
///   Torus1D: k = 0..B (negative k implied by conjugate symmetry)
///   Torus2D: kx = -B..B, ky = 0..B
///   Sphere2D: (l, m) with |m| <= l <= B, index l^2 + l + m (real harmonics)
inline std::size_t mode_count(ManifoldKind kind, int band) {
  const auto b = static_cast<std::size_t>(band);
  switch (kind) {
    case ManifoldKind::Torus1D: return b + 1;
    case ManifoldKind::Torus2D: return (2 * b + 1) * (b + 1);
    case ManifoldKind::Sphere2D: return (b + 1) * (b + 1);
  }
  return 0;
}

/// Per-mode tables shared by all fields of one layout.
struct ModeTable {
  std::vector<double> lambda;  // sqrt of the -Delta eigenvalue
  std::vector<double> weight;  // how many eigenbasis coefficients the stored mode stands for
};

inline std::shared_ptr<const ModeTable> mode_table(ManifoldKind kind, int band) {
  static std::mutex mutex;
  static std::map<std::pair<ManifoldKind, int>, std::shared_ptr<const ModeTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{kind, band}];
  if (slot) return slot;
  auto table = std::make_shared<ModeTable>();
  const std::size_t count = mode_count(kind, band);
  table->lambda.resize(count);
  table->weight.resize(count);
  switch (kind) {
    case ManifoldKind::Torus1D:
      for (int k = 0; k <= band; ++k) {
        table->lambda[k] = k;
        table->weight[k] = k == 0 ? 1.0 : 2.0;
      }
      break;
    case ManifoldKind::Torus2D:
      for (int kx = -band; kx <= band; ++kx)
        for (int ky = 0; ky <= band; ++ky) {
          const auto i = static_cast<std::size_t>(kx + band) * (band + 1) + ky;
          table->lambda[i] = torus_lambda(kx, ky);
          table->weight[i] = ky == 0 ? 1.0 : 2.0;
        }
      break;
    case ManifoldKind::Sphere2D:
      for (int l = 0; l <= band; ++l)
        for (int m = -l; m <= l; ++m) {
          const auto i = static_cast<std::size_t>(l * l + l + m);
          table->lambda[i] = sphere_lambda(l);
          table->weight[i] = 1.0;
        }
      break;
  }
  slot = std::move(table);
  return slot;
}

/// A real scalar field as coefficients in the eigenbasis.
///
/// Torus coefficients use the plain exponential convention
/// f = sum_k c_k e^{i k.x}, so c_0 is the mean; the orthonormal eigenbasis
/// coefficient is sqrt(vol) c_k. Conjugate symmetry is built into the layout
/// (only ky >= 0 is stored). Sphere coefficients are the orthonormal real
/// spherical-harmonic coefficients, so a_00 = sqrt(4 pi) * mean.
class SpectralField {
 public:
  explicit SpectralField(const ManifoldSpec& manifold)
      : manifold_(manifold),
        band_(manifold.band_limit()),
        data_(asq::mode_count(manifold.kind, manifold.band_limit()) * (is_torus(manifold.kind) ? 2 : 1), 0.0) {}

  static SpectralField zeros(ManifoldKind kind, int band) {
    return SpectralField(ManifoldSpec::for_band(kind, band));
  }

  const ManifoldSpec& manifold() const { return manifold_; }
  ManifoldKind kind() const { return manifold_.kind; }
  int band_limit() const { return band_; }
  std::size_t mode_count() const { return asq::mode_count(kind(), band_); }
  int values_per_mode() const { return is_torus(kind()) ? 2 : 1; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::span<std::complex<double>> torus_modes() {
    require_torus();
    return {reinterpret_cast<std::complex<double>*>(data_.data()), data_.size() / 2};
  }
  std::span<const std::complex<double>> torus_modes() const {
    require_torus();
    return {reinterpret_cast<const std::complex<double>*>(data_.data()), data_.size() / 2};
  }

  std::size_t torus_index(int kx, int ky = 0) const {
    if (kind() == ManifoldKind::Torus1D) return static_cast<std::size_t>(kx);
    return static_cast<std::size_t>(kx + band_) * (band_ + 1) + ky;
  }

  static std::size_t sh_index(int l, int m) { return static_cast<std::size_t>(l * l + l + m); }

  /// Exponential-convention coefficient c_k for any wavevector (negative
  /// entries resolved by conjugate symmetry); zero outside the band.
  std::complex<double> coeff(int kx, int ky = 0) const {
    require_torus();
    if (kind() == ManifoldKind::Torus1D) {
      if (ky != 0 || std::abs(kx) > band_) return {};
      const auto c = torus_modes()[static_cast<std::size_t>(std::abs(kx))];
      return kx >= 0 ? c : std::conj(c);
    }
    if (std::abs(kx) > band_ || std::abs(ky) > band_) return {};
    if (ky >= 0) return torus_modes()[torus_index(kx, ky)];
    return std::conj(torus_modes()[torus_index(-kx, -ky)]);
  }

  /// Sets c_k and its conjugate partner c_{-k}.
  void set_coeff(int kx, int ky, std::complex<double> value) {
    require_torus();
    if (std::abs(kx) > band_ || std::abs(ky) > band_ ||
        (kind() == ManifoldKind::Torus1D && ky != 0))
      throw StructuralError("wavevector outside band limit");
    auto modes = torus_modes();
    if (kind() == ManifoldKind::Torus1D) {
      if (kx == 0) value = value.real();
      modes[static_cast<std::size_t>(std::abs(kx))] = kx >= 0 ? value : std::conj(value);
      return;
    }
    if (ky < 0) {
      kx = -kx;
      ky = -ky;
      value = std::conj(value);
    }
    if (ky == 0) {
      if (kx == 0) value = value.real();
      modes[torus_index(-kx, 0)] = std::conj(value);
    }
    modes[torus_index(kx, ky)] = value;
  }

  double sh(int l, int m) const {
    require_sphere();
    return data_[sh_index(l, m)];
  }
  double& sh(int l, int m) {
    require_sphere();
    return data_[sh_index(l, m)];
  }

  /// Spatial mean of the field.
  double mean() const {
    if (is_torus(kind())) return data_[torus_index(0, 0) * 2];
    return data_[0] / std::sqrt(4.0 * std::numbers::pi);
  }

  /// Eigenbasis coefficient of the constant mode, <f, phi_0>.
  double zero_mode() const {
    if (is_torus(kind())) return mean() * std::sqrt(manifold_.volume());
    return data_[0];
  }

  /// Restores the real-field symmetry on the ky = 0 row (and zero mode).
  void enforce_real() {
    if (!is_torus(kind())) return;
    auto modes = torus_modes();
    if (kind() == ManifoldKind::Torus1D) {
      modes[0] = modes[0].real();
      return;
    }
    for (int kx = 1; kx <= band_; ++kx) {
      const auto avg = 0.5 * (modes[torus_index(kx, 0)] + std::conj(modes[torus_index(-kx, 0)]));
      modes[torus_index(kx, 0)] = avg;
      modes[torus_index(-kx, 0)] = std::conj(avg);
    }
    modes[torus_index(0, 0)] = modes[torus_index(0, 0)].real();
  }

  /// Applies a real multiplier m(lambda_k) mode by mode.
  template <class F>
  SpectralField& scale_by(F&& multiplier) {
    const auto table = mode_table(kind(), band_);
    const int vpm = values_per_mode();
    for (std::size_t i = 0; i < table->lambda.size(); ++i) {
      const double factor = multiplier(table->lambda[i]);
      for (int c = 0; c < vpm; ++c) data_[i * vpm + c] *= factor;
    }
    return *this;
  }

  bool is_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  SpectralField& operator+=(const SpectralField& other) {
    require_same(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& other) {
    require_same(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
  }
  SpectralField& operator*=(double a) {
    for (double& v : data_) v *= a;
    return *this;
  }
  /// this += a * other
  SpectralField& axpy(double a, const SpectralField& other) {
    require_same(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * other.data_[i];
    return *this;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }

  void require_same(const SpectralField& other) const {
    if (kind() != other.kind() || band_ != other.band_)
      throw StructuralError("spectral fields have different layouts");
  }

 private:
  void require_torus() const {
    if (!is_torus(kind())) throw StructuralError("torus coefficient access on a sphere field");
  }
  void require_sphere() const {
    if (is_torus(kind())) throw StructuralError("spherical-harmonic access on a torus field");
  }

  ManifoldSpec manifold_;
  int band_;
  std::vector<double> data_;
};

/// Field values on a quadrature grid, row-major: x for Torus1D; (x, y) with
/// y fastest for Torus2D; (colatitude, longitude) with longitude fastest for
/// the sphere.
struct NodalField {
  ManifoldSpec grid;
  std::vector<double> values;

  explicit NodalField(const ManifoldSpec& g) : grid(g), values(g.grid_size(), 0.0) {}
  NodalField(const ManifoldSpec& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.grid_size())
      throw StructuralError("nodal array size " + std::to_string(values.size()) +
                            " does not match grid size " + std::to_string(grid.grid_size()));
  }

  std::size_t size() const { return values.size(); }
  double max() const { return *std::max_element(values.begin(), values.end()); }
  double min() const { return *std::min_element(values.begin(), values.end()); }
};

/// Tangent vector field: components in the chart frame (d/dx, d/dy) on tori,
/// in the orthonormal frame (e_theta, e_phi) on the sphere, so the metric
/// norm is the Euclidean norm of the components everywhere.
struct NodalVectorField {
  ManifoldSpec grid;
  std::vector<std::vector<double>> components;

  explicit NodalVectorField(const ManifoldSpec& g)
      : grid(g), components(g.dimension(), std::vector<double>(g.grid_size(), 0.0)) {}

  NodalField norm() const {
    NodalField out(grid);
    for (std::size_t i = 0; i < out.size(); ++i) {
      double s = 0.0;
      for (const auto& c : components) s += c[i] * c[i];
      out.values[i] = std::sqrt(s);
    }
    return out;
  }
};

/// Pointwise metric inner product of two vector fields on the same grid.
inline NodalField dot(const NodalVectorField& a, const NodalVectorField& b) {
  if (!(a.grid == b.grid)) throw StructuralError("vector fields live on different grids");
  NodalField out(a.grid);
  for (std::size_t d = 0; d < a.components.size(); ++d)
    for (std::size_t i = 0; i < out.size(); ++i)
      out.values[i] += a.components[d][i] * b.components[d][i];
  return out;
}

// ---------------------------------------------------------------------------
// Grid geometry

/// Node coordinates: (x, 0) on Torus1D, (x, y) on Torus2D, (colatitude,
/// longitude) on the sphere.
inline std::vector<std::pair<double, double>> grid_nodes(const ManifoldSpec& g) {
  std::vector<std::pair<double, double>> nodes;
  nodes.reserve(g.grid_size());
  const double two_pi = 2.0 * std::numbers::pi;
  switch (g.kind) {
    case ManifoldKind::Torus1D:
      for (int i = 0; i < g.resolution; ++i) nodes.emplace_back(two_pi * i / g.resolution, 0.0);
      break;
    case ManifoldKind::Torus2D:
      for (int i = 0; i < g.resolution; ++i)
        for (int j = 0; j < g.resolution; ++j)
          nodes.emplace_back(two_pi * i / g.resolution, two_pi * j / g.resolution);
      break;
    case ManifoldKind::Sphere2D: {
      const auto rule = detail::legendre_table(g.resolution, 0)->rule;
      const int nlon = g.cols();
      for (double x : rule.x)
        for (int j = 0; j < nlon; ++j) nodes.emplace_back(std::acos(x), two_pi * j / nlon);
      break;
    }
  }
  return nodes;
}

/// Quadrature weights w_i with sum_i w_i f(x_i) = integral of f.
inline std::vector<double> quadrature_weights(const ManifoldSpec& g) {
  if (is_torus(g.kind)) return std::vector<double>(g.grid_size(), g.volume() / g.grid_size());
  const auto table = detail::legendre_table(g.resolution, 0);
  const int nlon = g.cols();
  const double dphi = 2.0 * std::numbers::pi / nlon;
  std::vector<double> w;
  w.reserve(g.grid_size());
  for (double wl : table->rule.w)
    for (int j = 0; j < nlon; ++j) w.push_back(wl * dphi);
  return w;
}

/// Samples f(a, b) at every node (see grid_nodes for the coordinates).
inline NodalField sample(const ManifoldSpec& g, const std::function<double(double, double)>& f) {
  NodalField out(g);
  const auto nodes = grid_nodes(g);
  for (std::size_t i = 0; i < nodes.size(); ++i) out.values[i] = f(nodes[i].first, nodes[i].second);
  return out;
}

}  // namespace asq
