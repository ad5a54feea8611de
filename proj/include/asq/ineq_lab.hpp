#pragma once

// Empirical checks of the analytic inequalities behind the blow-up argument,
// and fitting of the constants hidden behind "<~".

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asq/detail/legendre.hpp"
#include "asq/detail/parallel.hpp"
#include "asq/dynamics.hpp"
#include "asq/error.hpp"
#include "asq/fields.hpp"
#include "asq/manifold.hpp"
#include "asq/spectral.hpp"

namespace asq {

// ---------------------------------------------------------------------------
// Randomness

/// Counter-based generator: draw i of stream s under seed k is a pure
/// function of (k, s, i), so trials can run in any order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + kGolden))) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() { return mix(key_ + kGolden * ++counter_); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(next() % span);
  }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Samples

struct AmplitudeLaw {
  enum class Kind { Flat, PowerDecay } kind = Kind::Flat;
  double p = 0.0;

  static AmplitudeLaw flat() { return {}; }
  static AmplitudeLaw power_decay(double p) { return {Kind::PowerDecay, p}; }
  double operator()(double lambda) const { return kind == Kind::Flat ? 1.0 : std::pow(1.0 + lambda, -p); }
};

struct SampleSpec {
  ManifoldSpec manifold;
  long n_trials = 1;
  std::uint64_t seed = 0;
  int band_limit = 16;
  AmplitudeLaw amplitude_law;

  void validate() const {
    if (n_trials < 1) throw DomainError("SampleSpec: n_trials must be >= 1");
    if (band_limit < 1) throw DomainError("SampleSpec: band_limit must be >= 1");
    if (manifold.kind == ManifoldKind::Sphere2D && band_limit < 8)
      throw DomainError("SampleSpec: sphere band_limit must be >= 8");
    if (amplitude_law.kind == AmplitudeLaw::Kind::PowerDecay && !(amplitude_law.p >= 0.0))
      throw DomainError("SampleSpec: power_decay exponent must be >= 0");
  }
};

/// Adversarial families, cycled by trial index.
enum class Family { PowerLaw, HighMode, PointMass };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::PowerLaw: return "power_law";
    case Family::HighMode: return "high_mode";
    case Family::PointMass: return "point_mass";
  }
  return "unknown";
}

inline Family family_for_trial(std::uint64_t trial) { return static_cast<Family>(trial % 3); }

namespace detail {
inline int sh_row(int band, int l, int m) { return m * (band + 1) - m * (m - 1) / 2 + (l - m); }
}  // namespace detail

/// J_eps delta_x0: the heat-mollified unit point mass at (a, b), in the
/// coordinates of grid_nodes.
inline SpectralField point_mass(ManifoldKind kind, int band, double a, double b, double eps) {
  auto f = SpectralField::zeros(kind, band);
  const double vol = f.manifold().volume();
  switch (kind) {
    case ManifoldKind::Torus1D:
      for (int k = 0; k <= band; ++k) f.set_coeff(k, 0, std::polar(std::exp(-eps * k * k) / vol, -k * a));
      break;
    case ManifoldKind::Torus2D:
      for (int kx = -band; kx <= band; ++kx)
        for (int ky = 0; ky <= band; ++ky) {
          if (ky == 0 && kx < 0) continue;
          const double l2 = static_cast<double>(kx) * kx + static_cast<double>(ky) * ky;
          f.set_coeff(kx, ky, std::polar(std::exp(-eps * l2) / vol, -(kx * a + ky * b)));
        }
      break;
    case ManifoldKind::Sphere2D: {
      const auto col = detail::legendre_column(band, std::cos(static_cast<long double>(a)),
                                               std::sin(static_cast<long double>(a)));
      for (int l = 0; l <= band; ++l) {
        const double damp = std::exp(-eps * l * (l + 1.0));
        for (int m = -l; m <= l; ++m) {
          const double p = static_cast<double>(col[detail::sh_row(band, l, std::abs(m))]);
          const double ang = m == 0 ? 1.0 : std::numbers::sqrt2 * (m > 0 ? std::cos(m * b) : std::sin(-m * b));
          f.sh(l, m) = damp * p * ang;
        }
      }
      break;
    }
  }
  return f;
}

/// Trial `trial` of the sample: a deterministic function of (seed, trial).
inline SpectralField draw_field(const SampleSpec& spec, std::uint64_t trial) {
  CounterRng rng(spec.seed, trial);
  const ManifoldKind kind = spec.manifold.kind;
  const int band = spec.band_limit;
  auto f = SpectralField::zeros(kind, band);
  switch (family_for_trial(trial)) {
    case Family::PowerLaw: {
      const auto table = mode_table(kind, band);
      auto data = f.data();
      const int vpm = f.values_per_mode();
      for (std::size_t i = 0; i < table->lambda.size(); ++i) {
        const double amp = spec.amplitude_law(table->lambda[i]);
        for (int c = 0; c < vpm; ++c) data[i * vpm + c] = amp * rng.normal();
      }
      f.enforce_real();
      break;
    }
    case Family::HighMode: {
      const int lo = std::max(1, band / 2);
      const double phase = 2.0 * std::numbers::pi * rng.uniform();
      if (kind == ManifoldKind::Torus1D) {
        f.set_coeff(rng.uniform_int(lo, band), 0, std::polar(1.0, phase));
      } else if (kind == ManifoldKind::Torus2D) {
        int kx = 0, ky = 0;
        do {
          kx = rng.uniform_int(-band, band);
          ky = rng.uniform_int(0, band);
        } while (std::max(std::abs(kx), ky) < lo);
        f.set_coeff(kx, ky, std::polar(1.0, phase));
      } else {
        const int l = rng.uniform_int(lo, band);
        f.sh(l, rng.uniform_int(-l, l)) = 1.0;
      }
      break;
    }
    case Family::PointMass: {
      double a = 0.0, b = 0.0;
      if (is_torus(kind)) {
        a = 2.0 * std::numbers::pi * rng.uniform();
        b = kind == ManifoldKind::Torus2D ? 2.0 * std::numbers::pi * rng.uniform() : 0.0;
      } else {
        a = std::acos(1.0 - 2.0 * rng.uniform());
        b = 2.0 * std::numbers::pi * rng.uniform();
      }
      const double width = (1.0 + 3.0 * rng.uniform()) / band;
      f = point_mass(kind, band, a, b, width * width);
      break;
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Reports

struct Witness {
  std::string family;
  std::uint64_t trial = 0;
  ManifoldKind kind = ManifoldKind::Torus1D;
  int band = 0;
  std::vector<double> coefficients;
};

struct Revalidation {
  std::uint64_t seed = 0;
  long trials = 0;
  long violations = 0;
  double constant = 0.0;  // inflated constant used
  double worst_ratio = 0.0;
  double rate() const { return trials > 0 ? static_cast<double>(violations) / trials : 0.0; }
  bool passed() const { return rate() <= 1e-3; }
};

/// worst_ratio is lhs / rhs with constant 1; fitted_constant is the constant
/// the report vouches for. violations counts own-sample ratios above it.
struct InequalityReport {
  std::string name;
  long trials = 0;
  double worst_ratio = 0.0;
  double fitted_constant = 0.0;
  long violations = 0;
  std::optional<Witness> witness;
  std::vector<double> ratios;
  std::map<std::string, double> parameters;
  std::optional<Revalidation> revalidation;
};

/// Fits the constant as the maximum ratio (so violations = 0).
inline InequalityReport fit_report(std::string name, std::vector<double> ratios) {
  InequalityReport r;
  r.name = std::move(name);
  r.trials = static_cast<long>(ratios.size());
  for (double v : ratios) r.worst_ratio = std::max(r.worst_ratio, v);
  r.fitted_constant = r.worst_ratio;
  r.ratios = std::move(ratios);
  return r;
}

/// Report for an inequality with a known constant (no fitting).
inline InequalityReport fixed_constant_report(std::string name, std::vector<double> ratios, double constant) {
  InequalityReport r = fit_report(std::move(name), std::move(ratios));
  r.fitted_constant = constant;
  r.violations = std::count_if(r.ratios.begin(), r.ratios.end(), [&](double v) { return v > constant; });
  return r;
}

inline std::size_t worst_index(const std::vector<double>& ratios) {
  return static_cast<std::size_t>(std::max_element(ratios.begin(), ratios.end()) - ratios.begin());
}

inline Revalidation revalidate(std::span<const double> fresh_ratios, double constant, double inflation,
                               std::uint64_t seed) {
  Revalidation v;
  v.seed = seed;
  v.trials = static_cast<long>(fresh_ratios.size());
  v.constant = constant * inflation;
  for (double r : fresh_ratios) {
    v.worst_ratio = std::max(v.worst_ratio, r);
    if (r > v.constant) ++v.violations;
  }
  return v;
}

/// Ratios of `ratio_of(draw_field(spec, i))` for every trial, in trial order.
template <class RatioFn>
std::vector<double> sample_ratios(const SampleSpec& spec, RatioFn&& ratio_of) {
  spec.validate();
  std::vector<double> out(static_cast<std::size_t>(spec.n_trials));
  detail::parallel_for(out.size(), [&](std::size_t i) { out[i] = ratio_of(draw_field(spec, i)); });
  return out;
}

inline Witness make_witness(const SampleSpec& spec, std::uint64_t trial) {
  const auto f = draw_field(spec, trial);
  return {std::string(to_string(family_for_trial(trial))), trial, spec.manifold.kind, spec.band_limit,
          std::vector<double>(f.data().begin(), f.data().end())};
}

// ---------------------------------------------------------------------------
// Interpolation

enum class InterpolationVariant { Manifold, Torus };

/// ||f||_2 <~ ||f||_1^a ||f||_{\dot H^{(1+alpha)/2}}^b + ||f||_1.
struct InterpolationExponents {
  double a = 0.0;
  double b = 0.0;
};

inline InterpolationExponents interpolation_exponents(InterpolationVariant v, int n, double alpha) {
  if (!(alpha > -1.0 && alpha < 1.0)) throw DomainError("interpolation: alpha must lie in (-1, 1)");
  if (v == InterpolationVariant::Manifold) {
    const double d = 2.0 * n + alpha;
    return {(1.0 + alpha) / d, (2.0 * n - 1.0) / d};
  }
  const double d = n + 1.0 + alpha;
  return {(1.0 + alpha) / d, n / d};
}

struct InterpolationTerms {
  double lhs = 0.0;    // ||f||_2
  double l1 = 0.0;     // ||f||_1
  double hdot = 0.0;   // ||f||_{\dot H^{(1+alpha)/2}}
  double term1 = 0.0;  // l1^a hdot^b
  double term2 = 0.0;  // l1
  double ratio = 0.0;  // lhs / (term1 + term2)
};

/// ||f||_1 by quadrature of |f| on a refined grid (16x on the circle, 8x in
/// two dimensions); |f| has kinks at the zeros of f, so the rule is only
/// second-order accurate there.
inline double norm_l1(const SpectralField& f) {
  return norm_lp(synthesize(f, oversampled(f, f.manifold().dimension() == 1 ? 16 : 8)), 1.0);
}

inline InterpolationTerms interpolation_terms(const SpectralField& f, double alpha, InterpolationVariant v) {
  const auto ex = interpolation_exponents(v, f.manifold().dimension(), alpha);
  InterpolationTerms t;
  t.lhs = norm_l2_spectral(f);
  if (!(t.lhs > 0.0)) throw DomainError("interpolation: field is identically zero");
  t.l1 = norm_l1(f);
  t.hdot = norm_sobolev(f, 0.5 * (1.0 + alpha));
  t.term1 = t.hdot > 0.0 ? std::pow(t.l1, ex.a) * std::pow(t.hdot, ex.b) : 0.0;
  t.term2 = t.l1;
  t.ratio = t.lhs / (t.term1 + t.term2);
  return t;
}

inline InterpolationTerms check_interpolation(const SpectralField& f, double alpha) {
  return interpolation_terms(f, alpha, InterpolationVariant::Manifold);
}

inline InterpolationTerms check_interpolation_torus(const SpectralField& f, double alpha) {
  if (!is_torus(f.kind())) throw DomainError("check_interpolation_torus: manifold must be a torus");
  return interpolation_terms(f, alpha, InterpolationVariant::Torus);
}

inline std::string interpolation_name(InterpolationVariant v) {
  return v == InterpolationVariant::Manifold ? "interpolation" : "interpolation_torus";
}

inline InequalityReport fit_interpolation_constant(const SampleSpec& spec, double alpha,
                                                   InterpolationVariant v = InterpolationVariant::Manifold) {
  if (v == InterpolationVariant::Torus && !is_torus(spec.manifold.kind))
    throw DomainError("fit_interpolation_constant: torus variant needs a torus");
  auto ratios = sample_ratios(spec, [&](const SpectralField& f) { return interpolation_terms(f, alpha, v).ratio; });
  auto r = fit_report(interpolation_name(v) + "/" + std::string(to_string(spec.manifold.kind)), std::move(ratios));
  r.witness = make_witness(spec, worst_index(r.ratios));
  r.parameters = {{"alpha", alpha},
                  {"seed", static_cast<double>(spec.seed)},
                  {"band_limit", spec.band_limit}};
  return r;
}

/// Draws a fresh sample under `fresh_seed` and counts ratios above
/// inflation * fitted constant.
inline Revalidation revalidate_interpolation(const InequalityReport& fitted, SampleSpec spec, double alpha,
                                             InterpolationVariant v, std::uint64_t fresh_seed,
                                             double inflation = 1.5) {
  spec.seed = fresh_seed;
  const auto ratios = sample_ratios(spec, [&](const SpectralField& f) { return interpolation_terms(f, alpha, v).ratio; });
  return revalidate(ratios, fitted.fitted_constant, inflation, fresh_seed);
}

// ---------------------------------------------------------------------------
// Cordoba-Cordoba pointwise inequality

enum class ConvexKind { Linear, Relu, Square, Exp };

struct ConvexPhi {
  ConvexKind kind = ConvexKind::Linear;
  double level = 0.0;  // relu threshold

  static ConvexPhi linear() { return {}; }
  static ConvexPhi relu(double level) { return {ConvexKind::Relu, level}; }
  static ConvexPhi square() { return {ConvexKind::Square, 0.0}; }
  static ConvexPhi exp() { return {ConvexKind::Exp, 0.0}; }

  /// (value, derivative); relu is smoothed with width delta.
  std::pair<double, double> eval(double x, double delta) const {
    switch (kind) {
      case ConvexKind::Linear: return {x, 1.0};
      case ConvexKind::Square: return {x * x, 2.0 * x};
      case ConvexKind::Exp: {
        const double e = std::exp(x);
        return {e, e};
      }
      case ConvexKind::Relu: {
        const double y = x - level;
        const double r = std::hypot(y, delta);
        return {0.5 * (y + r) - 0.5 * delta, r > 0.0 ? 0.5 * (1.0 + y / r) : 0.5};
      }
    }
    return {0.0, 0.0};
  }
};

inline std::string_view to_string(ConvexKind k) {
  switch (k) {
    case ConvexKind::Linear: return "linear";
    case ConvexKind::Relu: return "relu";
    case ConvexKind::Square: return "square";
    case ConvexKind::Exp: return "exp";
  }
  return "unknown";
}

struct PointwiseCheck {
  /// r(x) = Lambda^s(phi(f))(x) - phi'(f(x)) Lambda^s f(x) on the 4x grid.
  NodalField residual;
  double max_residual = 0.0;
  double tol = 0.0;
  double tail_estimate = 0.0;
  bool holds = true;
};

/// sup-norm bound of the modes of g with lambda > cutoff, weighted by lambda^s.
inline double upper_band_sup(const SpectralField& g, double s, double cutoff) {
  const auto table = mode_table(g.kind(), g.band_limit());
  const auto data = g.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < table->lambda.size(); ++i) {
    const double lam = table->lambda[i];
    if (lam <= cutoff) continue;
    if (is_torus(g.kind())) {
      sum += table->weight[i] * std::hypot(data[2 * i], data[2 * i + 1]) * std::pow(lam, s);
    } else {
      const double l = std::round(0.5 * (std::sqrt(1.0 + 4.0 * lam * lam) - 1.0));
      sum += std::abs(data[i]) * std::pow(lam, s) * std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi));
    }
  }
  return sum;
}

/// Tolerance: 1e-6 ||Lambda^s f||_inf, plus the upper-half band sup of
/// Lambda^s phi(f) on the 4x grid as an estimate of the discarded tail, plus
/// transform round-off 64 eps lambda_max^s ||phi(f)||_inf.
inline PointwiseCheck check_pointwise_cc(const SpectralField& f, ConvexPhi phi, double s) {
  if (!(s > 0.0 && s <= 2.0)) throw DomainError("check_pointwise_cc: s must lie in (0, 2]");
  const ManifoldSpec fine = oversampled(f, 4);
  const NodalField fn = synthesize(f, fine);
  const NodalField lsf = synthesize(apply_fractional_laplacian(f, s), fine);
  const double linf = norm_lp(fn, INFINITY);
  const double delta = 1e-6 * linf;

  PointwiseCheck out{NodalField(fine), 0.0, 0.0, 0.0, true};
  NodalField lphi(fine);
  double phi_sup = 0.0;
  if (phi.kind == ConvexKind::Linear) {
    lphi = lsf;  // phi(f) = f exactly
  } else {
    NodalField pf(fine);
    for (std::size_t i = 0; i < fn.size(); ++i) pf.values[i] = phi.eval(fn.values[i], delta).first;
    phi_sup = norm_lp(pf, INFINITY);
    const auto coeffs = analyze(pf, fine.band_limit());
    out.tail_estimate = upper_band_sup(coeffs, s, 0.5 * fine.band_limit());
    lphi = synthesize(apply_fractional_laplacian(coeffs, s), fine);
  }
  for (std::size_t i = 0; i < fn.size(); ++i)
    out.residual.values[i] = lphi.values[i] - phi.eval(fn.values[i], delta).second * lsf.values[i];
  out.max_residual = out.residual.max();
  const double lam_max = mode_table(fine.kind, fine.band_limit())->lambda.back();
  out.tol = 1e-6 * norm_lp(lsf, INFINITY) + out.tail_estimate +
            64.0 * std::numeric_limits<double>::epsilon() * std::pow(std::max(lam_max, 1.0), s) * phi_sup;
  out.holds = out.max_residual <= out.tol;
  return out;
}

/// phi for trial i: relu at a random level inside the range of f, square, exp.
inline ConvexPhi phi_for_trial(ConvexKind kind, const SpectralField& f, std::uint64_t seed, std::uint64_t trial) {
  if (kind != ConvexKind::Relu) return {kind, 0.0};
  const NodalField fn = synthesize(f, oversampled(f));
  CounterRng rng(seed ^ 0xC0C0ULL, trial);
  return ConvexPhi::relu(fn.min() + (fn.max() - fn.min()) * rng.uniform());
}

/// ratio = max residual^+ / tol per trial; the inequality has constant 1.
inline InequalityReport check_pointwise_suite(const SampleSpec& spec, ConvexKind kind, double s) {
  spec.validate();
  std::vector<double> ratios(static_cast<std::size_t>(spec.n_trials));
  detail::parallel_for(ratios.size(), [&](std::size_t i) {
    const auto f = draw_field(spec, i);
    const auto c = check_pointwise_cc(f, phi_for_trial(kind, f, spec.seed, i), s);
    ratios[i] = c.tol > 0.0 ? std::max(c.max_residual, 0.0) / c.tol : (c.max_residual > 0.0 ? INFINITY : 0.0);
  });
  auto r = fixed_constant_report("cc_pointwise/" + std::string(to_string(kind)) + "/" +
                                     std::string(to_string(spec.manifold.kind)),
                                 std::move(ratios), 1.0);
  r.witness = make_witness(spec, worst_index(r.ratios));
  r.parameters = {{"s", s}, {"seed", static_cast<double>(spec.seed)}, {"band_limit", spec.band_limit}};
  return r;
}

// ---------------------------------------------------------------------------
// Hormander sup bound

struct HormanderRow {
  double lambda = 0.0;
  int multiplicity = 0;
  double basis_sup = 0.0;  // max over the eigenspace basis of sup |phi|
  double ratio = 0.0;      // basis_sup / max(lambda, 1)^{(n-1)/2}
  double combo_sup = 0.0;  // largest sup of a random unit combination
  double combo_ratio = 0.0;  // combo_sup / (sqrt(multiplicity) max(lambda, 1)^{(n-1)/2})
};

struct HormanderTable {
  ManifoldKind kind = ManifoldKind::Torus1D;
  int k_max = 0;
  std::vector<HormanderRow> rows;
  double sup_ratio = 0.0;  // empirical C(M, g)
  double combo_worst = 0.0;
};

namespace detail {

/// Wavevectors with |k|^2 = norm2, for the complex exponential basis.
inline std::vector<std::pair<int, int>> lattice_shell(ManifoldKind kind, int norm2) {
  std::vector<std::pair<int, int>> out;
  const int r = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(norm2))));
  if (kind == ManifoldKind::Torus1D) {
    if (r * r == norm2) {
      out.push_back({r, 0});
      if (r != 0) out.push_back({-r, 0});
    }
    return out;
  }
  for (int kx = -r; kx <= r; ++kx)
    for (int ky = -r; ky <= r; ++ky)
      if (kx * kx + ky * ky == norm2) out.push_back({kx, ky});
  return out;
}

}  // namespace detail

/// Eigenspaces holding phi_0 .. phi_{k_max} in full. Torus bases are the
/// normalised exponentials (sup of the modulus); sphere bases are real
/// spherical harmonics, evaluated on a colatitude grid that includes both
/// poles. The (n-1)/2 power uses max(lambda, 1) so that lambda_0 = 0 is kept.
inline HormanderTable check_hormander(const ManifoldSpec& m, int k_max, std::uint64_t seed = 0, int combos = 4) {
  if (k_max < 0) throw DomainError("check_hormander: k_max must be >= 0");
  HormanderTable out;
  out.kind = m.kind;
  out.k_max = k_max;
  const int n = m.dimension();
  auto power = [&](double lam) { return std::pow(std::max(lam, 1.0), 0.5 * (n - 1)); };

  struct Space {
    double lambda;
    int norm2_or_degree;
    int multiplicity;
  };
  std::vector<Space> spaces;
  long count = 0;
  if (m.kind == ManifoldKind::Sphere2D) {
    for (int l = 0; count + 2 * l + 1 <= k_max + 1; ++l) {
      spaces.push_back({sphere_lambda(l), l, 2 * l + 1});
      count += 2 * l + 1;
    }
  } else {
    for (int n2 = 0;; ++n2) {
      const int mult = static_cast<int>(detail::lattice_shell(m.kind, n2).size());
      if (mult == 0) continue;
      if (count + mult > k_max + 1) break;
      spaces.push_back({std::sqrt(static_cast<double>(n2)), n2, mult});
      count += mult;
    }
  }
  out.rows.resize(spaces.size());

  detail::parallel_for(spaces.size(), [&](std::size_t idx) {
    const Space& sp = spaces[idx];
    HormanderRow row{sp.lambda, sp.multiplicity, 0.0, 0.0, 0.0, 0.0};
    CounterRng rng(seed, idx);
    if (is_torus(m.kind)) {
      const auto shell = detail::lattice_shell(m.kind, sp.norm2_or_degree);
      const int kmax = static_cast<int>(std::ceil(sp.lambda));
      const ManifoldSpec grid = ManifoldSpec::make(m.kind, 8 * (std::max(kmax, 3) + 1));
      const auto nodes = grid_nodes(grid);
      const double inv = 1.0 / std::sqrt(m.volume());
      for (auto [kx, ky] : shell) {
        double sup = 0.0;
        for (auto [x, y] : nodes) sup = std::max(sup, std::abs(std::polar(inv, kx * x + ky * y)));
        row.basis_sup = std::max(row.basis_sup, sup);
      }
      for (int c = 0; c < combos; ++c) {
        std::vector<std::complex<double>> coef(shell.size());
        double norm = 0.0;
        for (auto& z : coef) {
          z = {rng.normal(), rng.normal()};
          norm += std::norm(z);
        }
        double sup = 0.0;
        for (auto [x, y] : nodes) {
          std::complex<double> g{};
          for (std::size_t j = 0; j < shell.size(); ++j)
            g += coef[j] * std::polar(inv, shell[j].first * x + shell[j].second * y);
          sup = std::max(sup, std::abs(g) / std::sqrt(norm));
        }
        row.combo_sup = std::max(row.combo_sup, sup);
      }
    } else {
      const int l = sp.norm2_or_degree;
      const int ntheta = 8 * (l + 1) + 1;
      const int nphi = 16 * (l + 1);
      std::vector<std::vector<double>> pbar(ntheta, std::vector<double>(l + 1));
      for (int i = 0; i < ntheta; ++i) {
        const long double th = std::numbers::pi_v<long double> * i / (ntheta - 1);
        const auto col = detail::legendre_column(l, std::cos(th), std::sin(th));
        for (int mm = 0; mm <= l; ++mm) pbar[i][mm] = static_cast<double>(col[detail::sh_row(l, l, mm)]);
      }
      for (int mm = 0; mm <= l; ++mm) {
        double sup = 0.0;
        for (int i = 0; i < ntheta; ++i) sup = std::max(sup, std::abs(pbar[i][mm]));
        row.basis_sup = std::max(row.basis_sup, mm == 0 ? sup : std::numbers::sqrt2 * sup);
      }
      for (int c = 0; c < combos; ++c) {
        std::vector<double> coef(2 * l + 1);
        double norm = 0.0;
        for (double& z : coef) {
          z = rng.normal();
          norm += z * z;
        }
        double sup = 0.0;
        for (int i = 0; i < ntheta; ++i)
          for (int j = 0; j < nphi; ++j) {
            const double ph = 2.0 * std::numbers::pi * j / nphi;
            double g = coef[l] * pbar[i][0];
            for (int mm = 1; mm <= l; ++mm)
              g += std::numbers::sqrt2 * pbar[i][mm] * (coef[l + mm] * std::cos(mm * ph) + coef[l - mm] * std::sin(mm * ph));
            sup = std::max(sup, std::abs(g) / std::sqrt(norm));
          }
        row.combo_sup = std::max(row.combo_sup, sup);
      }
    }
    row.ratio = row.basis_sup / power(sp.lambda);
    row.combo_ratio = row.combo_sup / (std::sqrt(static_cast<double>(sp.multiplicity)) * power(sp.lambda));
    out.rows[idx] = row;
  });
  for (const auto& r : out.rows) {
    out.sup_ratio = std::max(out.sup_ratio, r.ratio);
    out.combo_worst = std::max(out.combo_worst, r.combo_ratio);
  }
  return out;
}

/// Report: basis ratios fit the constant, random combinations are checked
/// against it.
inline InequalityReport hormander_report(const HormanderTable& t) {
  std::vector<double> ratios;
  for (const auto& r : t.rows) ratios.push_back(r.ratio);
  auto rep = fit_report("hormander/" + std::string(to_string(t.kind)), std::move(ratios));
  for (const auto& r : t.rows) {
    rep.ratios.push_back(r.combo_ratio);
    rep.worst_ratio = std::max(rep.worst_ratio, r.combo_ratio);
    if (r.combo_ratio > rep.fitted_constant) ++rep.violations;
  }
  rep.trials = static_cast<long>(rep.ratios.size());
  rep.parameters = {{"k_max", t.k_max}};
  return rep;
}

// ---------------------------------------------------------------------------
// Weyl asymptotics

struct WeylRow {
  double radius = 0.0;
  long long count = 0;
  double leading = 0.0;
  double rel_error = 0.0;
};

struct WeylSweep {
  ManifoldKind kind = ManifoldKind::Torus1D;
  std::vector<WeylRow> rows;
  /// rel_error(R_{i+1}) <= rel_error(R_i) + 0.02 for every consecutive pair.
  bool monotone = true;
  double final_rel_error = 0.0;
};

inline std::vector<double> dyadic_radii(int j0, int j1) {
  std::vector<double> r;
  for (int j = j0; j <= j1; ++j) r.push_back(std::ldexp(1.0, j));
  return r;
}

inline WeylSweep weyl_sweep(const ManifoldSpec& m, std::span<const double> radii) {
  WeylSweep out;
  out.kind = m.kind;
  for (double R : radii) {
    if (!(R > 0.0)) throw DomainError("weyl_sweep: radii must be positive");
    WeylRow row{R, weyl_count(m, R), weyl_leading_term(m, R), 0.0};
    row.rel_error = std::abs(static_cast<double>(row.count) - row.leading) / row.leading;
    out.rows.push_back(row);
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (out.rows[i].rel_error > out.rows[i - 1].rel_error + 0.02) out.monotone = false;
  if (!out.rows.empty()) out.final_rel_error = out.rows.back().rel_error;
  return out;
}

/// ratio_i = rel_error(R_i) / (rel_error(R_{i-1}) + 0.02) for i >= 1, and
/// final rel_error / 0.05; constant 1.
inline InequalityReport weyl_report(const WeylSweep& w) {
  std::vector<double> ratios;
  for (std::size_t i = 1; i < w.rows.size(); ++i)
    ratios.push_back(w.rows[i].rel_error / (w.rows[i - 1].rel_error + 0.02));
  ratios.push_back(w.final_rel_error / 0.05);
  auto r = fixed_constant_report("weyl/" + std::string(to_string(w.kind)), std::move(ratios), 1.0);
  if (!w.rows.empty()) r.parameters = {{"r_min", w.rows.front().radius}, {"r_max", w.rows.back().radius}};
  return r;
}

// ---------------------------------------------------------------------------
// Riccati growth bound

inline double riccati_bound(double h0, double C, double t) {
  const double d = 1.0 - C * t * h0;
  return d > 0.0 ? h0 / d : INFINITY;
}

struct RiccatiFit {
  double s = 0.0;
  double h0 = 0.0;
  /// Smallest C >= 0 with hs(t) <= h0 / (1 - C t h0) on the window.
  double C = 0.0;
  double window_end = 0.0;
  /// min(window_end, c / (C h0))
  double certified_end = 0.0;
  double c_fraction = 0.5;
  std::vector<double> t, hs, margin;  // margin = 1 - C t h0, window records
  bool margin_positive = true;
  bool bound_holds = true;
  std::vector<std::string> warnings;
};

/// Does the series stay under h0 / (1 - C t h0) on [0, t_end]?
inline bool riccati_bound_holds(std::span<const DiagnosticsRecord> diag, double C, double t_end) {
  if (diag.empty()) return true;
  const double h0 = diag.front().hs_norm;
  for (const auto& r : diag) {
    if (r.t > t_end) break;
    if (r.hs_norm > riccati_bound(h0, C, r.t) * (1.0 + 1e-12)) return false;
  }
  return true;
}

inline RiccatiFit check_riccati_bound(std::span<const DiagnosticsRecord> diag, double s, int dim,
                                      std::optional<double> window_end = {}, double c_fraction = 0.5) {
  if (diag.empty()) throw DomainError("check_riccati_bound: empty diagnostics");
  if (!(c_fraction > 0.0 && c_fraction < 1.0)) throw DomainError("check_riccati_bound: c must lie in (0, 1)");
  RiccatiFit fit;
  fit.s = s;
  fit.c_fraction = c_fraction;
  if (s <= 1.0 + 0.5 * dim)
    fit.warnings.push_back("s = " + std::to_string(s) + " is not above 1 + n/2; the growth bound is outside its hypothesis");
  fit.h0 = diag.front().hs_norm;
  fit.window_end = window_end.value_or(diag.back().t);
  for (const auto& r : diag) {
    if (r.t > fit.window_end) break;
    if (r.t > 0.0 && r.hs_norm > fit.h0) fit.C = std::max(fit.C, (1.0 - fit.h0 / r.hs_norm) / (r.t * fit.h0));
  }
  fit.certified_end = fit.C > 0.0 ? std::min(fit.window_end, c_fraction / (fit.C * fit.h0)) : fit.window_end;
  for (const auto& r : diag) {
    if (r.t > fit.window_end) break;
    fit.t.push_back(r.t);
    fit.hs.push_back(r.hs_norm);
    fit.margin.push_back(1.0 - fit.C * r.t * fit.h0);
    if (r.t <= fit.certified_end && !(fit.margin.back() > 0.0)) fit.margin_positive = false;
  }
  fit.bound_holds = riccati_bound_holds(diag, fit.C, fit.certified_end);
  return fit;
}

// ---------------------------------------------------------------------------
// Maximum principle audit

struct MaximumPrincipleAudit {
  double reference_sup = 0.0;
  double reference_inf = 0.0;
  double sup_drift = 0.0;  // max_t (linf(t) - linf(0))^+
  double inf_drift = 0.0;  // max_t (min(0) - min(t))^+
  double tolerance = 0.0;
  double window_end = 0.0;
  std::size_t records = 0;
  bool passed = true;
  std::string diagnosis;
};

/// Audits records with t <= window_end (default: all). The reference values
/// default to the t = 0 record. A failure is reported as a resolution
/// diagnostic: the continuous dynamics cannot raise the sup.
inline MaximumPrincipleAudit audit_maximum_principle(std::span<const DiagnosticsRecord> diag,
                                                     std::optional<double> window_end = {},
                                                     double rel_tol = 1e-4,
                                                     std::optional<std::pair<double, double>> reference = {}) {
  if (diag.empty()) throw DomainError("audit_maximum_principle: empty diagnostics");
  MaximumPrincipleAudit a;
  a.reference_sup = reference ? reference->first : diag.front().linf;
  a.reference_inf = reference ? reference->second : diag.front().min_val;
  a.tolerance = rel_tol * a.reference_sup;
  a.window_end = window_end.value_or(diag.back().t);
  for (const auto& r : diag) {
    if (r.t > a.window_end) break;
    ++a.records;
    a.sup_drift = std::max(a.sup_drift, r.linf - a.reference_sup);
    a.inf_drift = std::max(a.inf_drift, a.reference_inf - r.min_val);
  }
  a.passed = a.sup_drift <= a.tolerance && a.inf_drift <= a.tolerance;
  a.diagnosis = a.passed ? "resolved: drift within tolerance"
                         : "resolution diagnostic: extrema drift exceeds tolerance; refine the grid or shorten the window";
  return a;
}

}  // namespace asq
