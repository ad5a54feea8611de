#pragma once

// Mollified active-scalar evolution
//
//   d/dt theta = -J (J u . grad J theta) - kappa Lambda^gamma theta,
//   u = grad Lambda^{-1+alpha} theta,   J = e^{eps Delta},
//
// integrated with classical RK4 on the spectral coefficients.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "asq/detail/parallel.hpp"
#include "asq/spectral.hpp"

namespace asq {

struct BlowupThresholds {
  /// Unset: 100 * ||grad theta_0||_inf (infinite when theta_0 is constant).
  std::optional<double> grad_sup_max;
  double tail_fraction_max = 0.1;
};

struct EvolutionConfig {
  double alpha = 0.0;
  double kappa = 0.0;
  double gamma = 1.0;
  /// Unset: (pi / band)^2.
  std::optional<double> eps_mollify;
  double dt_init = 1e-2;
  double cfl = 0.5;
  double t_end = 1.0;
  bool dealias = true;
  /// Keep every n-th accepted state; 0 keeps only the initial and final ones.
  int snapshot_every = 0;
  BlowupThresholds blowup;
  /// Order of the H^s diagnostic. Unset: 1 + n/2 + 1/2.
  std::optional<double> hs_order;
  /// Switches the quadratic transport term off (linear damping only).
  bool transport = true;

  void validate() const {
    auto bad = [](const std::string& what) { throw DomainError("EvolutionConfig: " + what); };
    if (!(alpha > -1.0 && alpha < 1.0)) bad("alpha must lie in (-1, 1)");
    if (!(kappa >= 0.0)) bad("kappa must be >= 0");
    if (kappa > 0.0 && !(gamma > 0.0 && gamma <= 2.0)) bad("gamma must lie in (0, 2]");
    if (eps_mollify && !(*eps_mollify >= 0.0)) bad("eps_mollify must be >= 0");
    if (!(dt_init > 0.0)) bad("dt_init must be > 0");
    if (!(cfl > 0.0 && cfl <= 1.0)) bad("cfl must lie in (0, 1]");
    if (!(t_end > 0.0)) bad("t_end must be > 0");
    if (snapshot_every < 0) bad("snapshot_every must be >= 0");
    if (blowup.grad_sup_max && !(*blowup.grad_sup_max > 0.0)) bad("grad_sup_max must be > 0");
    if (!(blowup.tail_fraction_max > 0.0)) bad("tail_fraction_max must be > 0");
  }

  double mollifier(int band) const {
    if (eps_mollify) return *eps_mollify;
    const double r = std::numbers::pi / band;
    return r * r;
  }

  double sobolev_order(int dim) const { return hs_order.value_or(1.0 + 0.5 * dim + 0.5); }
};

struct SimulationState {
  double t = 0.0;
  SpectralField theta;
  long step_count = 0;
};

struct DiagnosticsRecord {
  double t = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double min_val = 0.0;
  double hdot_half_alpha = 0.0;
  double grad_sup = 0.0;
  double hs_norm = 0.0;
  double tail_fraction = 0.0;

  bool finite() const {
    for (double v : {t, l1, l2, linf, min_val, hdot_half_alpha, grad_sup, hs_norm, tail_fraction})
      if (!std::isfinite(v)) return false;
    return true;
  }
};

enum class TerminationStatus { Resolved, BlowupSuspected, NumericalFailure, NoBlowupObserved };

inline std::string_view to_string(TerminationStatus s) {
  switch (s) {
    case TerminationStatus::Resolved: return "Resolved";
    case TerminationStatus::BlowupSuspected: return "BlowupSuspected";
    case TerminationStatus::NumericalFailure: return "NumericalFailure";
    case TerminationStatus::NoBlowupObserved: return "NoBlowupObserved";
  }
  return "?";
}

// ---------------------------------------------------------------------------

/// u = grad Lambda^{-1+alpha} theta on the given grid.
inline NodalVectorField velocity(const SpectralField& theta, double alpha, const ManifoldSpec& grid) {
  if (!(alpha > -1.0 && alpha < 1.0)) throw DomainError("velocity: alpha must lie in (-1, 1)");
  return gradient(apply_fractional_laplacian(theta, -1.0 + alpha), grid);
}

inline NodalVectorField velocity(const SpectralField& theta, double alpha) {
  return velocity(theta, alpha, theta.manifold());
}

/// Grid on which the quadratic term is formed.
inline ManifoldSpec transport_grid(const SpectralField& theta, const EvolutionConfig& cfg) {
  return cfg.dealias ? product_grid(theta.kind(), theta.band_limit()) : theta.manifold();
}

inline SpectralField rhs(const SpectralField& theta, const EvolutionConfig& cfg) {
  const int band = theta.band_limit();
  SpectralField out = SpectralField::zeros(theta.kind(), band);
  if (cfg.transport) {
    const double eps = cfg.mollifier(band);
    const auto jtheta = mollify(theta, eps);
    const auto grid = transport_grid(theta, cfg);
    const auto advection = dot(velocity(jtheta, cfg.alpha, grid), gradient(jtheta, grid));
    out = mollify(analyze(advection, band), eps);
    out *= -1.0;
  }
  if (cfg.kappa > 0.0) out.axpy(-cfg.kappa, apply_fractional_laplacian(theta, cfg.gamma));
  return out;
}

/// Grid spacing entering the CFL restriction.
inline double cfl_spacing(const ManifoldSpec& m) {
  if (is_torus(m.kind)) return 2.0 * std::numbers::pi / m.resolution;
  return std::numbers::pi / (m.band_limit() + 1);
}

/// dt = min(dt_init, cfl h / max|J u|), clipped so the step ends at t_end.
inline double choose_dt(const SimulationState& s, const EvolutionConfig& cfg) {
  double umax = 0.0;
  if (cfg.transport) {
    const auto jtheta = mollify(s.theta, cfg.mollifier(s.theta.band_limit()));
    for (double v : velocity(jtheta, cfg.alpha).norm().values) umax = std::max(umax, v);
  }
  double dt = std::min(cfg.dt_init, cfg.cfl * cfl_spacing(s.theta.manifold()) / std::max(umax, 1e-12));
  const double remaining = cfg.t_end - s.t;
  if (remaining > 0.0 && dt > remaining) dt = remaining;
  return dt;
}

inline SimulationState step_with_dt(const SimulationState& s, const EvolutionConfig& cfg, double dt) {
  const auto& y = s.theta;
  const auto k1 = rhs(y, cfg);
  const auto k2 = rhs(y + (0.5 * dt) * k1, cfg);
  const auto k3 = rhs(y + (0.5 * dt) * k2, cfg);
  const auto k4 = rhs(y + dt * k3, cfg);
  SimulationState next{s.t + dt, y, s.step_count + 1};
  next.theta.axpy(dt / 6.0, k1);
  next.theta.axpy(dt / 3.0, k2);
  next.theta.axpy(dt / 3.0, k3);
  next.theta.axpy(dt / 6.0, k4);
  next.theta.enforce_real();
  return next;
}

inline SimulationState step(const SimulationState& s, const EvolutionConfig& cfg) {
  return step_with_dt(s, cfg, choose_dt(s, cfg));
}

/// Share of mean-free spectral energy carried by modes above 2/3 of the band.
/// Mean-free energy at round-off level relative to the mean counts as none.
inline double tail_fraction(const SpectralField& f) {
  const double cut = 2.0 / 3.0 * f.band_limit();
  const double total = spectral_energy(f, [](double l) { return l > 0.0 ? 1.0 : 0.0; });
  const double all = spectral_energy(f, [](double) { return 1.0; });
  if (total <= 1e-24 * all) return 0.0;
  return spectral_energy(f, [cut](double l) { return l > cut ? 1.0 : 0.0; }) / total;
}

inline double grad_sup(const SpectralField& f) {
  const auto g = gradient(f, oversampled(f)).norm();
  return *std::max_element(g.values.begin(), g.values.end());
}

inline DiagnosticsRecord diagnostics(const SimulationState& s, const EvolutionConfig& cfg) {
  const auto& theta = s.theta;
  const auto fine = synthesize(theta, oversampled(theta));
  DiagnosticsRecord r;
  r.t = s.t;
  r.l1 = norm_lp(fine, 1.0);
  r.l2 = norm_lp(fine, 2.0);
  r.linf = norm_lp(fine, INFINITY);
  r.min_val = fine.min();
  r.hdot_half_alpha =
      norm_sobolev(mollify(theta, cfg.mollifier(theta.band_limit())), 0.5 * (1.0 + cfg.alpha));
  r.grad_sup = grad_sup(theta);
  r.hs_norm = norm_hs(theta, cfg.sobolev_order(theta.manifold().dimension()));
  r.tail_fraction = tail_fraction(theta);
  return r;
}

// ---------------------------------------------------------------------------
// Blow-up detection

/// Index of the first record of the first run of three consecutive records
/// above a threshold, or -1.
inline long first_trigger(const std::vector<DiagnosticsRecord>& series, double grad_sup_max,
                          double tail_fraction_max) {
  int streak = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& r = series[i];
    if (r.grad_sup > grad_sup_max || r.tail_fraction > tail_fraction_max) {
      if (++streak == 3) return static_cast<long>(i) - 2;
    } else {
      streak = 0;
    }
  }
  return -1;
}

inline TerminationStatus detect_blowup(const std::vector<DiagnosticsRecord>& series, double grad_sup_max,
                                       double tail_fraction_max) {
  return first_trigger(series, grad_sup_max, tail_fraction_max) >= 0 ? TerminationStatus::BlowupSuspected
                                                                     : TerminationStatus::Resolved;
}

inline TerminationStatus detect_blowup(const std::vector<DiagnosticsRecord>& series, const EvolutionConfig& cfg) {
  return detect_blowup(series, cfg.blowup.grad_sup_max.value_or(INFINITY), cfg.blowup.tail_fraction_max);
}

// ---------------------------------------------------------------------------

struct RunOutput {
  std::vector<DiagnosticsRecord> diagnostics;
  std::vector<SimulationState> snapshots;
  TerminationStatus status = TerminationStatus::Resolved;
  std::vector<std::string> warnings;
  /// Configuration with every default resolved.
  EvolutionConfig cfg;
  /// Time of the first record of the triggering streak (NaN if none).
  double t_trigger = std::numeric_limits<double>::quiet_NaN();
};

/// Called with each accepted state; returning false stops the run.
using StepObserver = std::function<bool(const SimulationState&, const DiagnosticsRecord&)>;

inline RunOutput run(const NodalField& theta0, EvolutionConfig cfg, const StepObserver& observer = {}) {
  cfg.validate();
  const int band = theta0.grid.band_limit();
  RunOutput out;
  cfg.eps_mollify = cfg.mollifier(band);
  cfg.hs_order = cfg.sobolev_order(theta0.grid.dimension());

  SimulationState state{0.0, mollify(analyze(theta0), *cfg.eps_mollify), 0};
  if (!cfg.blowup.grad_sup_max) {
    const double g0 = grad_sup(state.theta);
    cfg.blowup.grad_sup_max = g0 > 1e-12 * std::max(1.0, norm_linf(state.theta)) ? 100.0 * g0 : INFINITY;
  }
  out.cfg = cfg;
  if (theta0.min() <= 0.0) out.warnings.push_back("initial datum is not positive");
  if (cfg.alpha > 0.0) out.warnings.push_back("alpha > 0 lies outside the sketched well-posedness range");

  auto record = [&](const SimulationState& s) {
    out.diagnostics.push_back(diagnostics(s, cfg));
    return out.diagnostics.back();
  };
  record(state);
  out.snapshots.push_back(state);
  if (observer && !observer(state, out.diagnostics.back())) return out;

  int streak = 0;
  const double tol = 1e-12 * cfg.t_end;
  while (state.t < cfg.t_end - tol) {
    state = step(state, cfg);
    if (!state.theta.is_finite()) {
      out.status = TerminationStatus::NumericalFailure;
      break;
    }
    const auto& r = record(state);
    if (!r.finite()) {
      out.status = TerminationStatus::NumericalFailure;
      break;
    }
    const bool keep = cfg.snapshot_every > 0 && state.step_count % cfg.snapshot_every == 0;
    if (keep) out.snapshots.push_back(state);
    if (observer && !observer(state, r)) break;
    if (r.grad_sup > *cfg.blowup.grad_sup_max || r.tail_fraction > cfg.blowup.tail_fraction_max) {
      if (++streak == 3) {
        out.status = TerminationStatus::BlowupSuspected;
        out.t_trigger = out.diagnostics[out.diagnostics.size() - 3].t;
        break;
      }
    } else {
      streak = 0;
    }
  }
  if (out.snapshots.back().step_count != state.step_count && state.theta.is_finite())
    out.snapshots.push_back(state);
  if (out.status == TerminationStatus::Resolved && theta0.min() > 0.0) {
    const double drift = out.diagnostics.front().min_val;
    for (const auto& r : out.diagnostics)
      if (r.min_val < drift - 1e-4 * out.diagnostics.front().linf) {
        out.warnings.push_back("positivity undershoot beyond 1e-4 ||theta_0||_inf");
        break;
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Refinement study

struct ResolutionEstimate {
  int resolution = 0;
  TerminationStatus status = TerminationStatus::Resolved;
  double t_b = std::numeric_limits<double>::quiet_NaN();
  /// max grad_sup over records up to the trigger, divided by grad_sup at t = 0.
  double peak_grad_ratio = 0.0;
};

struct BlowupEstimate {
  std::vector<ResolutionEstimate> per_resolution;
  /// |t_b(i+1) - t_b(i)| / t_b(i+1) for successive resolutions.
  std::vector<double> gaps;
  bool converged = false;
  TerminationStatus status = TerminationStatus::NoBlowupObserved;
};

/// Runs the same initial profile (a function of node coordinates) at each grid
/// resolution, concurrently, and compares first-trigger times.
inline BlowupEstimate estimate_blowup_time(const std::function<double(double, double)>& theta0, ManifoldKind kind,
                                           const EvolutionConfig& cfg, const std::vector<int>& resolutions) {
  if (resolutions.size() < 3) throw DomainError("estimate_blowup_time needs at least 3 resolutions");
  for (std::size_t i = 1; i < resolutions.size(); ++i)
    if (resolutions[i] <= resolutions[i - 1]) throw DomainError("resolutions must increase");

  BlowupEstimate est;
  est.per_resolution.resize(resolutions.size());
  detail::parallel_for(resolutions.size(), [&](std::size_t i) {
    const auto grid = ManifoldSpec::make(kind, resolutions[i]);
    auto c = cfg;
    c.snapshot_every = 0;
    const auto out = run(sample(grid, theta0), c);
    auto& e = est.per_resolution[i];
    e.resolution = resolutions[i];
    e.status = out.status;
    e.t_b = out.t_trigger;
    const double g0 = out.diagnostics.front().grad_sup;
    double peak = 0.0;
    for (const auto& r : out.diagnostics) {
      if (std::isfinite(e.t_b) && r.t > e.t_b) break;
      peak = std::max(peak, r.grad_sup);
    }
    e.peak_grad_ratio = g0 > 0.0 ? peak / g0 : 0.0;
  });

  if (est.per_resolution.back().status != TerminationStatus::BlowupSuspected) {
    est.status = TerminationStatus::NoBlowupObserved;
    return est;
  }
  est.status = TerminationStatus::BlowupSuspected;
  bool all = true;
  for (std::size_t i = 1; i < est.per_resolution.size(); ++i) {
    const double a = est.per_resolution[i - 1].t_b;
    const double b = est.per_resolution[i].t_b;
    if (!std::isfinite(a) || !std::isfinite(b)) {
      all = false;
      est.gaps.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    est.gaps.push_back(std::abs(b - a) / b);
  }
  est.converged = all && est.gaps.back() < 0.05;
  return est;
}

}  // namespace asq
