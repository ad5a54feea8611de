#pragma once

// Level-set truncation machinery: ladder levels, truncated energies measured
// along recorded runs, the superlinear energy recurrence and the L^infinity
// decay certificate that contradicts the maximum principle.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asq/dynamics.hpp"

namespace asq {

struct Exponents {
  double beta;
  double gamma;
};

/// beta = (2n + 2 alpha + 1) / (2n + alpha), gamma = (2n - 1) / (2n + alpha).
inline Exponents exponents(int n, double alpha) {
  if (n < 1) throw DomainError("exponents: n must be >= 1");
  if (!(alpha > -1.0 && alpha < 1.0)) throw DomainError("exponents: alpha must lie in (-1, 1)");
  const double den = 2.0 * n + alpha;
  return {(2.0 * n + 2.0 * alpha + 1.0) / den, (2.0 * n - 1.0) / den};
}

// ---------------------------------------------------------------------------
// Truncation ladder

struct TruncationLadder {
  double K = 1.0;
  int k_max = 0;

  TruncationLadder(double k_top, int levels) : K(k_top), k_max(levels) {
    if (!(K > 0.0)) throw DomainError("TruncationLadder: K must be > 0");
    if (k_max < 0) throw DomainError("TruncationLadder: k_max must be >= 0");
  }

  /// l_k = K (1 - 2^{-k})
  double level(int k) const { return K * (1.0 - std::ldexp(1.0, -k)); }

  std::vector<double> levels() const {
    std::vector<double> out;
    for (int k = 0; k <= k_max; ++k) out.push_back(level(k));
    return out;
  }
};

inline NodalField truncate(NodalField theta, double level) {
  for (double& v : theta.values) v = std::max(0.0, v - level);
  return theta;
}

/// (theta - level)^+ on the 2x oversampled grid.
inline NodalField truncate(const SpectralField& theta, double level) {
  return truncate(synthesize(theta, oversampled(theta)), level);
}

/// Counts grid points violating the two exact level-set relations between
/// consecutive levels: theta_{k+1} <= theta_k and 1{theta_{k+1} > 0} <=
/// (2^{k+1} / K) theta_k.
struct LevelSetCheck {
  long monotone_violations = 0;
  long indicator_violations = 0;
  bool ok() const { return monotone_violations == 0 && indicator_violations == 0; }
};

inline LevelSetCheck check_level_sets(const NodalField& theta, const TruncationLadder& ladder) {
  LevelSetCheck c;
  for (int k = 0; k < ladder.k_max; ++k) {
    const auto lo = truncate(theta, ladder.level(k));
    const auto hi = truncate(theta, ladder.level(k + 1));
    const double scale = std::ldexp(1.0, k + 1) / ladder.K;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (hi.values[i] > lo.values[i]) ++c.monotone_violations;
      if (hi.values[i] > 0.0 && !(1.0 <= scale * lo.values[i])) ++c.indicator_violations;
    }
  }
  return c;
}

/// Truncated energy int (theta - level)^+ and dissipation
/// ||(theta - level)^+||^2 in Hdot^{(1+alpha)/2}, both on the 2x grid.
struct LevelMeasure {
  double energy = 0.0;
  double dissipation = 0.0;
};

inline LevelMeasure measure_level(const NodalField& fine, double level, double alpha) {
  const auto cut = truncate(fine, level);
  const double d = norm_sobolev(analyze(cut), 0.5 * (1.0 + alpha));
  return {integrate(cut), d * d};
}

// ---------------------------------------------------------------------------
// Ladder along a recorded run

struct EnergyEntry {
  int k = 0;
  double level = 0.0;
  /// Time at which E_k is measured (t_0 = 0).
  double t_k = 0.0;
  double E_k = 0.0;
  /// Selected t_{k+1} in the window (T_k, T_{k+1}) and D_k measured there.
  double t_next = 0.0;
  double D_k = 0.0;
  /// (2^{k+1} / t_star) E_k
  double dissipation_bound = 0.0;
  int window_snapshots = 0;
};

struct EnergySeries {
  double K = 0.0;
  double t_star = 0.0;
  double alpha = 0.0;
  std::vector<EnergyEntry> entries;
};

/// Window (T_k, T_{k+1}) with T_k = t_star (1 - 2^{-k}).
inline std::pair<double, double> ladder_window(double t_star, int k) {
  return {t_star * (1.0 - std::ldexp(1.0, -k)), t_star * (1.0 - std::ldexp(1.0, -k - 1))};
}

/// For each level picks t_{k+1} as the snapshot in (T_k, T_{k+1}) with the
/// smallest D_k. Snapshots must be sorted by time and start at t = 0.
inline EnergySeries measure_ladder(std::span<const SimulationState> snapshots, double alpha, double K, double t_star,
                                   int k_max) {
  const TruncationLadder ladder(K, k_max);
  if (!(t_star > 0.0)) throw DomainError("measure_ladder: t_star must be > 0");
  if (snapshots.empty() || snapshots.front().t != 0.0)
    throw ResolutionError("measure_ladder: the first snapshot must be the initial state at t = 0");

  std::vector<NodalField> fine;
  fine.reserve(snapshots.size());
  const auto last = ladder_window(t_star, k_max).second;
  for (const auto& s : snapshots) {
    if (s.t >= last) break;
    fine.push_back(synthesize(s.theta, oversampled(s.theta)));
  }

  EnergySeries series{K, t_star, alpha, {}};
  std::size_t current = 0;  // snapshot index of t_k
  for (int k = 0; k <= k_max; ++k) {
    EnergyEntry e;
    e.k = k;
    e.level = ladder.level(k);
    e.t_k = snapshots[current].t;
    e.E_k = measure_level(fine[current], e.level, alpha).energy;
    e.dissipation_bound = std::ldexp(1.0, k + 1) / t_star * e.E_k;
    const auto [lo, hi] = ladder_window(t_star, k);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < fine.size(); ++i) {
      if (!(snapshots[i].t > lo && snapshots[i].t < hi)) continue;
      ++e.window_snapshots;
      const double d = measure_level(fine[i], e.level, alpha).dissipation;
      if (!best || d < e.D_k) {
        best = i;
        e.D_k = d;
      }
    }
    if (!best)
      throw ResolutionError("measure_ladder: window (" + std::to_string(lo) + ", " + std::to_string(hi) +
                            ") for level k = " + std::to_string(k) +
                            " contains no snapshot; record snapshots more densely");
    e.t_next = snapshots[*best].t;
    current = *best;
    series.entries.push_back(e);
  }
  return series;
}

// ---------------------------------------------------------------------------
// Virial residuals

struct VirialLevel {
  int k = 0;
  double level = 0.0;
  std::vector<double> t;       // snapshot times
  std::vector<double> energy;  // E_k(t)
  /// (E(t + d) - E(t)) / d + (D(t) + D(t + d)) / 2 for adjacent snapshots.
  std::vector<double> residual;
  double max_residual = -std::numeric_limits<double>::infinity();
  double max_abs_residual = 0.0;
  /// Largest increase E(t + d) - E(t) between adjacent snapshots.
  double max_increase = 0.0;
};

struct VirialReport {
  std::vector<VirialLevel> levels;
  /// Scale for tolerances: ||theta(0)||^2 in Hdot^{(1+alpha)/2}.
  double reference = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

/// Residuals of d/dt int theta_k <= -||theta_k||^2 along adjacent snapshot
/// pairs. The default tolerance is 1e-3 times the initial dissipation.
inline VirialReport check_virial(std::span<const SimulationState> snapshots, const TruncationLadder& ladder,
                                 double alpha, std::optional<double> tolerance = std::nullopt) {
  VirialReport rep;
  if (snapshots.empty()) return rep;
  std::vector<NodalField> fine;
  fine.reserve(snapshots.size());
  for (const auto& s : snapshots) fine.push_back(synthesize(s.theta, oversampled(s.theta)));
  const double d0 = norm_sobolev(snapshots.front().theta, 0.5 * (1.0 + alpha));
  rep.reference = d0 * d0;
  rep.tolerance = tolerance.value_or(1e-3 * rep.reference);

  rep.levels.resize(ladder.k_max + 1);
  detail::parallel_for(rep.levels.size(), [&](std::size_t k) {
    auto& lv = rep.levels[k];
    lv.k = static_cast<int>(k);
    lv.level = ladder.level(lv.k);
    std::vector<double> diss;
    for (std::size_t i = 0; i < fine.size(); ++i) {
      const auto m = measure_level(fine[i], lv.level, alpha);
      lv.t.push_back(snapshots[i].t);
      lv.energy.push_back(m.energy);
      diss.push_back(m.dissipation);
    }
    for (std::size_t i = 1; i < fine.size(); ++i) {
      const double dt = lv.t[i] - lv.t[i - 1];
      if (!(dt > 0.0)) continue;
      const double r = (lv.energy[i] - lv.energy[i - 1]) / dt + 0.5 * (diss[i] + diss[i - 1]);
      lv.residual.push_back(r);
      lv.max_residual = std::max(lv.max_residual, r);
      lv.max_abs_residual = std::max(lv.max_abs_residual, std::abs(r));
      lv.max_increase = std::max(lv.max_increase, lv.energy[i] - lv.energy[i - 1]);
    }
  });
  for (const auto& lv : rep.levels)
    if (lv.max_residual > rep.tolerance) rep.passed = false;
  return rep;
}

// ---------------------------------------------------------------------------
// Recurrence

/// Rule for the final time t_star in terms of eps = E_0.
enum class TStarRule {
  /// t_star = max{C', 1/eps}
  Linear,
  /// t_star = max{C', 1/eps}^2 as written in the closing summary
  Squared,
  /// t_star = 1 with C' = linf0 / 2 (relaxed precondition C' > 0)
  Unit,
};

inline std::string_view to_string(TStarRule r) {
  switch (r) {
    case TStarRule::Linear: return "linear";
    case TStarRule::Squared: return "squared";
    case TStarRule::Unit: return "unit";
  }
  return "?";
}

inline double t_star_for(TStarRule rule, double eps0, double Cprime) {
  switch (rule) {
    case TStarRule::Linear: return std::max(Cprime, 1.0 / eps0);
    case TStarRule::Squared: {
      const double m = std::max(Cprime, 1.0 / eps0);
      return m * m;
    }
    case TStarRule::Unit: return 1.0;
  }
  return 1.0;
}

struct RecurrenceParams {
  int n = 1;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double C = 1.0;
  double Cprime = 2.0;
  double K = 1.0;
  double t_star = 1.0;
  double eps0 = 0.0;
  /// E_0^{2-gamma} <= t_star^{-gamma}
  bool smallness = false;

  /// Fills beta, gamma, K = C' / t_star^gamma and the smallness flag.
  static RecurrenceParams make(int n, double alpha, double C, double Cprime, double t_star, double eps0) {
    if (!(C > 0.0)) throw DomainError("recurrence: C must be > 0");
    if (!(Cprime > 0.0)) throw DomainError("recurrence: C' must be > 0");
    if (!(t_star > 0.0)) throw DomainError("recurrence: t_star must be > 0");
    if (!(eps0 >= 0.0)) throw DomainError("recurrence: E_0 must be >= 0");
    const auto ex = exponents(n, alpha);
    RecurrenceParams p{n, alpha, ex.beta, ex.gamma, C, Cprime, 0.0, t_star, eps0, false};
    p.K = Cprime / std::pow(t_star, ex.gamma);
    p.smallness = (2.0 - ex.gamma) * std::log(eps0) <= -ex.gamma * std::log(t_star);
    return p;
  }
};

struct RecurrenceResult {
  /// Natural logarithms of E_0 .. E_{k_max}; -inf encodes E = 0.
  std::vector<long double> log_e;
  bool diverged = false;
  /// First k with E_k beyond the double range (valid when diverged).
  int diverged_at = -1;

  /// Values in double precision (underflow to 0, overflow to inf).
  std::vector<double> values() const {
    std::vector<double> out;
    for (long double l : log_e) out.push_back(static_cast<double>(std::exp(l)));
    return out;
  }
  /// Converged: no divergence and E_{k_max} at least e^{50} below E_0.
  bool converged() const {
    if (diverged || log_e.empty()) return false;
    return log_e.back() == -INFINITY || log_e.back() < log_e.front() - 50.0L;
  }
};

namespace detail {
inline long double logaddexp(long double a, long double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const long double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}
}  // namespace detail

/// Worst case of E_{k+1} <= C 2^{(k+1)(1+gamma)} / (K t_star^gamma) E_k^beta
/// + 2^{k+1} / K E_k^2, evaluated in long-double log space.
inline RecurrenceResult iterate_recurrence(const RecurrenceParams& p, double E0, int k_max) {
  RecurrenceResult r;
  const long double ln2 = std::log(2.0L);
  const long double log_limit = std::log(static_cast<long double>(std::numeric_limits<double>::max()));
  const long double log_a0 = std::log(static_cast<long double>(p.C)) - std::log(static_cast<long double>(p.K)) -
                             p.gamma * std::log(static_cast<long double>(p.t_star));
  const long double log_b0 = -std::log(static_cast<long double>(p.K));
  long double le = E0 > 0.0 ? std::log(static_cast<long double>(E0)) : -INFINITY;
  r.log_e.push_back(le);
  for (int k = 0; k < k_max; ++k) {
    if (le == -INFINITY) {
      r.log_e.push_back(le);
      continue;
    }
    const long double power = log_a0 + (k + 1) * (1.0L + p.gamma) * ln2 + p.beta * le;
    const long double square = log_b0 + (k + 1) * ln2 + 2.0L * le;
    le = detail::logaddexp(power, square);
    r.log_e.push_back(le);
    if (le > log_limit) {
      r.diverged = true;
      r.diverged_at = k + 1;
      break;
    }
  }
  return r;
}

/// Constant in the bound sum_{j=1}^{k+1} j b^{k+1-j} <= c b^{k+1}.
enum class SumBound {
  /// c = 1 / (b - 1)^2 as displayed in the induction argument; too small by a
  /// factor b once k is large.
  Displayed,
  /// c = b / (b - 1)^2, the limit of the sum.
  Sharp,
};

/// Natural log of the induction bound for E_{k+1}:
/// Ct^{(b^{k+1}-1)/(b-1)} 2^{(1+gamma) c b^{k+1}} E_0^{b^{k+1}}, Ct = C / C'.
inline long double log_closed_form_bound(const RecurrenceParams& p, double E0, int k,
                                         SumBound sum = SumBound::Displayed) {
  if (!(p.beta > 1.0)) throw DomainError("closed_form_bound: beta must be > 1");
  const long double b = p.beta;
  const long double bk = std::pow(b, static_cast<long double>(k + 1));
  const long double c = (sum == SumBound::Sharp ? b : 1.0L) / ((b - 1.0L) * (b - 1.0L));
  const long double log_ct = std::log(static_cast<long double>(p.C) / p.Cprime);
  const long double log_e0 = E0 > 0.0 ? std::log(static_cast<long double>(E0)) : -INFINITY;
  return (bk - 1.0L) / (b - 1.0L) * log_ct + (1.0L + p.gamma) * c * bk * std::log(2.0L) + bk * log_e0;
}

inline double closed_form_bound(const RecurrenceParams& p, double E0, int k, SumBound sum = SumBound::Displayed) {
  return static_cast<double>(std::exp(log_closed_form_bound(p, E0, k, sum)));
}

// ---------------------------------------------------------------------------
// Decay exponent and smallness threshold

enum class DecayConstant {
  /// C'' = max(Ct^{1/(b-1)} 2^{(1+gamma)/(b-1)^2}, 1) + 1
  AsSpecified,
  /// C'' = max(Ch^{1/(b-1)}, 1) 2^{(1+gamma) b/(b-1)^2} + 1 with
  /// Ch = Ct (1 + (t_star eps)^gamma / C). Uses the sharp sum bound and absorbs
  /// the E^2 term, whose ratio to the power term is at most (t_star eps)^gamma / C
  /// while E_k <= eps (beta + gamma = 2).
  Corrected,
};

inline double c_double_prime(double beta, double gamma, double C, double Cprime,
                             DecayConstant form = DecayConstant::Corrected, double t_star_eps = 1.0) {
  const double ct = C / Cprime;
  if (form == DecayConstant::AsSpecified)
    return std::max(std::pow(ct, 1.0 / (beta - 1.0)) * std::pow(2.0, (1.0 + gamma) / ((beta - 1.0) * (beta - 1.0))),
                    1.0) +
           1.0;
  const double ch = ct * (1.0 + std::pow(t_star_eps, gamma) / C);
  return std::max(std::pow(ch, 1.0 / (beta - 1.0)), 1.0) *
             std::pow(2.0, (1.0 + gamma) * beta / ((beta - 1.0) * (beta - 1.0))) +
         1.0;
}

/// Smallest eta with C'' <= eps^{-eta}. Any eta in [eta_min, 1 - 1/beta)
/// yields (1 - eta) beta > 1; the upper end is open, so the admissible
/// choice reported is the smallest one. NaN when eps >= 1.
inline double decay_exponent(double eps, double c_pp) {
  if (!(eps > 0.0 && eps < 1.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(c_pp) / std::log(1.0 / eps);
}

struct Threshold {
  /// Largest E_0 found for which the predicate holds.
  double eps = 0.0;
  double eta = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
};

/// Bisection in log E_0 for the largest eps in [1e-300, 1) satisfying
/// eta_min(eps) < 1 - 1/beta and the smallness condition under the t_star rule.
inline Threshold smallness_threshold(int n, double alpha, double C, double Cprime,
                                     TStarRule rule = TStarRule::Linear,
                                     DecayConstant form = DecayConstant::Corrected) {
  const auto ex = exponents(n, alpha);
  auto eta_at = [&](double eps) {
    const double ts = t_star_for(rule, eps, Cprime);
    return decay_exponent(eps, c_double_prime(ex.beta, ex.gamma, C, Cprime, form, ts * eps));
  };
  auto ok = [&](double eps) {
    if (!(eta_at(eps) < 1.0 - 1.0 / ex.beta)) return false;
    const double ts = t_star_for(rule, eps, Cprime);
    return (2.0 - ex.gamma) * std::log(eps) <= -ex.gamma * std::log(ts);
  };
  double lo = std::log(1e-300);
  double hi = 0.0;
  Threshold th;
  if (!ok(std::exp(lo))) return th;
  while (hi - lo > 1e-12 * std::max(1.0, std::abs(lo)) && th.iterations < 200) {
    const double mid = 0.5 * (lo + hi);
    (ok(std::exp(mid)) ? lo : hi) = mid;
    ++th.iterations;
  }
  th.eps = std::exp(lo);
  th.eta = eta_at(th.eps);
  return th;
}

/// Checks E_k <= eps^{(1 - eta) beta^k} along the recurrence, k = 0..k_max.
struct DecayCheck {
  bool holds = true;
  int first_violation = -1;
  /// max over k of log E_k - (1 - eta) beta^k log eps (<= 0 when holding)
  long double worst_log_gap = -INFINITY;
};

inline DecayCheck check_decay(const RecurrenceResult& r, double eps, double eta, double beta) {
  DecayCheck c;
  const long double log_eps = std::log(static_cast<long double>(eps));
  for (std::size_t k = 0; k < r.log_e.size(); ++k) {
    const long double target =
        (1.0L - eta) * std::pow(static_cast<long double>(beta), static_cast<long double>(k)) * log_eps;
    const long double gap = r.log_e[k] - target;
    c.worst_log_gap = std::max(c.worst_log_gap, gap);
    if (gap > 0.0L && c.holds) {
      c.holds = false;
      c.first_violation = static_cast<int>(k);
    }
  }
  if (r.diverged) c.holds = false;
  return c;
}

// ---------------------------------------------------------------------------
// Certificate

struct Certificate {
  bool holds = false;
  TStarRule rule = TStarRule::Linear;
  double beta = 0.0;
  double gamma = 0.0;
  double Cprime = 0.0;
  double t_star = 0.0;
  double K = 0.0;
  /// C' / t_star^gamma
  double predicted_sup_bound = 0.0;
  /// linf0 - C' / t_star^gamma
  double contradiction_margin = 0.0;
  bool smallness = false;
  bool recurrence_converged = false;
  int diverged_at = -1;
  double eta = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> notes;
};

inline Certificate certify(double eps0, double linf0, int n, double alpha, double C, double Cprime,
                           TStarRule rule = TStarRule::Linear, int k_max = 60) {
  if (!(eps0 > 0.0)) throw DomainError("certify: eps0 must be > 0");
  if (!(linf0 > 0.0)) throw DomainError("certify: linf0 must be > 0");
  if (!(C > 0.0)) throw DomainError("certify: C must be > 0");
  Certificate cert;
  cert.rule = rule;
  if (rule == TStarRule::Unit) {
    Cprime = 0.5 * linf0;
    cert.notes.push_back("unit rule: t_star = 1, C' = linf0 / 2; precondition relaxed to C' > 0");
  } else if (!(Cprime > 1.0)) {
    throw DomainError("certify: C' must be > 1");
  }
  cert.Cprime = Cprime;
  cert.t_star = t_star_for(rule, eps0, Cprime);
  const auto p = RecurrenceParams::make(n, alpha, C, Cprime, cert.t_star, eps0);
  cert.beta = p.beta;
  cert.gamma = p.gamma;
  cert.K = p.K;
  cert.predicted_sup_bound = p.K;
  cert.contradiction_margin = linf0 - p.K;
  cert.smallness = p.smallness;
  cert.eta = decay_exponent(eps0, c_double_prime(p.beta, p.gamma, C, Cprime, DecayConstant::Corrected,
                                                 cert.t_star * eps0));
  const auto r = iterate_recurrence(p, eps0, k_max);
  cert.recurrence_converged = r.converged();
  cert.diverged_at = r.diverged_at;
  if (!cert.smallness) cert.notes.push_back("smallness E_0^{2-gamma} <= t_star^{-gamma} fails");
  if (cert.contradiction_margin <= 0.0) cert.notes.push_back("predicted sup bound does not undercut linf0");
  if (!cert.recurrence_converged)
    cert.notes.push_back(r.diverged ? "recurrence diverges at k = " + std::to_string(r.diverged_at)
                                    : "recurrence does not decay within k_max");
  cert.holds = cert.smallness && cert.contradiction_margin > 0.0 && cert.recurrence_converged;
  return cert;
}

}  // namespace asq
