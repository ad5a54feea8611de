#pragma once

// Named verification suites driven by `asq verify`.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "asq/ineq_lab.hpp"

namespace asq {

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"interp", "interp-torus", "cc-pointwise", "weyl",
                                              "hormander", "riccati", "all"};
  return names;
}

/// A report passes when it has no post-fit violations and, if it carries a
/// fresh-seed revalidation, that revalidation passes too.
inline bool report_passed(const InequalityReport& r) {
  return r.violations == 0 && (!r.revalidation || r.revalidation->passed());
}

struct RiccatiStudy {
  std::vector<int> resolutions;
  std::vector<RiccatiFit> fits;
  double window_end = 0.0;
  double spread = 0.0;  // max C / min C - 1
  InequalityReport report;
};

namespace detail {

inline SampleSpec suite_spec(ManifoldKind kind, int band, std::uint64_t seed, long trials) {
  SampleSpec s;
  s.manifold = ManifoldSpec::for_band(kind, band);
  s.n_trials = trials;
  s.seed = seed;
  s.band_limit = band;
  s.amplitude_law = AmplitudeLaw::power_decay(1.0);
  return s;
}

inline std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Fresh seed for revalidation: a fixed odd offset keeps it distinct from
/// every seed a caller is likely to pass.
inline std::uint64_t fresh_seed(std::uint64_t seed) { return seed + 0x9E3779B97F4A7C15ull; }

inline RunOutput ccf_run(int n, double t_end, std::optional<double> eps_mollify = {}) {
  EvolutionConfig cfg;
  cfg.eps_mollify = eps_mollify;
  cfg.alpha = 0.0;
  cfg.kappa = 0.0;
  cfg.t_end = t_end;
  cfg.dt_init = 5e-3;
  cfg.snapshot_every = 0;
  cfg.blowup.grad_sup_max = INFINITY;
  cfg.blowup.tail_fraction_max = INFINITY;
  return run(sample(ManifoldSpec::torus1d(n), [](double x, double) { return 1.0 + 0.5 * std::cos(x); }), cfg);
}

/// First time the H^s norm reaches `factor` times its initial value.
inline double growth_time(std::span<const DiagnosticsRecord> d, double factor) {
  const double target = factor * d.front().hs_norm;
  for (std::size_t i = 1; i < d.size(); ++i)
    if (d[i].hs_norm >= target) {
      const double w = (target - d[i - 1].hs_norm) / (d[i].hs_norm - d[i - 1].hs_norm);
      return d[i - 1].t + w * (d[i].t - d[i - 1].t);
    }
  return d.back().t;
}

}  // namespace detail

/// CCF on T^1 (theta_0 = 1 + cos(x) / 2, alpha = 0) at two resolutions with
/// the coarse grid's mollifier. The
/// window ends where the coarse run's H^s norm has doubled, well before the
/// steepening outruns either grid. Ratios: |C_a / C_b - 1| / 0.2 and, per
/// resolution, 0 if the bound holds on the certified interval (inf if not).
inline RiccatiStudy riccati_study(std::vector<int> resolutions = {128, 256}, double growth = 2.0) {
  RiccatiStudy st;
  st.resolutions = resolutions;
  std::vector<RunOutput> runs;
  // One mollifier for every grid: the bound concerns a fixed J_eps equation,
  // and the default width shrinks with the band.
  const double eps = EvolutionConfig{}.mollifier(ManifoldSpec::torus1d(resolutions.front()).band_limit());
  for (int n : resolutions) runs.push_back(detail::ccf_run(n, 3.0, eps));
  st.window_end = detail::growth_time(runs.front().diagnostics, growth);
  double cmin = INFINITY, cmax = 0.0;
  std::vector<double> ratios;
  for (const auto& r : runs) {
    st.fits.push_back(check_riccati_bound(r.diagnostics, *r.cfg.hs_order, 1, st.window_end));
    const auto& f = st.fits.back();
    cmin = std::min(cmin, f.C);
    cmax = std::max(cmax, f.C);
    ratios.push_back(riccati_bound_holds(r.diagnostics, f.C, f.certified_end) ? 0.0 : INFINITY);
  }
  st.spread = cmin > 0.0 ? cmax / cmin - 1.0 : INFINITY;
  ratios.insert(ratios.begin(), st.spread / 0.2);
  st.report = fixed_constant_report("riccati/torus1d", std::move(ratios), 1.0);
  st.report.parameters = {{"window_end", st.window_end}, {"spread", st.spread}, {"growth", growth}, {"eps_mollify", eps}};
  for (std::size_t i = 0; i < resolutions.size(); ++i)
    st.report.parameters["C_N" + std::to_string(resolutions[i])] = st.fits[i].C;
  return st;
}

struct SuiteOutput {
  std::vector<InequalityReport> reports;
  std::vector<HormanderTable> hormander;
  std::vector<WeylSweep> weyl;
  std::vector<RiccatiStudy> riccati;

  bool passed() const {
    for (const auto& r : reports)
      if (!report_passed(r)) return false;
    return true;
  }
};

/// Runs one named suite. `trials` applies to the sampled suites (interp,
/// interp-torus, cc-pointwise); the lattice and dynamics suites are
/// deterministic. Reports are appended to `out` as each check finishes, and
/// `progress` (if set) is called with each new report.
inline void run_suite(const std::string& name, std::uint64_t seed, long trials, SuiteOutput& out,
                      const std::function<void(const InequalityReport&)>& progress = {}) {
  if (trials < 1) throw DomainError("run_suite: trials must be >= 1");
  auto add = [&](InequalityReport r) {
    out.reports.push_back(std::move(r));
    if (progress) progress(out.reports.back());
  };
  const ManifoldKind kinds[] = {ManifoldKind::Torus1D, ManifoldKind::Torus2D, ManifoldKind::Sphere2D};
  auto interp = [&](InterpolationVariant v) {
    for (auto kind : kinds) {
      if (v == InterpolationVariant::Torus && !is_torus(kind)) continue;
      const auto spec = detail::suite_spec(kind, kind == ManifoldKind::Torus1D ? 32 : 16, seed, trials);
      for (double alpha : {-0.5, 0.0, 0.5}) {
        auto rep = fit_interpolation_constant(spec, alpha, v);
        rep.revalidation = revalidate_interpolation(rep, spec, alpha, v, detail::fresh_seed(seed));
        rep.name += "/alpha=" + detail::label(alpha);
        add(std::move(rep));
      }
    }
  };

  if (name == "interp") {
    interp(InterpolationVariant::Manifold);
  } else if (name == "interp-torus") {
    interp(InterpolationVariant::Torus);
  } else if (name == "cc-pointwise") {
    for (auto kind : kinds)
      for (auto ck : {ConvexKind::Relu, ConvexKind::Square, ConvexKind::Exp})
        for (double s : {0.5, 1.0, 2.0}) {
          auto rep = check_pointwise_suite(detail::suite_spec(kind, 8, seed, trials), ck, s);
          rep.name += "/s=" + detail::label(s);
          add(std::move(rep));
        }
  } else if (name == "weyl") {
    const auto radii = dyadic_radii(1, 10);
    for (auto kind : kinds) {
      out.weyl.push_back(weyl_sweep(ManifoldSpec::make(kind, 8), radii));
      add(weyl_report(out.weyl.back()));
    }
  } else if (name == "hormander") {
    for (auto kind : kinds) {
      out.hormander.push_back(check_hormander(ManifoldSpec::make(kind, 8), 500, seed));
      add(hormander_report(out.hormander.back()));
    }
  } else if (name == "riccati") {
    out.riccati.push_back(riccati_study());
    add(out.riccati.back().report);
  } else if (name == "all") {
    for (const auto& s : suite_names())
      if (s != "all") run_suite(s, seed, trials, out, progress);
  } else {
    throw DomainError("unknown suite '" + name + "'");
  }
}

}  // namespace asq
