#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "asq/degiorgi.hpp"
#include "test_helpers.hpp"

using namespace asq;
using testutil::random_field;

namespace {

constexpr double pi = std::numbers::pi;
using mp = boost::multiprecision::cpp_bin_float_50;

/// Direct evaluation of the recurrence in 50-digit arithmetic (no logs).
std::vector<mp> mp_recurrence(const RecurrenceParams& p, double E0, int k_max) {
  std::vector<mp> e{mp(E0)};
  const mp K(p.K), C(p.C), ts(p.t_star);
  for (int k = 0; k < k_max; ++k) {
    const mp& x = e.back();
    const mp two_k = boost::multiprecision::pow(mp(2), k + 1);
    const mp a = C * boost::multiprecision::pow(two_k, mp(1) + mp(p.gamma)) / (K * boost::multiprecision::pow(ts, mp(p.gamma)));
    e.push_back(a * boost::multiprecision::pow(x, mp(p.beta)) + two_k / K * x * x);
  }
  return e;
}

SimulationState constant_state(double t, double c, int band) {
  auto f = SpectralField::zeros(ManifoldKind::Torus1D, band);
  f.set_coeff(0, 0, c);
  return {t, f, 0};
}

RunOutput ccf_run(int n, double t_end, double dt) {
  EvolutionConfig cfg;
  cfg.t_end = t_end;
  cfg.dt_init = dt;
  cfg.snapshot_every = 1;
  return run(sample(ManifoldSpec::torus1d(n), [](double x, double) { return 1.0 + 0.5 * std::cos(x); }), cfg);
}

}  // namespace

// ---- exponents ----------------------------------------------------------------

TEST(Exponents, ClosedValues) {
  const auto a = exponents(2, 0.0);
  EXPECT_DOUBLE_EQ(a.beta, 1.25);
  EXPECT_DOUBLE_EQ(a.gamma, 0.75);
  const auto b = exponents(1, 0.0);
  EXPECT_DOUBLE_EQ(b.beta, 1.5);
  EXPECT_DOUBLE_EQ(b.gamma, 0.5);
}

TEST(Exponents, BetaAboveOneAndGammaInRange) {
  for (int n = 1; n <= 6; ++n)
    for (double alpha = -0.99; alpha < 1.0; alpha += 0.03) {
      const auto e = exponents(n, alpha);
      EXPECT_GT(e.beta, 1.0);
      EXPECT_GT(e.gamma, 0.0);
      EXPECT_LT(e.gamma, 2.0);
      EXPECT_NEAR(e.beta, 2.0 - e.gamma, 1e-15);
    }
}

TEST(Exponents, RejectsBadInput) {
  EXPECT_THROW(exponents(0, 0.0), DomainError);
  EXPECT_THROW(exponents(1, 1.0), DomainError);
}

// ---- ladder and truncation -------------------------------------------------------

TEST(TruncationLadder, Levels) {
  const TruncationLadder l(1.5, 10);
  const auto v = l.levels();
  EXPECT_EQ(v.front(), 0.0);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GT(v[i], v[i - 1]);
  EXPECT_NEAR(l.level(60), 1.5, 1e-15);
  EXPECT_THROW(TruncationLadder(0.0, 3), DomainError);
}

TEST(Truncate, ConstantAboveLevel) {
  const auto f = truncate(sample(ManifoldSpec::torus1d(16), [](double, double) { return 1.0; }), 0.5);
  for (double v : f.values) EXPECT_EQ(v, 0.5);
}

TEST(Truncate, LevelZeroIsPositivePart) {
  const auto grid = ManifoldSpec::torus1d(32);
  const auto pos = sample(grid, [](double x, double) { return 2.0 + std::sin(x); });
  EXPECT_EQ(truncate(pos, 0.0).values, pos.values);
  const auto mixed = truncate(sample(grid, [](double x, double) { return std::sin(x); }), 0.0);
  for (double v : mixed.values) EXPECT_GE(v, 0.0);
}

TEST(Truncate, EnergyOfShiftedCosine) {
  // integral of (cos x)^+ over the circle is 2.
  const auto grid = ManifoldSpec::torus1d(4096);
  const auto theta = analyze(sample(grid, [](double x, double) { return 1.0 + std::cos(x); }));
  EXPECT_NEAR(integrate(truncate(theta, 1.0)), 2.0, 1e-6);
}

TEST(Truncate, LevelSetRelationsHoldExactly) {
  for (auto kind : {ManifoldKind::Torus1D, ManifoldKind::Torus2D, ManifoldKind::Sphere2D}) {
    for (int t = 0; t < 5; ++t) {
      const auto theta = synthesize(random_field(kind, 12, 60 + t));
      const TruncationLadder ladder(theta.max(), 12);
      const auto c = check_level_sets(theta, ladder);
      EXPECT_EQ(c.monotone_violations, 0);
      EXPECT_EQ(c.indicator_violations, 0);
    }
  }
}

// ---- measured ladder ------------------------------------------------------------

TEST(MeasureLadder, ConstantRun) {
  const double c = 0.6, K = 2.0, t_star = 1.0;
  std::vector<SimulationState> snaps;
  for (int i = 0; i <= 400; ++i) snaps.push_back(constant_state(i / 400.0, c, 15));
  const auto series = measure_ladder(snaps, 0.0, K, t_star, 5);
  ASSERT_EQ(series.entries.size(), 6u);
  const TruncationLadder ladder(K, 5);
  for (const auto& e : series.entries) {
    EXPECT_NEAR(e.E_k, std::max(0.0, c - ladder.level(e.k)) * 2 * pi, 1e-12);
    EXPECT_NEAR(e.D_k, 0.0, 1e-20);
    const auto [lo, hi] = ladder_window(t_star, e.k);
    EXPECT_GT(e.t_next, lo);
    EXPECT_LT(e.t_next, hi);
  }
}

TEST(MeasureLadder, SingleLevel) {
  std::vector<SimulationState> snaps{constant_state(0.0, 0.3, 7), constant_state(0.2, 0.3, 7)};
  const auto series = measure_ladder(snaps, 0.0, 1.0, 1.0, 0);
  ASSERT_EQ(series.entries.size(), 1u);
  EXPECT_NEAR(series.entries[0].E_k, 0.3 * 2 * pi, 1e-13);
}

TEST(MeasureLadder, EmptyWindowIsResolutionError) {
  std::vector<SimulationState> snaps{constant_state(0.0, 0.3, 7), constant_state(0.2, 0.3, 7),
                                     constant_state(0.6, 0.3, 7)};
  try {
    (void)measure_ladder(snaps, 0.0, 1.0, 1.0, 2);
    FAIL() << "expected ResolutionError";
  } catch (const ResolutionError& e) {
    EXPECT_NE(std::string(e.what()).find("k = 2"), std::string::npos);
  }
}

TEST(MeasureLadder, DissipationBoundOnRecordedRun) {
  const auto out = ccf_run(256, 2.1, 0.0015);
  const auto series = measure_ladder(out.snapshots, 0.0, 1.5, 2.0, 6);
  for (const auto& e : series.entries) {
    EXPECT_GE(e.window_snapshots, 8) << "k = " << e.k;
    EXPECT_LE(e.D_k, 1.05 * e.dissipation_bound) << "k = " << e.k;
  }
}

// ---- virial residuals -----------------------------------------------------------

TEST(CheckVirial, ZeroLevelIsAnIdentity) {
  const auto out = ccf_run(512, 1.0, 0.005);
  const auto rep = check_virial(out.snapshots, TruncationLadder(1.5, 4), 0.0);
  EXPECT_LE(rep.levels[0].max_abs_residual, 1e-3 * rep.reference);
  EXPECT_TRUE(rep.passed);
  for (const auto& lv : rep.levels) EXPECT_LE(lv.max_increase, 1e-8) << "k = " << lv.k;
}

TEST(CheckVirial, ConstantStateHasZeroResiduals) {
  std::vector<SimulationState> snaps;
  for (int i = 0; i < 5; ++i) snaps.push_back(constant_state(0.1 * i, 1.0, 7));
  const auto rep = check_virial(snaps, TruncationLadder(2.0, 3), 0.0);
  for (const auto& lv : rep.levels) EXPECT_EQ(lv.max_abs_residual, 0.0);
}

// ---- recurrence -----------------------------------------------------------------

TEST(Recurrence, ZeroStaysZero) {
  const auto p = RecurrenceParams::make(1, 0.0, 2.0, 2.0, 16.0, 0.0);
  const auto r = iterate_recurrence(p, 0.0, 20);
  for (double v : r.values()) EXPECT_EQ(v, 0.0);
}

TEST(Recurrence, MatchesHighPrecisionOracle) {
  const auto p = RecurrenceParams::make(1, 0.0, 2.0, 2.0, 16.0, 1e-4);
  EXPECT_DOUBLE_EQ(p.K, 0.5);
  const auto r = iterate_recurrence(p, 1e-4, 40);
  const auto oracle = mp_recurrence(p, 1e-4, 40);
  for (int k = 0; k <= 40; ++k) {
    const double lo = static_cast<double>(boost::multiprecision::log(oracle[k]));
    EXPECT_NEAR(static_cast<double>(r.log_e[k]), lo, 1e-12 * std::max(1.0, std::abs(lo))) << "k = " << k;
    if (k > 0) {
      EXPECT_LT(r.log_e[k], r.log_e[k - 1]);
    }
  }
  EXPECT_LT(r.values()[40], 1e-30);
  EXPECT_TRUE(r.converged());
}

TEST(Recurrence, LargeInitialEnergyDiverges) {
  const auto p = RecurrenceParams::make(1, 0.0, 2.0, 2.0, 16.0, 10.0);
  EXPECT_FALSE(p.smallness);
  const auto r = iterate_recurrence(p, 10.0, 60);
  EXPECT_TRUE(r.diverged);
  EXPECT_GT(r.diverged_at, 0);
  EXPECT_FALSE(r.converged());
}

TEST(ClosedFormBound, FirstStepDominatesPowerTerm) {
  const auto p = RecurrenceParams::make(2, 0.3, 1.5, 3.0, 100.0, 1e-3);
  const double power_term = p.C * std::pow(2.0, 1.0 + p.gamma) / (p.K * std::pow(p.t_star, p.gamma)) *
                            std::pow(1e-3, p.beta);
  EXPECT_GE(closed_form_bound(p, 1e-3, 0), power_term);
}

TEST(ClosedFormBound, UnitEnergyHasNoDecay) {
  const auto p = RecurrenceParams::make(1, -0.5, 3.0, 2.0, 10.0, 1.0);
  for (int k : {0, 3, 7}) {
    const double bk = std::pow(p.beta, k + 1);
    const double expected = (bk - 1) / (p.beta - 1) * std::log(1.5) +
                            (1 + p.gamma) * bk / ((p.beta - 1) * (p.beta - 1)) * std::log(2.0);
    EXPECT_NEAR(static_cast<double>(log_closed_form_bound(p, 1.0, k)), expected, 1e-12 * expected);
  }
}

TEST(ClosedFormBound, SharpFormDominatesIterateWhileSquareTermIsSubordinate) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int draw = 0; draw < 200; ++draw) {
    const int n = 1 + static_cast<int>(u(rng) * 3);
    const double alpha = -0.9 + 1.8 * u(rng);
    const double C = 0.5 + 3.5 * u(rng);
    const double Cp = 1.01 + 3.0 * u(rng);
    const double ts = std::pow(10.0, 4.0 * u(rng));
    const auto ex = exponents(n, alpha);
    const double cap = std::pow(ts, -ex.gamma / (2.0 - ex.gamma));
    const double E0 = cap * std::pow(10.0, -12.0 * u(rng));
    const auto p = RecurrenceParams::make(n, alpha, C, Cp, ts, E0);
    ASSERT_TRUE(p.smallness);
    const auto r = iterate_recurrence(p, E0, 61);
    for (int k = 0; k <= 60; ++k) {
      const long double le = r.log_e[k];
      if (le > std::log(static_cast<long double>(cap))) break;  // induction hypothesis left
      // log(square term / power term) at this step
      const long double ratio = (k + 1) * std::log(2.0L) + p.gamma * std::log(static_cast<long double>(ts)) -
                                std::log(static_cast<long double>(C)) - (k + 1) * (1.0L + p.gamma) * std::log(2.0L) +
                                (2.0L - p.beta) * le;
      if (ratio > 0.0L) break;
      const long double lhs = r.log_e[k + 1];
      // square <= power on this path, so Ct may be replaced by 2 Ct
      const long double bk = std::pow(static_cast<long double>(p.beta), k + 1);
      const long double rhs = log_closed_form_bound(p, E0, k, SumBound::Sharp) +
                              (bk - 1.0L) / (p.beta - 1.0L) * std::log(2.0L) + std::log1p(1e-9L);
      EXPECT_LE(lhs, rhs) << "draw " << draw << " k " << k;
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(ClosedFormBound, DisplayedSumConstantIsTooSmall) {
  // sum_{j=1}^{k+1} j b^{k+1-j} / b^{k+1} tends to b / (b-1)^2, above 1 / (b-1)^2.
  const double b = 1.25;
  double sum = 0.0;
  const int k = 80;
  for (int j = 1; j <= k + 1; ++j) sum += j * std::pow(b, k + 1 - j);
  EXPECT_GT(sum / std::pow(b, k + 1), 1.0 / ((b - 1) * (b - 1)));
  EXPECT_LT(sum / std::pow(b, k + 1), b / ((b - 1) * (b - 1)));
  // Consequence: with the E^2 term switched off (huge K), the power
  // recurrence overtakes the displayed bound but not the sharp one.
  auto p = RecurrenceParams::make(2, 0.0, 2.0, 2.0, 1.0, 1e-40);
  // K = C' = C = 1e300 with t_star = 1: power coefficient C / C' = 1, square coefficient 1e-300
  p.K = p.Cprime = p.C = 1e300;
  const auto r = iterate_recurrence(p, 1e-40, 60);
  EXPECT_GT(r.log_e[41], log_closed_form_bound(p, 1e-40, 40, SumBound::Displayed));
  EXPECT_LE(r.log_e[41], log_closed_form_bound(p, 1e-40, 40, SumBound::Sharp));
}

TEST(ClosedFormBound, InductionHypothesisAloneDoesNotTameSquareTerm) {
  // At E_k equal to the hypothesis cap the square term outweighs the power
  // term by t_star^{gamma (2 - 2 gamma) / (2 - gamma)} / (C 2^{(k+1) gamma}).
  const auto ex = exponents(2, 0.0);
  const double ts = 1e6, C = 2.0;
  const double cap = std::pow(ts, -ex.gamma / (2.0 - ex.gamma));
  const double square_over_power = std::pow(ts, ex.gamma) * std::pow(cap, ex.gamma) / (C * std::pow(2.0, ex.gamma));
  EXPECT_GT(square_over_power, 1.0);
}

// ---- threshold and decay ---------------------------------------------------------

TEST(SmallnessThreshold, AgreesWithClosedForm) {
  for (int n : {1, 2})
    for (double alpha : {-0.5, 0.0, 0.5}) {
      const auto ex = exponents(n, alpha);
      const auto th = smallness_threshold(n, alpha, 2.0, 2.0);
      const double cpp = c_double_prime(ex.beta, ex.gamma, 2.0, 2.0);
      const double expected = std::log(cpp) * ex.beta / (ex.beta - 1.0);  // -log eps at eta = 1 - 1/beta
      EXPECT_NEAR(-std::log(th.eps), expected, 1e-9 * expected);
      EXPECT_LT(th.eta, 1.0 - 1.0 / ex.beta);
      EXPECT_GT((1.0 - th.eta) * ex.beta, 1.0);
    }
}

TEST(SmallnessThreshold, DecayBoundHoldsToSixtyLevels) {
  for (int n : {1, 2})
    for (double alpha : {-0.5, 0.0, 0.5}) {
      const auto th = smallness_threshold(n, alpha, 2.0, 2.0);
      const double ts = t_star_for(TStarRule::Linear, th.eps, 2.0);
      const auto p = RecurrenceParams::make(n, alpha, 2.0, 2.0, ts, th.eps);
      ASSERT_TRUE(p.smallness);
      const auto r = iterate_recurrence(p, th.eps, 60);
      const auto c = check_decay(r, th.eps, th.eta, p.beta);
      EXPECT_TRUE(c.holds) << "n " << n << " alpha " << alpha << " first violation " << c.first_violation;
    }
}

TEST(SmallnessThreshold, SpecifiedConstantIsNotEnough) {
  // With C'' built from the displayed sum bound and without the E^2 term the
  // bisected threshold is too large: the recurrence breaks the decay bound.
  const auto th = smallness_threshold(2, 0.0, 2.0, 2.0, TStarRule::Linear, DecayConstant::AsSpecified);
  const auto p = RecurrenceParams::make(2, 0.0, 2.0, 2.0, t_star_for(TStarRule::Linear, th.eps, 2.0), th.eps);
  const auto c = check_decay(iterate_recurrence(p, th.eps, 60), th.eps, th.eta, p.beta);
  EXPECT_FALSE(c.holds);
}

TEST(DecayExponent, SmallerForSmallerEps) {
  const double cpp = c_double_prime(1.5, 0.5, 2, 2);
  EXPECT_LT(decay_exponent(1e-20, cpp), decay_exponent(1e-10, cpp));
  EXPECT_TRUE(std::isnan(decay_exponent(1.0, cpp)));
}

// ---- certificate ---------------------------------------------------------------------

TEST(Certify, SmallEnergyHolds) {
  const auto c = certify(1e-8, 1.0, 1, 0.0, 2.0, 2.0);
  EXPECT_TRUE(c.holds);
  EXPECT_DOUBLE_EQ(c.t_star, 1e8);
  EXPECT_NEAR(c.K, 2.0 / std::pow(1e8, 0.5), 1e-18);
  EXPECT_GT(c.contradiction_margin, 0.99);
  const auto d = certify(1e-12, 1.0, 2, 0.0, 2.0, 2.0);
  EXPECT_TRUE(d.holds);
  EXPECT_GT(d.contradiction_margin, 0.99);
}

TEST(Certify, PlanarCaseNeedsSmallerEnergyThanOneEMinusEight) {
  // n = 2, alpha = 0, C = C' = 2: the power term alone, Ct 2^{1.75 (k+1)} E^{1.25},
  // already grows from E_0 = 1e-8.
  const auto c = certify(1e-8, 1.0, 2, 0.0, 2.0, 2.0);
  EXPECT_TRUE(c.smallness);
  EXPECT_GT(c.contradiction_margin, 0.0);
  EXPECT_FALSE(c.recurrence_converged);
  EXPECT_FALSE(c.holds);
}

TEST(Certify, LargeEnergyFails) {
  const auto c = certify(10.0, 1.0, 2, 0.0, 2.0, 2.0);
  EXPECT_FALSE(c.holds);
  EXPECT_FALSE(c.smallness);
}

TEST(Certify, NoContradictionWhenBoundExceedsSup) {
  const auto c = certify(1e-8, 1e-7, 2, 0.0, 2.0, 2.0);
  EXPECT_LE(c.contradiction_margin, 0.0);
  EXPECT_FALSE(c.holds);
}

TEST(Certify, RejectsCprimeAtMostOne) {
  EXPECT_THROW(certify(1e-8, 1.0, 2, 0.0, 2.0, 1.0), DomainError);
  EXPECT_THROW(certify(0.0, 1.0, 2, 0.0, 2.0, 2.0), DomainError);
}

TEST(Certify, SquaredRuleViolatesSmallnessForLargeGamma) {
  // gamma = 3/4 > 2/3: eps^{2-gamma} <= eps^{2 gamma} fails for every eps < 1.
  const auto c = certify(1e-8, 1.0, 2, 0.0, 2.0, 2.0, TStarRule::Squared);
  EXPECT_FALSE(c.smallness);
  EXPECT_FALSE(c.holds);
}

TEST(Certify, UnitRuleUsesHalfSup) {
  const auto c = certify(1e-12, 1.0, 1, 0.0, 2.0, 0.0, TStarRule::Unit);
  EXPECT_DOUBLE_EQ(c.t_star, 1.0);
  EXPECT_DOUBLE_EQ(c.Cprime, 0.5);
  EXPECT_DOUBLE_EQ(c.contradiction_margin, 0.5);
  EXPECT_TRUE(c.holds);
}

TEST(Certify, MonotoneInEps) {
  for (int n : {1, 2})
    for (double alpha : {-0.5, 0.0, 0.5}) {
      bool seen_fail = false;
      // Decreasing eps: once it holds it must keep holding.
      bool held = false;
      for (double le = 1.0; le >= -40.0; le -= 0.25) {
        const bool h = certify(std::pow(10.0, le), 1.0, n, alpha, 2.0, 2.0).holds;
        if (held) {
          EXPECT_TRUE(h) << "n " << n << " alpha " << alpha << " log10 eps " << le;
        }
        held = held || h;
        seen_fail = seen_fail || !h;
      }
      EXPECT_TRUE(held);
      EXPECT_TRUE(seen_fail);
    }
}
