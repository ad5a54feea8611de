#include <gtest/gtest.h>

#include "asq/suites.hpp"

using namespace asq;

TEST(Suites, UnknownNameAndZeroTrialsAreRejected) {
  SuiteOutput out;
  EXPECT_THROW(run_suite("bogus", 0, 10, out), DomainError);
  EXPECT_THROW(run_suite("weyl", 0, 0, out), DomainError);
}

TEST(Suites, SampledSuiteIsDeterministicInTheSeed) {
  SuiteOutput a, b, c;
  run_suite("interp-torus", 4, 30, a);
  run_suite("interp-torus", 4, 30, b);
  run_suite("interp-torus", 5, 30, c);
  ASSERT_EQ(a.reports.size(), 6u);
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    EXPECT_EQ(a.reports[i].ratios, b.reports[i].ratios);
    EXPECT_NE(a.reports[i].ratios, c.reports[i].ratios);
    ASSERT_TRUE(a.reports[i].revalidation.has_value());
    EXPECT_EQ(a.reports[i].revalidation->trials, 30);
  }
}

TEST(Suites, RiccatiConstantIsResolutionIndependentAtFixedMollifier) {
  const auto st = riccati_study({128, 256});
  ASSERT_EQ(st.fits.size(), 2u);
  EXPECT_GT(st.fits[0].C, 0.0);
  EXPECT_LT(st.spread, 0.2);
  EXPECT_TRUE(st.fits[0].bound_holds);
  EXPECT_TRUE(st.fits[1].bound_holds);
  EXPECT_EQ(st.report.violations, 0);
}

TEST(Suites, FailedRevalidationFailsTheReport) {
  InequalityReport r;
  EXPECT_TRUE(report_passed(r));
  r.revalidation = Revalidation{};
  r.revalidation->trials = 100;
  r.revalidation->violations = 1;
  EXPECT_FALSE(report_passed(r));
  r.revalidation->violations = 0;
  r.violations = 1;
  EXPECT_FALSE(report_passed(r));
}
