#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include "support.hpp"

using namespace sqg;
using namespace sqg::test;

namespace {

SolverConfig decay_config(std::size_t n, double nu, double T, double snap) {
  SolverConfig c;
  c.domain = Domain(two_pi, n);
  c.nu = nu;
  c.dt = 1e-3;
  c.final_time = T;
  c.sample_interval = snap;
  c.snapshot_interval = snap;
  return c;
}

SolverConfig forced_config(std::size_t n, double T, double snap) {
  SolverConfig c = decay_config(n, 0.1, T, snap);
  c.forcing.kind = FieldKind::single_mode;
  c.forcing.mode = {2, 1};
  c.forcing.amplitude = 1.0;
  return c;
}

/// |k| |c_k|^2 summed over the half-wave rectified cosine max(cos x, 0).
double rectified_cos_half_derivative_sum() {
  double s = 2.0 * (1.0 / 16.0);
  for (int n = 1; n < 200000; ++n) {
    const double c = 1.0 / (std::numbers::pi * (4.0 * n * n - 1.0));
    s += 2.0 * (2.0 * n) * c * c;
  }
  return s;
}

LevelEnergyReport synthetic_report(const std::vector<double>& U, const LevelConfig& cfg) {
  LevelEnergyReport r;
  r.config = cfg;
  for (std::size_t k = 0; k < U.size(); ++k) {
    LevelEntry e;
    e.k = static_cast<int>(k);
    e.U = U[k];
    r.levels.push_back(e);
  }
  return r;
}

} // namespace

TEST(Truncate, ScalarExamples) {
  EXPECT_EQ(truncate_value(-1.0, 0.5, Branch::plus), 0.0);
  EXPECT_EQ(truncate_value(0.3, 0.5, Branch::plus), 0.0);
  EXPECT_EQ(truncate_value(2.0, 0.5, Branch::plus), 1.5);
  EXPECT_EQ(truncate_value(-1.0, 0.5, Branch::minus), -0.5);
  EXPECT_EQ(truncate_value(0.3, 0.5, Branch::minus), 0.0);
  EXPECT_EQ(truncate_value(2.0, 0.5, Branch::minus), 0.0);
}

TEST(Truncate, BranchesSumToFieldAtZeroLevel) {
  const PhysicalField g = to_physical(random_field(Domain(1.0, 16), 1));
  const PhysicalField p = truncate(g, 0.0, Branch::plus), m = truncate(g, 0.0, Branch::minus);
  for (std::size_t n = 0; n < g.values().size(); ++n) {
    EXPECT_EQ(p.values()[n] + m.values()[n], g.values()[n]);
    EXPECT_GE(p.values()[n], 0.0);
    EXPECT_LE(m.values()[n], 0.0);
  }
}

TEST(PredictM, Examples) {
  EXPECT_DOUBLE_EQ(predict_M(1.0, 1.0, 1.0, 0.0, 4.0, 1.0), 1.0);
  EXPECT_EQ(predict_M(0.0, 1.0, 1.0, 3.0, 4.0, 1.0), 0.0);
  // 3 (sqrt(16)/(0.5*2) + (1/0.5)^{2/3} 16^{1/6}) = 12 + 3 * 2^{4/3}
  EXPECT_NEAR(predict_M(16.0, 0.5, 2.0, 1.0, 4.0, 3.0), 12.0 + 3.0 * std::cbrt(16.0), 1e-12);
  // 2/2 + (2/2)^{2/3} 4^{1/6}
  EXPECT_NEAR(predict_M(4.0, 2.0, 1.0, 2.0, 4.0, 1.0), 1.0 + std::pow(4.0, 1.0 / 6.0), 1e-14);
  EXPECT_NEAR(predict_M(4.0, 2.0, 1.0, 2.0, 4.0, 1.0), 2.2599, 1e-4);
  EXPECT_THROW(predict_M(1.0, 1.0, 1.0, 1.0, 2.0, 1.0), UsageError);
  EXPECT_THROW(predict_M(1.0, 0.0, 1.0, 1.0, 4.0, 1.0), UsageError);
}

TEST(LevelConfig, LevelsAndWindows) {
  LevelConfig c{.M = 2.0, .K = 5, .t0 = 4.0, .nu = 0.1, .p = 4.0, .f_p_norm = 0.0};
  EXPECT_EQ(c.lambda(0), 0.0);
  EXPECT_EQ(c.lambda(1), 1.0);
  EXPECT_EQ(c.lambda(3), 1.75);
  EXPECT_EQ(c.window_start(2), 3.0);
  EXPECT_DOUBLE_EQ(c.p_prime(), 4.0 / 3.0);
  c.K = 2;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(CheckIteration, AllZeroGivesZero) {
  const LevelConfig c{.M = 1.0, .K = 5, .t0 = 1.0, .nu = 1.0};
  const auto fit = check_iteration(synthetic_report(std::vector<double>(6, 0.0), c), c);
  EXPECT_EQ(fit.C_fit, 0.0);
  EXPECT_TRUE(fit.indices.empty());
}

TEST(CheckIteration, GeometricSequenceClosedForm) {
  // f = 0, nu t0 M = 1: rhs_k = 2^{2k+1} U_{k-1}^{3/2}. With U_k = 4^{-k} the
  // ratio is 4^{-k/2 - 3/2} / 2, largest at k = 1.
  const LevelConfig c{.M = 2.0, .K = 5, .t0 = 1.0, .nu = 0.5, .p = 4.0, .f_p_norm = 0.0};
  std::vector<double> U;
  for (int k = 0; k <= 5; ++k) U.push_back(std::pow(4.0, -k));
  const auto fit = check_iteration(synthetic_report(U, c), c);
  ASSERT_EQ(fit.indices.size(), 5u);
  for (std::size_t n = 0; n < fit.ratios.size(); ++n) {
    const int k = fit.indices[n];
    EXPECT_NEAR(fit.ratios[n], 0.5 * std::pow(4.0, -0.5 * k - 1.5), 1e-15);
  }
  EXPECT_NEAR(fit.C_fit, 1.0 / 32.0, 1e-15);
  EXPECT_TRUE(fit.flagged.empty());
}

TEST(CheckIteration, ForcingTermClosedForm) {
  const LevelConfig c{.M = 1.0, .K = 3, .t0 = 1.0, .nu = 1.0, .p = 4.0, .f_p_norm = 2.0};
  // p' = 4/3: second term 2 * 2^{3k/2} U^{1 + (2 - 4/3)/(8/3)} = 2^{1+1.5k} U^{5/4}.
  EXPECT_NEAR(iteration_rhs(c, 2, 16.0), 32.0 * 64.0 + 16.0 * 32.0, 1e-9);
}

TEST(CheckIteration, FlagsOutlierLevel) {
  const LevelConfig c{.M = 2.0, .K = 5, .t0 = 1.0, .nu = 0.5, .p = 4.0, .f_p_norm = 0.0};
  std::vector<double> U{1.0, 0.25, 0.0625, 0.015625, 1.0, 0.0009765625};
  const auto fit = check_iteration(synthetic_report(U, c), c);
  ASSERT_EQ(fit.flagged.size(), 1u);
  EXPECT_EQ(fit.flagged[0], 4);
}

TEST(CheckIteration, TooFewLevelsIsUsageError) {
  const LevelConfig c{.M = 1.0, .K = 5, .t0 = 1.0, .nu = 1.0};
  EXPECT_THROW(check_iteration(synthetic_report({1.0, 0.0, 0.0, 0.0, 0.0, 0.0}, c), c), UsageError);
}

TEST(LevelEnergies, ZeroTrajectory) {
  const SolverConfig sc = decay_config(16, 0.5, 1.0, 0.002);
  const auto rec = integrate(SpectralField(sc.domain), sc);
  const LevelConfig c{.M = 1.0, .K = 5, .t0 = 1.0, .nu = 0.5};
  const auto r = level_energies(rec, c);
  for (const auto& e : r.levels) EXPECT_EQ(e.U, 0.0);
  EXPECT_EQ(check_iteration(r, c).C_fit, 0.0);
  EXPECT_EQ(r.linf_at_t0, 0.0);
}

TEST(LevelEnergies, DecayingCosineAgainstRectifiedSeries) {
  const double nu = 0.5, t0 = 1.0;
  const SolverConfig sc = decay_config(64, nu, t0, 0.002);
  const auto rec = integrate(cos_mode(sc.domain, 1, 0), sc);
  const LevelConfig c{.M = 2.0, .K = 5, .t0 = t0, .nu = nu};
  const auto r = level_energies(rec, c, Branch::plus);
  const double pi = std::numbers::pi;
  const double expected = pi * pi + 4.0 * pi * pi * rectified_cos_half_derivative_sum() * (1.0 - std::exp(-2.0 * nu * t0));
  EXPECT_NEAR(r.levels[0].U, expected, 5e-3 * expected);
  EXPECT_NEAR(r.levels[0].sup_energy, pi * pi, 1e-12);
  for (int k = 1; k <= 5; ++k) EXPECT_EQ(r.levels[static_cast<std::size_t>(k)].U, 0.0) << k;
  EXPECT_NEAR(r.linf_at_t0, std::exp(-nu * t0), 1e-12);
  EXPECT_EQ(r.ratio(2), 0.0);
  EXPECT_EQ(r.ratio(1), 0.0);
}

TEST(LevelEnergies, InsufficientWindowSamplesNamesWindow) {
  const SolverConfig sc = decay_config(16, 0.5, 1.0, 0.01);
  const auto rec = integrate(cos_mode(sc.domain, 1, 0), sc);
  const LevelConfig c{.M = 2.0, .K = 5, .t0 = 1.0, .nu = 0.5};
  try {
    level_energies(rec, c);
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("window"), std::string::npos);
  }
}

TEST(LevelEnergies, MonotoneInLevel) {
  const SolverConfig sc = forced_config(32, 1.0, 0.002);
  const auto rec = integrate(random_field(sc.domain, 21, 1.0, 6.0), sc);
  for (Branch b : {Branch::plus, Branch::minus}) {
    const double m = 0.5 * linf(rec.snapshots.front().theta);
    const LevelConfig c{.M = m, .K = 5, .t0 = 1.0, .nu = sc.nu, .p = 4.0, .f_p_norm = 0.0};
    const auto r = level_energies(rec, c, b);
    for (int k = 1; k <= 5; ++k) {
      const auto& cur = r.levels[static_cast<std::size_t>(k)];
      const auto& prev = r.levels[static_cast<std::size_t>(k - 1)];
      EXPECT_LE(cur.sup_energy, prev.sup_energy);
      EXPECT_LE(cur.U, prev.U * (1.0 + 1e-3)) << to_string(b) << " k=" << k;
    }
  }
}

TEST(TruncatedEnergy, AboveSupremumIsExactlyZero) {
  const SolverConfig sc = forced_config(32, 0.2, 0.01);
  const auto rec = integrate(random_field(sc.domain, 5, 1.0, 6.0), sc);
  double sup = 0.0;
  for (const auto& s : rec.snapshots) sup = std::max(sup, linf(s.theta));
  for (Branch b : {Branch::plus, Branch::minus}) {
    const auto c = truncated_energy_check(rec, 1.01 * sup, b, 0.0, 0.2);
    EXPECT_EQ(c.residual, 0.0);
    EXPECT_EQ(c.identity_residual, 0.0);
  }
}

TEST(TruncatedEnergy, ZeroLevelBranchesRecoverEnergyBalance) {
  const SolverConfig sc = forced_config(32, 1.0, 0.01);
  const auto rec = integrate(random_field(sc.domain, 6, 1.0, 6.0), sc);
  const auto p = truncated_energy_check(rec, 0.0, Branch::plus, 0.2, 1.0);
  const auto m = truncated_energy_check(rec, 0.0, Branch::minus, 0.2, 1.0);
  const double scale = peak_energy(rec);
  EXPECT_NEAR(p.identity_residual + m.identity_residual, energy_balance(rec, 0.2, 1.0), 1e-10 * scale);
  EXPECT_EQ(p.samples, 81u);
}

TEST(TruncatedEnergy, InequalityHoldsWithinTolerance) {
  const SolverConfig sc = forced_config(64, 1.0, 0.01);
  const auto rec = integrate(random_field(sc.domain, 7, 1.0, 6.0), sc);
  const TruncationTolerance tol;
  const double E = peak_energy(rec);
  const double sup = linf(rec.snapshots.back().theta);
  for (double frac : {0.25, 0.5, 0.75}) {
    for (Branch b : {Branch::plus, Branch::minus}) {
      const auto c = truncated_energy_check(rec, frac * sup, b, 0.5, 1.0);
      EXPECT_LE(c.residual, tol(E, 64, sc.dt)) << frac << " " << to_string(b);
      EXPECT_LE(std::abs(c.identity_residual), tol(E, 64, sc.dt)) << frac << " " << to_string(b);
    }
  }
}

TEST(TruncatedEnergy, MissingEndpointSnapshotIsUsageError) {
  const SolverConfig sc = forced_config(16, 0.2, 0.01);
  const auto rec = integrate(random_field(sc.domain, 8, 1.0, 4.0), sc);
  EXPECT_THROW(truncated_energy_check(rec, 0.0, Branch::plus, 0.0, 0.5), UsageError);
  EXPECT_THROW(truncated_energy_check(rec, 0.0, Branch::plus, 0.1, 0.1), UsageError);
}

TEST(Tolerance, Formula) {
  const TruncationTolerance t;
  EXPECT_DOUBLE_EQ(t(2.0, 64, 1e-3), 10.0 * 1e-6 * 2.0 + 2.0 / 64.0);
}

TEST(DissipationGap, ConvergesUnderRefinement) {
  const SpectralField base = random_field(Domain(two_pi, 16), 9, 1.0, 4.0);
  std::vector<double> gaps;
  for (std::size_t n : {32u, 64u, 128u, 256u}) {
    gaps.push_back(dissipation_gap(resample(base, Domain(two_pi, n)), 0.3 * linf(base), Branch::plus));
  }
  for (std::size_t i = 0; i + 2 < gaps.size(); ++i) {
    EXPECT_GE(std::abs(gaps[i] - gaps[i + 1]), 2.0 * std::abs(gaps[i + 1] - gaps[i + 2])) << i;
  }
  EXPECT_GE(gaps.back(), -std::abs(gaps[2] - gaps[3]));
}

TEST(IndicatorBound, HoldsExactlyOnGrid) {
  const PhysicalField g = to_physical(random_field(Domain(1.0, 32), 10));
  const double M = linf(g);
  for (Branch b : {Branch::plus, Branch::minus}) {
    for (int k = 1; k <= 8; ++k) EXPECT_EQ(indicator_bound_violations(g, M, k, b), 0u);
  }
  EXPECT_THROW(indicator_bound_violations(g, M, 0, Branch::plus), UsageError);
}

TEST(IndicatorBound, RationalConversionIsExact) {
  using boost::multiprecision::cpp_rational;
  EXPECT_NE(cpp_rational(0.1), cpp_rational(1, 10));
  EXPECT_EQ(cpp_rational(0.5), cpp_rational(1, 2));
}

TEST(Linfty, DecayingCosineTransientConstant) {
  const double nu = 0.5;
  const SolverConfig sc = decay_config(16, nu, 4.0, 0.01);
  const auto rec = integrate(cos_mode(sc.domain, 1, 0), sc);
  const auto c = linfty_vs_bound(rec, nu, two_pi, 4.0, 0.0, LinftyBranch::transient);
  double oracle = 0.0;
  for (double t : rec.times) oracle = std::max(oracle, nu * t * std::exp(-nu * t) / (std::numbers::pi * std::sqrt(2.0)));
  EXPECT_NEAR(c.C1, oracle, 1e-10);
  EXPECT_LE(c.C1, 1.0 / (std::exp(1.0) * std::numbers::pi * std::sqrt(2.0)) + 1e-12);
  EXPECT_TRUE(std::isnan(c.C2));
}

TEST(Linfty, ZeroTrajectoryAndDegenerateLongTime) {
  const SolverConfig sc = decay_config(16, 0.5, 0.1, 0.01);
  const auto rec = integrate(SpectralField(sc.domain), sc);
  EXPECT_EQ(linfty_vs_bound(rec, 0.5, two_pi, 4.0, 0.0, LinftyBranch::transient).C1, 0.0);
  EXPECT_THROW(linfty_vs_bound(rec, 0.5, two_pi, 4.0, 0.0, LinftyBranch::both), UsageError);
}

TEST(Linfty, ForcedRunConstantsFinite) {
  const SolverConfig sc = forced_config(32, 2.0, 0.01);
  const auto rec = integrate(random_field(sc.domain, 11, 1.0, 4.0), sc);
  const double fp = lp(*rec.forcing, 4.0);
  const auto c = linfty_vs_bound(rec, sc.nu, two_pi, 4.0, fp);
  EXPECT_TRUE(std::isfinite(c.C1));
  EXPECT_TRUE(std::isfinite(c.C2));
  EXPECT_GT(c.C1, 0.0);
  EXPECT_GT(c.C2, 0.0);
}
