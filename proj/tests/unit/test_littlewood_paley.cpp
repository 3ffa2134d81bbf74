#include <gtest/gtest.h>

#include "support.hpp"

using namespace sqg;
using namespace sqg::test;
using lpd::DyadicProfile;

namespace {

const Domain d64(two_pi, 64);

/// Random phases with amplitude exp(-|k|/width): a smooth, resolved field.
SpectralField smooth_field(const Domain& d, std::uint64_t seed, double width) {
  SpectralField f = random_field(d, seed);
  f.apply_radial([&](double kn) { return std::exp(-kn / width); });
  return f;
}

} // namespace

TEST(Profile, PlateauAndSupport) {
  for (double x : {0.0, 0.1, 0.3, 0.5}) EXPECT_EQ(DyadicProfile::chi(x), 1.0);
  for (double x : {1.0, 1.2, 4.0}) EXPECT_EQ(DyadicProfile::chi(x), 0.0);
  EXPECT_EQ(DyadicProfile::chi(-0.4), 1.0);
  double prev = 1.0;
  for (int n = 0; n <= 1000; ++n) {
    const double x = 0.5 + 0.5 * n / 1000.0;
    const double v = DyadicProfile::chi(x);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(Profile, PhiNonnegativeAndTelescoping) {
  for (int n = 0; n <= 2000; ++n) {
    const double xi = 0.05 * n;
    EXPECT_GE(DyadicProfile::phi(xi), 0.0);
    for (int Q = -1; Q <= 7; ++Q) {
      double sum = 0.0;
      for (int q = -1; q <= Q; ++q) sum += DyadicProfile::phi_q(q, xi);
      EXPECT_NEAR(sum, DyadicProfile::low(Q, xi), 1e-15);
    }
    for (int q = 0; q <= 6; ++q) EXPECT_EQ(DyadicProfile::phi_q(q, xi), DyadicProfile::phi(std::ldexp(xi, -q)));
  }
}

TEST(Profile, PartitionOfUnityOnGrid) {
  const int qmax = lpd::q_max(d64);
  EXPECT_EQ(qmax, 6);
  double worst = 0.0;
  for (std::size_t i = 0; i < d64.n(); ++i) {
    for (std::size_t j = 0; j < d64.half(); ++j) {
      double sum = 0.0;
      for (int q = -1; q <= qmax; ++q) sum += DyadicProfile::phi_q(q, d64.mode_norm(i, j));
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Profile, BandSupport) {
  for (int q = -1; q <= 6; ++q) {
    for (int n = 0; n <= 4000; ++n) {
      const double xi = 0.025 * n;
      const bool inside = q == -1 ? xi <= 1.0 : (xi >= std::ldexp(1.0, q - 1) && xi <= std::ldexp(1.0, q + 1));
      if (!inside) EXPECT_EQ(DyadicProfile::phi_q(q, xi), 0.0) << "q=" << q << " xi=" << xi;
    }
  }
}

TEST(Project, UnitModeLivesInBandZero) {
  const SpectralField th = cos_mode(d64, 1, 0);
  EXPECT_LT(rel_l2(lpd::project(th, 0), th), 1e-15);
  EXPECT_EQ(l2(lpd::project(th, -1)), 0.0);
  EXPECT_THROW(lpd::project(th, -2), UsageError);
}

TEST(Project, BandsReconstructField) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const SpectralField th = random_field(d64, s);
    const lpd::BandDecomposition dec = lpd::decompose(th);
    EXPECT_EQ(dec.bands.size(), static_cast<std::size_t>(lpd::q_max(d64) + 2));
    EXPECT_LT(rel_l2(dec.reconstruct(), th), 1e-12);
  }
}

TEST(Project, NonAdjacentBandsAreOrthogonal) {
  const SpectralField th = random_field(d64, 3);
  for (int q = -1; q <= 6; ++q) {
    for (int p = -1; p <= 6; ++p) {
      if (std::abs(p - q) < 2) continue;
      EXPECT_EQ(l2(lpd::project(lpd::project(th, p), q)), 0.0);
    }
  }
}

TEST(Project, VanishesAboveGrid) {
  const SpectralField th = random_field(d64, 4);
  for (int q = 7; q <= 9; ++q) EXPECT_EQ(l2(lpd::project(th, q)), 0.0);
}

TEST(LowPass, IdentityWhenAllModesBelowCutoff) {
  const SpectralField th = random_field(d64, 5);
  EXPECT_EQ(lpd::low_pass(th, 7), th);
  EXPECT_EQ(lpd::low_pass(th, 12), th);
}

TEST(LowPass, MinusOneRemovesUnitMode) {
  EXPECT_EQ(l2(lpd::low_pass(cos_mode(d64, 1, 0), -1)), 0.0);
  EXPECT_THROW(lpd::low_pass(cos_mode(d64, 1, 0), -2), UsageError);
}

TEST(LowPass, ComplementaryIdentity) {
  const SpectralField th = random_field(d64, 6);
  for (int Q = -1; Q <= 7; ++Q) {
    EXPECT_LT(rel_l2(lpd::low_pass(th, Q) + lpd::high_pass(th, Q), th), 1e-15);
  }
}

TEST(BandIsometry, VelocityBandsMatchScalarBands) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const SpectralField th = random_field(d64, 50 + s);
    const VectorField u = riesz_perp(th);
    for (int q = -1; q <= lpd::q_max(d64); ++q) {
      const double tq = l2(lpd::project(th, q));
      const double uq = std::hypot(l2(lpd::project(u.x1, q)), l2(lpd::project(u.x2, q)));
      EXPECT_NEAR(uq, tq, 1e-12 * std::max(tq, 1e-300)) << "q=" << q;
    }
  }
}

TEST(BandSpectrum, UnitModeAllInBandZero) {
  const auto s = lpd::band_spectrum(cos_mode(d64, 1, 0));
  for (const auto& b : s) {
    if (b.q == 0) {
      EXPECT_NEAR(b.energy, 2.0 * std::numbers::pi * std::numbers::pi, 1e-12);
    } else {
      EXPECT_EQ(b.energy, 0.0);
    }
  }
}

// Two overlapping weights a + b = 1 give a^2 + b^2 in [1/2, 1].
TEST(BandSpectrum, SquaredWeightRatioBetweenHalfAndOne) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SpectralField th = random_field(Domain(1.0, 64), s);
    double total = 0.0;
    for (const auto& b : lpd::band_spectrum(th)) total += b.energy;
    const double ratio = total / std::pow(l2(th), 2);
    EXPECT_GE(ratio, 0.5);
    EXPECT_LE(ratio, 1.0 + 1e-12);
  }
}

TEST(BandSpectrum, MatchesDecompositionEnergies) {
  const SpectralField th = random_field(d64, 8);
  const auto s = lpd::band_spectrum(th);
  const auto dec = lpd::decompose(th);
  for (std::size_t b = 0; b < s.size(); ++b) EXPECT_NEAR(s[b].energy, dec.energies[b], 1e-12 * dec.energies[b] + 1e-300);
}

TEST(Flux, SingleModeHasNoFlux) {
  const SpectralField th = cos_mode(d64, 1, 0);
  for (int Q = -1; Q <= 6; ++Q) {
    const auto r = lpd::flux(th, Q);
    EXPECT_LT(std::abs(r.pi), 1e-15);
    EXPECT_LT(std::abs(r.rq_term), 1e-15);
    EXPECT_LT(std::abs(r.hh_term), 1e-15);
  }
}

TEST(Flux, TotalFluxCancelsAboveProductBandwidth) {
  const SpectralField th = random_field(d64, 9, 1.0, 5.0);
  const double scale = l2(th) * l2(riesz_perp(th)) * l2(gradient(th));
  for (int Q : {4, 5, 6}) EXPECT_LT(std::abs(lpd::flux(th, Q).pi), 1e-12 * scale);
}

TEST(Flux, IdentityOnRandomFieldN64Q3) {
  const SpectralField th = random_field(d64, 10);
  const auto r = lpd::flux(th, 3);
  ASSERT_GT(std::abs(r.pi), 0.0);
  EXPECT_LE(r.identity_error(), 1e-10 * std::abs(r.pi));
}

TEST(Flux, IdentityPropertyHundredFields) {
  const Domain d(2.0, 32);
  std::mt19937_64 rng(2024);
  for (int c = 0; c < 100; ++c) {
    const double hi = std::uniform_real_distribution<double>(2.0, 16.0)(rng);
    const SpectralField th = random_field(d, rng(), 1.0, hi);
    const int Q = std::uniform_int_distribution<int>(-1, lpd::q_max(d))(rng);
    const auto r = lpd::flux(th, Q);
    EXPECT_LE(r.relative_identity_error(), 1e-10) << "case " << c;
    EXPECT_LE(std::abs(r.low_low), 1e-12 * r.magnitude) << "case " << c;
    EXPECT_LE(std::abs(r.pi), r.magnitude * (1.0 + 1e-12)) << "case " << c;
  }
}

TEST(Flux, AllLevelsMatchSingleLevel) {
  const SpectralField th = random_field(d64, 11);
  const auto all = lpd::flux_all(th);
  for (int Q = -1; Q <= lpd::q_max(d64); ++Q) {
    const auto one = lpd::flux(th, Q);
    EXPECT_NEAR(all[static_cast<std::size_t>(Q + 1)], one.pi, 1e-13 * one.magnitude) << "Q=" << Q;
  }
}

TEST(Flux, DecaysBeyondEnergyPeakForSmoothField) {
  const SpectralField th = dealias(smooth_field(d64, 12, 1.5));
  const auto bands = lpd::band_spectrum(th);
  int peak = -1;
  double best = -1.0;
  for (const auto& b : bands) {
    if (b.energy > best) best = b.energy, peak = b.q;
  }
  const auto pi = lpd::flux_all(th);
  const double floor = 1e-12 * l2(th) * l2(riesz_perp(th)) * l2(gradient(th));
  int checked = 0;
  for (int Q = peak + 1; Q < lpd::q_max(d64); ++Q) {
    const double a = std::abs(pi[static_cast<std::size_t>(Q + 1)]), b = std::abs(pi[static_cast<std::size_t>(Q + 2)]);
    if (a < floor) break;
    EXPECT_GE(a, 2.0 * b) << "Q=" << Q;
    ++checked;
  }
  EXPECT_GE(checked, 2);
}

TEST(FluxBound, ZeroTrajectory) {
  const std::vector<double> t{0.0, 0.5, 1.0};
  const std::vector<std::vector<double>> e(3, std::vector<double>(8, 0.0));
  EXPECT_EQ(lpd::flux_bound_rhs(t, e, 2, 0.0, 1.0), 0.0);
}

TEST(FluxBound, SingleBandClosedForm) {
  const std::vector<double> t{0.0, 0.25, 0.5, 0.75, 1.0};
  const int qstar = 3;
  const double energy = 2.5;
  std::vector<std::vector<double>> e(t.size(), std::vector<double>(8, 0.0));
  for (auto& row : e) row[qstar + 1] = energy;
  for (int Q = -1; Q <= 6; ++Q) {
    const double expected = std::pow(2.0, -0.5 * std::abs(qstar - Q)) * std::ldexp(1.0, qstar) * energy * (1.0 - 0.25);
    EXPECT_NEAR(lpd::flux_bound_rhs(t, e, Q, 0.25, 1.0), expected, 1e-13 * expected);
  }
}

TEST(FluxBound, EmptyRangeIsUsageError) {
  const std::vector<double> t{0.0, 1.0};
  const std::vector<std::vector<double>> e(2, std::vector<double>(8, 1.0));
  EXPECT_THROW(lpd::flux_bound_rhs(t, e, 1, 2.0, 3.0), UsageError);
}
