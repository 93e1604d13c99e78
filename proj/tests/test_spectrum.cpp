#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qaconv/experiment.hpp"
#include "qaconv/spectrum.hpp"

using namespace qaconv;

namespace {

Eigen::VectorXd dense_oracle_eigenvalues(const IsingProblem& p, double gamma) {
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(oracle::dense_from_paulis(p, gamma));
  return es.eigenvalues();
}

const IsingProblem kSingle(1, {{{0}, 1.0}});

}  // namespace

TEST(Diagonalize, SingleSpinClosedForm) {
  const auto d = build_diagonal(kSingle);
  const auto s1 = diagonalize(d, 1.0);
  EXPECT_NEAR(s1.eps0, -std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(s1.eps1, std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(s1.gap, 2.0 * std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(diagonalize(d, 0.0).gap, 2.0, 1e-15);
}

TEST(Diagonalize, TwoSpinMatchesDenseOracle) {
  const IsingProblem p(2, {{{0}, 0.5}, {{0, 1}, 1.0}});
  const auto snap = diagonalize(build_diagonal(p), 0.3, 4);
  const auto ref = dense_oracle_eigenvalues(p, 0.3);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(snap.eigenvalues[k], ref(k), 1e-10);
}

TEST(Diagonalize, EigenvaluesMatchOracleUpToFiveSpins) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ug(0.0, 2.0);
  for (int n = 1; n <= 5; ++n) {
    for (int rep = 0; rep < 3; ++rep) {
      const auto p = oracle::random_dense_problem(n, rng);
      const double g = ug(rng);
      const int count = std::min(4, 1 << n);
      const auto snap = diagonalize(build_diagonal(p), g, count);
      const auto ref = dense_oracle_eigenvalues(p, g);
      for (int k = 0; k < count; ++k) EXPECT_NEAR(snap.eigenvalues[k], ref(k), 1e-10) << "n=" << n;
    }
  }
}

TEST(Diagonalize, GroundStateResidualAndPhase) {
  std::mt19937_64 rng(2);
  for (int n : {2, 4, 6}) {
    const auto p = oracle::random_dense_problem(n, rng);
    const auto d = build_diagonal(p);
    const auto snap = diagonalize(d, 0.8);
    EXPECT_NEAR(snap.ground_state.norm(), 1.0, 1e-12);
    const auto h_psi = apply_hamiltonian(d, 0.8, snap.ground_state);
    const double h_norm = std::max(std::abs(d.min_energy()), std::abs(d.max_energy())) + 0.8 * n;
    EXPECT_LE((h_psi.amplitudes - snap.eps0 * snap.ground_state.amplitudes).norm(), 1e-8 * h_norm);
    Eigen::Index k = 0;
    snap.ground_state.amplitudes.cwiseAbs().maxCoeff(&k);
    EXPECT_GT(snap.ground_state.amplitudes(k).real(), 0.0);
    EXPECT_EQ(snap.ground_state.amplitudes(k).imag(), 0.0);
  }
}

TEST(Diagonalize, LanczosAgreesWithDense) {
  std::mt19937_64 rng(31);
  for (int n : {6, 8}) {
    const auto p = generate_random_problem({rng(), n, 2, 1.0, 0.5});
    const auto d = build_diagonal(p);
    const auto [dv, dg] = detail::dense_lowest(d, 0.6, 2);
    auto [lv, lg] = detail::lanczos_lowest(d, 0.6, 2);
    EXPECT_NEAR(lv(0), dv(0), 1e-10);
    EXPECT_NEAR(lv(1), dv(1), 1e-10);
    EXPECT_NEAR(std::abs(lg.dot(dg)), 1.0, 1e-8);
  }
}

TEST(Diagonalize, IterativeRangeAndCap) {
  const auto p = generate_random_problem({4, 12, 2, 1.0, 0.5});
  const auto d = build_diagonal(p);
  const auto snap = diagonalize(d, 0.5);
  EXPECT_GT(snap.gap, 0.0);
  const auto h_psi = apply_hamiltonian(d, 0.5, snap.ground_state);
  EXPECT_LE((h_psi.amplitudes - snap.eps0 * snap.ground_state.amplitudes).norm(), 1e-8 * (p.total_magnitude() + 6));
  EXPECT_THROW(diagonalize(build_diagonal(IsingProblem(15, {{{0}, 1.0}})), 0.5), SizeError);
}

TEST(Diagonalize, NearDegeneracyAtPositiveFieldIsFlagged) {
  const auto d = build_diagonal({2, {{{0, 1}, 1.0}}});
  EXPECT_TRUE(diagonalize(d, 1e-14).anomaly);
  EXPECT_FALSE(diagonalize(d, 0.5).anomaly);
}

TEST(GapProfile, SingleSpinEndpoints) {
  const Schedule s(0.1, 1.0, GFunction::constant(0.5), 1);
  const std::vector<double> t = {0.0, 1e6};
  const auto snaps = gap_profile(kSingle, s, t);
  EXPECT_NEAR(snaps[0].gap, 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(snaps[1].gap, 2.0 * std::sqrt(1.0 + std::pow(gamma(s, 1e6), 2)), 1e-12);
  EXPECT_LT(snaps[1].gap - 2.0, 0.01);
}

TEST(GapProfile, DegenerateFerromagnetNamesStates) {
  const Schedule s(0.1, 1.0, GFunction::constant(0.25), 2);
  const std::vector<double> t = {0.0, 1.0};
  try {
    gap_profile(IsingProblem(2, {{{0, 1}, 1.0}}), s, t);
    FAIL() << "expected DegeneracyError";
  } catch (const DegeneracyError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("|00>"), std::string::npos) << what;
    EXPECT_NE(what.find("|11>"), std::string::npos) << what;
  }
}

TEST(GapProfile, RandomFourSpinGapsPositive) {
  const auto p = generate_random_problem({77, 4, 3, 1.0, 0.5});
  const Schedule s(1e-2, 2.0, GFunction::constant(0.1), 4);
  const auto t = numerics::log1p_grid(1e4, 100);
  for (const auto& snap : gap_profile(p, s, t)) {
    EXPECT_GT(snap.gap, 0.0);
    EXPECT_FALSE(snap.anomaly);
  }
}

TEST(GapProfile, ThreadedMatchesSerial) {
  const auto p = generate_random_problem({5, 5, 2, 1.0, 0.5});
  const Schedule s(1e-2, 2.0, GFunction::constant(0.05), 5);
  const auto t = numerics::log1p_grid(1e3, 37);
  const auto a = gap_profile(p, s, t, 1), b = gap_profile(p, s, t, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].t, b[i].t);
    EXPECT_EQ(a[i].gap, b[i].gap);
  }
}

TEST(GapProfile, GroundStateOverlapContinuity) {
  const auto p = generate_random_problem({9, 3, 2, 1.0, 0.5});
  const Schedule s(0.1, 1.0, GFunction::constant(0.2), 3);
  double worst_coarse = 1.0, worst_fine = 1.0;
  for (int points : {20, 400}) {
    const auto snaps = gap_profile(p, s, numerics::linspace(0.0, 200.0, points));
    double worst = 1.0;
    for (std::size_t i = 1; i < snaps.size(); ++i) {
      worst = std::min(worst, std::abs(inner(snaps[i - 1].ground_state, snaps[i].ground_state)));
    }
    (points == 20 ? worst_coarse : worst_fine) = worst;
  }
  EXPECT_GE(worst_fine, worst_coarse);
  EXPECT_GT(worst_fine, 1.0 - 1e-4);
}

TEST(FitGap, SingleSpinClosedForm) {
  const auto grid = numerics::linspace(0.1, 3.0, 30);
  const auto inst = empirical_gap_constant(kSingle, grid);
  EXPECT_NEAR(inst.a_empirical, 2.0 * std::sqrt(1.0 + 9.0) / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(inst.gamma_at_min, 3.0);
}

TEST(FitGap, SingleSizeIsUnderdetermined) {
  const std::vector<double> grid = {0.5, 1.0};
  try {
    fit_gap_constants({kSingle}, grid);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("underdetermined"), std::string::npos);
  }
}

TEST(FitGap, EnsembleBoundHoldsOnGrid) {
  FitGapConfig fg;
  fg.n_spins = {2, 3, 4, 5, 6};
  fg.instances_per_size = 4;
  const auto ensemble = fit_gap_ensemble(fg);
  ASSERT_EQ(ensemble.size(), 20u);
  const auto grid = log_spaced(0.01, 2.0, 40);
  const auto fit = fit_gap_constants(ensemble, grid);
  EXPECT_GE(fit.b_fit, 0.0);
  EXPECT_GT(fit.a_fit, 0.0);
  for (const auto& inst : fit.instances) {
    const auto d = build_diagonal(ensemble[inst.index]);
    for (double g : grid) {
      EXPECT_GE(diagonalize(d, g).gap, inst.a_empirical * std::pow(g, inst.n_spins) * (1 - 1e-14));
    }
  }
}
