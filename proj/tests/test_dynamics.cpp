#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qaconv/dynamics.hpp"
#include "qaconv/experiment.hpp"

using namespace qaconv;

namespace {

const IsingProblem kSingle(1, {{{0}, 1.0}});

IntegratorConfig fixed(double t_max, double dt = 0.05, int records = 100) {
  IntegratorConfig c;
  c.max_time = t_max;
  c.dt = dt;
  c.record_count = records;
  return c;
}

struct NanAfter {
  double t_bad;
  double ising_scale(double) const { return 1.0; }
  double transverse(double t) const { return t > t_bad ? std::nan("") : 0.5; }
};

}  // namespace

TEST(ExcitationNorm, ClosedForms) {
  const auto g = basis_state(1, 0);
  EXPECT_EQ(excitation_norm(g, g), 0.0);
  EXPECT_DOUBLE_EQ(excitation_norm(basis_state(1, 1), g), 1.0);
  const StateVector mix{Eigen::Vector2cd(std::sqrt(0.75), 0.5)};
  EXPECT_NEAR(excitation_norm(mix, g), 0.5, 1e-15);
}

TEST(ExcitationNorm, ResolvesTinyExcitations) {
  const double eps = 1e-9;
  const StateVector psi{Eigen::Vector2cd(std::sqrt(1 - eps * eps), eps)};
  EXPECT_NEAR(excitation_norm(psi, basis_state(1, 0)), eps, 1e-20);
}

TEST(InitialState, SingleSpinOverlap) {
  const Schedule s(0.1, 1.0, GFunction::constant(0.5), 1);
  const auto psi = initial_state(kSingle, s);
  EXPECT_NEAR(std::norm(psi.amplitudes(0)), (1.0 + 1.0 / std::sqrt(2.0)) / 2.0, 1e-14);
  EXPECT_NEAR(std::norm(psi.amplitudes(0)), 0.8535534, 1e-7);
}

TEST(InitialState, StrongFieldGivesUniformSuperposition) {
  const auto p = generate_random_problem({12, 4, 2, 1.0, 0.5});
  // c chosen so that gamma(0) = c^(-g) = 1000 * sum |J|.
  const double g = 0.5;
  const double c = std::pow(1e3 * p.total_magnitude(), -1.0 / g);
  const Schedule s(0.1, c, GFunction::constant(g), 4);
  const auto psi = initial_state(p, s);
  for (Eigen::Index i = 0; i < psi.amplitudes.size(); ++i) EXPECT_NEAR(std::abs(psi.amplitudes(i)), 0.25, 1e-3);
}

TEST(InitialState, DegenerateFerromagnetRejected) {
  const Schedule s(0.1, 1.0, GFunction::constant(0.25), 2);
  EXPECT_THROW(initial_state(IsingProblem(2, {{{0, 1}, 1.0}}), s), DegeneracyError);
}

TEST(Evolve, StationaryHamiltonianStaysInGroundState) {
  const auto p = generate_random_problem({3, 3, 2, 1.0, 0.5});
  const Schedule s(0.0, 1.5, GFunction::constant(0.3), 3);
  const auto rec = evolve(p, s, fixed(50.0));
  for (double e : rec.excitation_norm) EXPECT_LE(e, 1e-6);
  EXPECT_FALSE(rec.failed);
}

TEST(Evolve, RecordsAreUniformAndMonotone) {
  const Schedule s(0.1, 2.0, GFunction::constant(0.5), 1);
  const auto rec = evolve(kSingle, s, fixed(10.0, 0.03, 7));
  ASSERT_EQ(rec.times.size(), 8u);
  for (std::size_t i = 0; i < rec.times.size(); ++i) EXPECT_NEAR(rec.times[i], 10.0 * i / 7, 1e-12);
  for (double o : rec.ground_overlap_sq) {
    EXPECT_GE(o, 0.0);
    EXPECT_LE(o, 1.0 + 1e-12);
  }
  EXPECT_EQ(rec.problem_hash, content_hash_of(kSingle));
  EXPECT_EQ(rec.schedule_hash, content_hash_of(s));
}

TEST(Evolve, SingleSpinAdiabaticAgainstFineReference) {
  const Schedule s(1e-3, 2.0, GFunction::constant(0.5), 1);
  const auto coarse = evolve(kSingle, s, fixed(1e4, 0.025, 50));
  const auto fine = evolve(kSingle, s, fixed(1e4, 0.0125, 50));
  EXPECT_LT(coarse.final_excitation, 0.1);
  EXPECT_NEAR(coarse.final_excitation, fine.final_excitation, 1e-3 * fine.final_excitation + 1e-9);
  for (double d : coarse.norm_drift) EXPECT_LE(d, 1e-8);
}

TEST(Evolve, SuddenQuenchKeepsInitialOverlap) {
  const Schedule s(1e8, 1.0, GFunction::constant(0.9), 1);
  const auto rec = evolve(kSingle, s, fixed(10.0, 0.01, 10));
  EXPECT_NEAR(rec.ground_overlap_sq.back(), 0.8535534, 1e-2);
}

TEST(Evolve, SecondOrderConvergence) {
  const auto p = generate_random_problem({42, 2, 2, 1.0, 0.5});
  const Schedule s(0.05, 1.0, GFunction::constant(0.2), 2);
  const auto ref = evolve(p, s, fixed(40.0, 0.4 / 64, 1)).final_state;
  std::vector<double> err;
  for (double dt : {0.4, 0.2, 0.1}) {
    const auto psi = evolve(p, s, fixed(40.0, dt, 1)).final_state;
    err.push_back((psi.amplitudes - ref.amplitudes).norm());
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double ratio = err[i - 1] / err[i];
    EXPECT_GT(ratio, 3.5) << i;
    EXPECT_LT(ratio, 4.5) << i;
  }
}

TEST(Evolve, AdaptiveMatchesFixed) {
  const auto p = generate_random_problem({8, 3, 2, 1.0, 0.5});
  const Schedule s(1e-2, 2.0, GFunction::constant(0.1), 3);
  auto cfg = fixed(300.0, 0.02, 5);
  const auto a = evolve(p, s, cfg);
  cfg.step_control = StepControl::adaptive;
  cfg.dt = 0.5;
  cfg.tolerance = 1e-8;
  const auto b = evolve(p, s, cfg);
  EXPECT_NEAR(a.final_excitation, b.final_excitation, 1e-6);
  EXPECT_LT(b.steps, a.steps);
}

TEST(Evolve, NormDriftMarksFailure) {
  const Schedule s(0.1, 2.0, GFunction::constant(0.5), 1);
  auto cfg = fixed(5.0);
  cfg.norm_tolerance = 0.0;
  StateVector psi{Eigen::Vector2cd(1.0 + 1e-6, 0.0)};
  const auto rec = propagate(build_diagonal(kSingle), ScheduleDrive(s), psi, 0.0, cfg);
  EXPECT_TRUE(rec.failed);
  ASSERT_TRUE(rec.first_failure_time.has_value());
  EXPECT_EQ(*rec.first_failure_time, 0.0);
}

TEST(Evolve, NonFiniteCoefficientIsHardError) {
  auto cfg = fixed(5.0);
  EXPECT_THROW(propagate(build_diagonal(kSingle), NanAfter{1.0}, basis_state(1, 0), 0.0, cfg), NumericalError);
}

TEST(Evolve, ValidatesConfig) {
  const Schedule s(0.1, 2.0, GFunction::constant(0.5), 1);
  EXPECT_THROW(evolve(kSingle, s, fixed(0.0)), ValidationError);
  EXPECT_THROW(evolve(kSingle, s, fixed(1.0, -0.1)), ValidationError);
}

TEST(Propagator, UnitaryAgainstDenseExponential) {
  std::mt19937_64 rng(4);
  const auto p = oracle::random_dense_problem(3, rng);
  const auto d = build_diagonal(p);
  ChebyshevPropagator prop(d);
  auto psi = oracle::random_state(3, rng);
  Eigen::VectorXcd v = psi.amplitudes;
  prop.step(v, 1.0, 0.7, 0.9);
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(oracle::dense_from_paulis(p, 0.7));
  const Eigen::VectorXcd phases = (es.eigenvalues().cast<Complex>() * Complex(0, -0.9)).array().exp();
  const Eigen::VectorXcd ref = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint() * psi.amplitudes;
  EXPECT_LE((v - ref).norm(), 1e-13);
  EXPECT_NEAR(v.norm(), 1.0, 1e-14);
}
