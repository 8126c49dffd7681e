// Reduced quadratic solver: analytic two/three-ion constructions, the
// feasibility rescaling, infeasibility certificates, and the multi-start
// optimizer (determinism and constraint satisfaction).

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "iongate/constraints.hpp"
#include "iongate/drive.hpp"
#include "iongate/phase_forms.hpp"
#include "iongate/solver.hpp"
#include "iongate/trap.hpp"

using namespace iongate;

TEST_CASE("two-ion solve on a diagonal form picks the dominant eigenvector") {
  Eigen::MatrixXd C = Eigen::Vector2d(2.0, 1.0).asDiagonal();
  int sign = 0;
  Eigen::VectorXd x = solve_two_ion(C, M_PI / 2.0, &sign);
  CHECK(sign == +1);
  CHECK(std::abs(x[0]) == Catch::Approx(std::sqrt(M_PI / 4.0)).epsilon(1e-12));
  CHECK(std::abs(x[1]) < 1e-14);
  CHECK(x.dot(C * x) == Catch::Approx(M_PI / 2.0).epsilon(1e-12));
}

TEST_CASE("two-ion solve flags a sign flip when the form opposes the gap") {
  Eigen::MatrixXd C = -Eigen::MatrixXd::Identity(3, 3);
  int sign = 0;
  Eigen::VectorXd x = solve_two_ion(C, M_PI / 2.0, &sign);
  CHECK(sign == -1);
  CHECK(x.dot(C * x) == Catch::Approx(-M_PI / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(solve_two_ion(Eigen::MatrixXd::Zero(2, 2), 1.0, &sign), ZeroMatrix);
}

TEST_CASE("two-ion solve hits the gap on random indefinite forms") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd B(4, 4);
    for (int i = 0; i < 16; ++i) B(i / 4, i % 4) = g(rng);
    Eigen::MatrixXd C = 0.5 * (B + B.transpose());
    int sign = 0;
    Eigen::VectorXd x = solve_two_ion(C, M_PI / 2.0, &sign);
    CHECK(std::abs(x.dot(C * x)) == Catch::Approx(M_PI / 2.0).epsilon(1e-10));
  }
}

TEST_CASE("three-ion construction satisfies both quadratic conditions") {
  // D = C2 - C3 = diag(2,-2) is indefinite; the candidate psi + xi
  // annihilates D while keeping a nonzero C2 norm.
  Eigen::MatrixXd C2 = Eigen::Vector2d(3.0, 1.0).asDiagonal();
  Eigen::MatrixXd C3 = Eigen::Vector2d(1.0, 3.0).asDiagonal();
  int sign = 0;
  Eigen::VectorXd x = solve_three_ion(C2, C3, M_PI / 2.0, &sign);
  CHECK(std::abs(x.dot((C2 - C3) * x)) < 1e-12);
  CHECK(x.dot(C2 * x) == Catch::Approx(sign * M_PI / 2.0).margin(1e-10));
  CHECK(x.dot(C3 * x) == Catch::Approx(sign * M_PI / 2.0).margin(1e-10));
}

TEST_CASE("three-ion construction rejects a sign-definite difference") {
  Eigen::MatrixXd C2 = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd C3 = Eigen::MatrixXd::Identity(3, 3);
  int sign = 0;
  CHECK_THROWS_AS(solve_three_ion(C2, C3, M_PI / 2.0, &sign), Infeasible);
}

TEST_CASE("feasibility rescaling zeroes the difference form and is idempotent") {
  Eigen::MatrixXd D = Eigen::Vector3d(2.0, -1.0, 0.0).asDiagonal();
  Eigen::MatrixXd C2 = Eigen::Vector3d(1.0, 1.0, 1.0).asDiagonal();
  Eigen::VectorXd x(3);
  x << 1.0, 2.0, 0.5;
  Eigen::VectorXd y = renormalize_feasible(x, {D}, C2, M_PI / 2.0);
  CHECK(std::abs(y.dot(D * y)) < 1e-12);
  CHECK(std::abs(y.dot(C2 * y)) == Catch::Approx(M_PI / 2.0).epsilon(1e-12));
  Eigen::VectorXd y2 = renormalize_feasible(y, {D}, C2, M_PI / 2.0);
  CHECK((y2 - y).cwiseAbs().maxCoeff() < 1e-12);
  // A vector entirely in the positive subspace cannot be balanced.
  Eigen::VectorXd bad(3);
  bad << 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(renormalize_feasible(bad, {D}, C2, M_PI / 2.0), ProjectionFailed);
}

TEST_CASE("spectral split partitions eigenvalues by sign") {
  Eigen::MatrixXd D = Eigen::Vector4d(3.0, 1e-15, -2.0, 0.0).asDiagonal();
  SpectralSplit s = split_spectrum(D);
  CHECK(s.lambda.size() == 1);
  CHECK(s.lambda[0] == Catch::Approx(3.0));
  CHECK(s.gamma.size() == 1);
  CHECK(s.gamma[0] == Catch::Approx(-2.0));
  CHECK(s.zero_space.cols() == 2);
}

namespace {

struct Problem {
  IonChainModes m;
  ToneBasis tones;
  ConstraintSystem sys;
  PhaseForms pf;
  CarrierForms cf;
  ReducedForms rf;
};

Problem make_problem(int n, double periods, const Eigen::VectorXd& gaps) {
  Problem p;
  p.m = normal_modes(n, TrapModel{});
  p.tones = harmonic_basis(periods * 2.0 * M_PI, p.m, 0.35);
  p.sys = assemble({closure_rows(p.m, p.tones), freq_robust_rows(p.m, p.tones)},
                   p.tones.n_tones());
  p.pf = phase_matrices(p.m, p.tones, 1.0);
  p.cf = carrier_forms(p.m, p.tones, 1.0);
  p.rf = reduced_forms(p.sys.K, p.pf, gaps);
  return p;
}

}  // namespace

TEST_CASE("optimizer meets the gaps, closes trajectories, and is deterministic") {
  Eigen::VectorXd gaps(1);
  gaps << M_PI / 2.0;
  Problem p = make_problem(2, 10.0, gaps);
  SolverOptions opt;
  opt.seed = 123;
  opt.restarts = 6;
  GateSolution a = optimize(p.rf, p.sys.K, p.pf, &p.cf, opt, &p.sys.L);
  REQUIRE(a.feasible);
  CHECK(a.quad_residuals.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(a.closure_residual < 1e-9);
  CHECK(a.cc_penalty < opt.tol_cc);
  CHECK(a.phases[0] - a.phases[1] == Catch::Approx(M_PI / 2.0).margin(1e-9));
  // bitwise determinism across repeated runs with the same seed
  GateSolution b = optimize(p.rf, p.sys.K, p.pf, &p.cf, opt, &p.sys.L);
  REQUIRE(b.r.size() == a.r.size());
  for (int i = 0; i < a.r.size(); ++i) CHECK(b.r[i] == a.r[i]);
  CHECK(b.one_norm == a.one_norm);
}

TEST_CASE("zero target gaps return the degenerate zero solution") {
  Eigen::VectorXd gaps = Eigen::VectorXd::Zero(1);
  Problem p = make_problem(2, 8.0, gaps);
  SolverOptions opt;
  GateSolution s = optimize(p.rf, p.sys.K, p.pf, &p.cf, opt);
  CHECK(s.degenerate);
  CHECK(s.r.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.feasible);
}

TEST_CASE("three-ion reduced problem is solvable end to end") {
  Eigen::VectorXd gaps(2);
  gaps << M_PI / 2.0, M_PI / 2.0;
  Problem p = make_problem(3, 12.0, gaps);
  SolverOptions opt;
  opt.seed = 7;
  opt.restarts = 8;
  GateSolution s = optimize(p.rf, p.sys.K, p.pf, &p.cf, opt, &p.sys.L);
  REQUIRE(s.feasible);
  CHECK(s.quad_residuals.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(s.closure_residual < 1e-9);
}

TEST_CASE("certified infeasibility detects a sign-definite cross form") {
  ReducedForms rf;
  rf.C_tilde.push_back(Eigen::MatrixXd::Identity(3, 3));
  rf.C_tilde.push_back(2.0 * Eigen::MatrixXd::Identity(3, 3));
  rf.target_gaps = Eigen::VectorXd(2);
  rf.target_gaps << 1.0, 1.0;  // C1/g1 - C2/g2 = -I, sign-definite
  CHECK(certified_infeasible(rf));
  rf.C_tilde[1] = Eigen::Vector3d(2.0, -1.0, 1.0).asDiagonal();
  CHECK_FALSE(certified_infeasible(rf));
}
