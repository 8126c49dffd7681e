// Independent Schrödinger-equation reference on the full qubit x Fock space:
// unitarity, agreement with the designed-gate closed forms, truncation and
// size guards.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "iongate/constraints.hpp"
#include "iongate/drive.hpp"
#include "iongate/fidelity.hpp"
#include "iongate/oracle.hpp"
#include "iongate/phase_forms.hpp"
#include "iongate/solver.hpp"
#include "iongate/trap.hpp"

using namespace iongate;

namespace {

struct Designed {
  IonChainModes m;
  ToneBasis tones;
  AmplitudeVector amps;
};

// Small two-ion entangling gate in the closure + frequency-robust family,
// scaled down in drive strength (longer effective phase accumulated exactly
// to pi/2) so a modest Fock cut suffices.
Designed design_two_ion(double periods) {
  Designed d;
  d.m = normal_modes(2, TrapModel{});
  d.tones = harmonic_basis(periods * 2.0 * M_PI, d.m, 0.35);
  ConstraintSystem sys =
      assemble({closure_rows(d.m, d.tones), freq_robust_rows(d.m, d.tones)}, d.tones.n_tones());
  PhaseForms pf = phase_matrices(d.m, d.tones, 1.0);
  CarrierForms cf = carrier_forms(d.m, d.tones, 1.0);
  Eigen::VectorXd gaps(1);
  gaps << M_PI / 2.0;
  ReducedForms rf = reduced_forms(sys.K, pf, gaps);
  SolverOptions opt;
  opt.seed = 2024;
  opt.restarts = 4;
  GateSolution sol = optimize(rf, sys.K, pf, &cf, opt, &sys.L);
  REQUIRE(sol.feasible);
  d.amps.r = sol.r;
  d.amps.Omega = 1.0;
  return d;
}

}  // namespace

TEST_CASE("zero drive leaves any initial state unchanged") {
  IonChainModes m = normal_modes(2, TrapModel{});
  ToneBasis tones = harmonic_basis(6.0 * 2.0 * M_PI, m, 0.35);
  AmplitudeVector amps;
  amps.r = Eigen::VectorXd::Zero(tones.n_tones());
  FockConfig cfg;
  cfg.n_max = 6;
  Oracle oracle(m, tones, amps, cfg);
  CVec psi0 = oracle.initial_state({1, 2});
  CVec psi = oracle.evolve(psi0, tones.T);
  for (std::size_t i = 0; i < oracle.dim(); ++i)
    CHECK(std::abs(psi[i] - psi0[i]) < 1e-12);
}

TEST_CASE("evolution preserves the norm") {
  Designed d = design_two_ion(8.0);
  FockConfig cfg;
  cfg.n_max = 12;
  Oracle oracle(d.m, d.tones, d.amps, cfg);
  CVec psi = oracle.evolve(oracle.initial_state({0, 0}), d.tones.T);
  double norm = 0.0;
  for (const auto& c : psi) norm += std::norm(c);
  CHECK(norm == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("designed two-ion gate: oracle GHZ fidelity matches the closed form") {
  Designed d = design_two_ion(8.0);
  FockConfig cfg;
  cfg.n_max = 14;
  Oracle oracle(d.m, d.tones, d.amps, cfg);

  CVec psi = oracle.evolve(oracle.initial_state({0, 0}), d.tones.T);
  Oracle::GhzResult num = oracle.ghz_fidelity(oracle.reduced_qubit_density(psi));

  Eigen::VectorXd grid(1);
  grid << d.tones.T;
  Trajectory tr = trajectories(d.m, d.tones, d.amps, grid);
  ModeEndpoints ep;
  ep.A = tr.A_end;
  ep.F = tr.alpha_end.real();
  ep.G = tr.alpha_end.imag();
  EigenStructure es = eigen_structure(d.m);
  GhzFidelity cf = unitary_fidelity_exact(es, ep);

  CHECK(num.value == Catch::Approx(cf.value).margin(1e-6));
  CHECK(num.value > 1.0 - 1e-4);
}

TEST_CASE("thermal start degrades the fidelity relative to the ground state") {
  Designed d = design_two_ion(6.0);
  FockConfig cfg;
  cfg.n_max = 20;  // thermal starts up to |7> plus a ~1 displacement need headroom
  Oracle oracle(d.m, d.tones, d.amps, cfg);
  Eigen::VectorXd cold = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd warm = Eigen::VectorXd::Constant(2, 0.1);
  double f_cold = oracle.thermal_ghz_fidelity(d.tones.T, cold).value;
  double f_warm = oracle.thermal_ghz_fidelity(d.tones.T, warm).value;
  CHECK(f_warm <= f_cold + 1e-12);

  // and it matches the closed form with per-mode nbar
  Eigen::VectorXd grid(1);
  grid << d.tones.T;
  Trajectory tr = trajectories(d.m, d.tones, d.amps, grid);
  ModeEndpoints ep;
  ep.A = tr.A_end;
  ep.F = tr.alpha_end.real();
  ep.G = tr.alpha_end.imag();
  ep.nbar = warm;
  GhzFidelity cf = unitary_fidelity_exact(eigen_structure(d.m), ep);
  CHECK(f_warm == Catch::Approx(cf.value).margin(1e-5));
}

TEST_CASE("truncation guard fires when the Fock space is too small") {
  Designed d = design_two_ion(6.0);
  FockConfig cfg;
  cfg.n_max = 3;  // far too small for any real displacement
  Oracle oracle(d.m, d.tones, d.amps, cfg);
  CHECK_THROWS_AS(oracle.evolve(oracle.initial_state({0, 0}), d.tones.T), TruncationError);
}

TEST_CASE("register size guard: four ions are refused") {
  IonChainModes m = normal_modes(4, TrapModel{});
  ToneBasis tones = harmonic_basis(6.0 * 2.0 * M_PI, m, 0.35);
  AmplitudeVector amps;
  amps.r = Eigen::VectorXd::Zero(tones.n_tones());
  CHECK_THROWS_AS(Oracle(m, tones, amps, FockConfig{}), DimensionGuard);
}

TEST_CASE("numeric and closed-form propagators agree on the inner block") {
  Designed d = design_two_ion(6.0);
  // weaken the drive so a small Fock cut is converged and the propagator
  // stays cheap
  d.amps.r *= 0.25;
  FockConfig cfg;
  cfg.n_max = 8;
  Oracle oracle(d.m, d.tones, d.amps, cfg);
  double gap = oracle.check_unitary_structure(d.tones.T, 3);
  CHECK(gap < 1e-6);
}
