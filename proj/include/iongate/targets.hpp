#pragma once

// Target spin-spin coupling matrices and the per-mode phases that realize
// them. A coupling J is reachable exactly when it lies in the span of the
// mode outer products O_j O_j^T restricted to off-diagonal entries; the
// least-squares projection also yields a closed-form fidelity of the
// projected coupling against the requested one.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iongate/errors.hpp"
#include "iongate/trap.hpp"

namespace iongate {

struct CouplingTarget {
  Eigen::MatrixXd J;   // symmetric, zero diagonal; entries in radians
  std::string name;
};

/// Named coupling patterns on an n-ion register with global phase scale phi.
/// kinds: all_to_all, nearest_neighbour, nn_with_nnn, ssh.
inline CouplingTarget builtin_target(const std::string& kind, int n, double phi,
                                     double extra = 0.0, int stagger = 0) {
  if (n < 2) throw BadParams("builtin_target: need at least two ions");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  CouplingTarget t;
  t.name = kind;
  if (kind == "all_to_all") {
    J.setConstant(phi);
    J.diagonal().setZero();
  } else if (kind == "nearest_neighbour") {
    for (int i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = phi;
  } else if (kind == "nn_with_nnn") {
    double ratio = (extra == 0.0) ? -0.25 : extra;
    for (int i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = phi;
    for (int i = 0; i + 2 < n; ++i) J(i, i + 2) = J(i + 2, i) = ratio * phi;
  } else if (kind == "ssh") {
    // Alternating strong/weak nearest-neighbour bonds: phi +/- dphi with the
    // sign flipping per bond; stagger selects which bond starts strong.
    double dphi = (extra == 0.0) ? phi / 3.0 : extra;
    if (std::abs(dphi) >= std::abs(phi))
      throw BadParams("ssh target: bond alternation must be smaller than the base coupling");
    for (int i = 0; i + 1 < n; ++i) {
      double sgn = ((stagger + i) % 2 == 0) ? 1.0 : -1.0;
      J(i, i + 1) = J(i + 1, i) = phi + sgn * dphi;
    }
  } else {
    throw BadParams("builtin_target: unknown kind '" + kind + "'");
  }
  t.J = J;
  return t;
}

struct IdealPhases {
  Eigen::VectorXd phi;      // per-mode phases phi_j
  Eigen::MatrixXd J_real;   // realized coupling sum_j phi_j o_j o_j^T (off-diag)
  double fidelity = 0.0;    // (1 + normalized overlap) / 2 on the off-diagonal part
};

/// Least-squares phases over the mode outer products, matching only the
/// off-diagonal entries of J (the diagonal is a global phase). The fidelity
/// is (1 + <J, J_real> / (|J| |J_real|)) / 2 on the off-diagonal part.
inline IdealPhases ideal_phases(const CouplingTarget& target, const IonChainModes& modes) {
  const int n = modes.n_ions;
  if (target.J.rows() != n || target.J.cols() != n)
    throw DimensionMismatch("ideal_phases: coupling size does not match register");
  const int np = n * (n - 1) / 2;
  Eigen::MatrixXd M(np, n);
  Eigen::VectorXd b(np);
  int row = 0;
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k, ++row) {
      for (int j = 0; j < n; ++j) M(row, j) = modes.O(j, i) * modes.O(j, k);
      b[row] = target.J(i, k);
    }
  }
  if (b.cwiseAbs().maxCoeff() == 0.0)
    throw ZeroTarget("ideal_phases: requested coupling is identically zero");
  IdealPhases out;
  // The outer-product rows are rank deficient (a uniform shift of all phases
  // moves only the diagonal), so take the minimum-norm least-squares solution.
  out.phi = M.completeOrthogonalDecomposition().solve(b);
  Eigen::VectorXd b_real = M * out.phi;
  out.J_real = Eigen::MatrixXd::Zero(n, n);
  row = 0;
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k, ++row) out.J_real(i, k) = out.J_real(k, i) = b_real[row];
  double num = b.dot(b_real);
  double den = b.norm() * b_real.norm();
  out.fidelity = (den > 0) ? 0.5 * (1.0 + num / den) : 0.0;
  return out;
}

/// Alternative phase choice for higher-spin encodings: phi_j = o_j^T J o_j.
inline Eigen::VectorXd overlap_phases(const CouplingTarget& target, const IonChainModes& modes) {
  const int n = modes.n_ions;
  if (target.J.rows() != n || target.J.cols() != n)
    throw DimensionMismatch("overlap_phases: coupling size does not match register");
  Eigen::VectorXd phi(n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd o = modes.O.row(j).transpose();
    phi[j] = o.dot(target.J * o);
  }
  return phi;
}

/// Mode-phase gaps relative to a reference mode (lowest mode by default,
/// which is the centre-of-mass mode when one exists). The reduced problem
/// constrains phi_j - phi_ref for j != ref.
inline Eigen::VectorXd phase_gaps(const Eigen::VectorXd& phi, int reference_mode = 0) {
  if (reference_mode < 0 || reference_mode >= phi.size())
    throw BadParams("phase_gaps: reference mode out of range");
  Eigen::VectorXd g(phi.size() - 1);
  int k = 0;
  for (int j = 0; j < phi.size(); ++j)
    if (j != reference_mode) g[k++] = phi[j] - phi[reference_mode];
  return g;
}

struct StrobeStep {
  double t_start = 0.0;
  double t_end = 0.0;
  char axis = 'y';  // alternating y/x conjugation markers
};

/// Stroboscopic schedule of n_steps equal slices of duration 1/Omega each,
/// with the conjugation axis alternating between steps.
inline std::vector<StrobeStep> strobe_schedule(int n_steps, double Omega) {
  if (n_steps < 1) throw BadParams("strobe_schedule: need at least one step");
  if (Omega <= 0.0) throw BadParams("strobe_schedule: Omega must be positive");
  std::vector<StrobeStep> steps(n_steps);
  double dt = 1.0 / Omega;
  for (int k = 0; k < n_steps; ++k) {
    steps[k].t_start = k * dt;
    steps[k].t_end = (k + 1) * dt;
    steps[k].axis = (k % 2 == 0) ? 'y' : 'x';
  }
  return steps;
}

}  // namespace iongate
