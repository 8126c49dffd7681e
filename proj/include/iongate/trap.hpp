#pragma once

// Linear-chain equilibrium, normal modes and Lamb-Dicke factors.
//
// Internally everything is in trap units: frequencies in units of nu1
// (angular) and positions in units of the harmonic length scale
// (e^2 / (4 pi eps0 m nu1^2))^(1/3). SI shows up only in the Lamb-Dicke
// conversion, eta_j = k sqrt(hbar / (2 m nu_j)) with angular nu_j.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iongate/errors.hpp"

namespace iongate {

namespace phys {
constexpr double hbar = 1.054571817e-34;      // J s
constexpr double amu = 1.66053906660e-27;     // kg
}  // namespace phys

enum class TrapKind { harmonic, equal_spaced, custom };

/// Full mode set supplied by the user (kind == custom).
struct CustomModes {
  Eigen::VectorXd nu;            // units of nu1, ascending
  Eigen::MatrixXd O;             // rows are modes
  std::optional<Eigen::VectorXd> eta;  // optional; derived from nu otherwise
};

struct TrapModel {
  TrapKind kind = TrapKind::harmonic;
  double nu1 = 2.0 * M_PI * 400e3;  // rad/s
  double ion_mass = 87.905 * phys::amu;
  double wave_number = 2.0 * M_PI / 674e-9;  // rad/m
  // equal_spaced only: ion spacing in harmonic length units and per-site
  // curvature in units of nu1^2 (empty -> uniform, pinned so the lowest
  // mode sits exactly at nu1).
  double spacing = 2.0;
  std::optional<Eigen::VectorXd> curvature;
  std::optional<CustomModes> custom;

  void validate(int n_ions) const {
    if (nu1 <= 0 || ion_mass <= 0 || wave_number <= 0)
      throw ConfigError("trap: nu1, ion_mass and wave_number must be positive");
    if (kind == TrapKind::custom) {
      if (!custom) throw ConfigError("trap: kind=custom requires a mode set");
      if (custom->nu.size() != n_ions || custom->O.rows() != n_ions ||
          custom->O.cols() != n_ions)
        throw ConfigError("trap: custom mode set dimensions do not match n_ions");
    }
    if (curvature && curvature->size() != n_ions)
      throw ConfigError("trap: curvature vector length must equal n_ions");
  }
};

struct IonChainModes {
  int n_ions = 0;
  Eigen::VectorXd nu;   // units of nu1, ascending, nu[0] == 1 unless custom
  Eigen::MatrixXd O;    // rows are modes, orthonormal
  Eigen::VectorXd eta;  // dimensionless Lamb-Dicke factors
  std::optional<int> com_index;
  bool lamb_dicke_warning = false;  // set when some eta_j >= 0.3
};

/// eta_j = k sqrt(hbar / (2 m nu_j)), nu_j angular in rad/s via trap.nu1.
inline Eigen::VectorXd lamb_dicke(const Eigen::VectorXd& nu_over_nu1, const TrapModel& trap,
                                  bool* warning = nullptr) {
  if ((nu_over_nu1.array() <= 0).any()) throw ConfigError("lamb_dicke: frequencies must be positive");
  Eigen::VectorXd eta(nu_over_nu1.size());
  for (int j = 0; j < nu_over_nu1.size(); ++j) {
    double nu_si = nu_over_nu1[j] * trap.nu1;
    eta[j] = trap.wave_number * std::sqrt(phys::hbar / (2.0 * trap.ion_mass * nu_si));
  }
  if (warning) *warning = (eta.array() >= 0.3).any();
  return eta;
}

/// Dimensionless equilibrium positions of the chain.
inline Eigen::VectorXd equilibrium_positions(int n_ions, const TrapModel& trap,
                                             int max_iter = 200, double grad_tol = 1e-12) {
  if (n_ions < 1) throw ConfigError("equilibrium_positions: n_ions must be >= 1");
  if (trap.kind == TrapKind::equal_spaced) {
    Eigen::VectorXd u(n_ions);
    for (int i = 0; i < n_ions; ++i) u[i] = (i - 0.5 * (n_ions - 1)) * trap.spacing;
    return u;
  }
  if (trap.kind != TrapKind::harmonic)
    throw ConfigError("equilibrium_positions: defined for harmonic and equal_spaced traps");
  if (n_ions == 1) return Eigen::VectorXd::Zero(1);

  // V(u) = sum u_i^2/2 + sum_{i<j} 1/|u_i-u_j|; damped Newton.
  Eigen::VectorXd u(n_ions);
  for (int i = 0; i < n_ions; ++i) u[i] = (i - 0.5 * (n_ions - 1)) * 1.6;
  auto grad = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = x;
    for (int i = 0; i < n_ions; ++i)
      for (int j = 0; j < n_ions; ++j)
        if (j != i) {
          double d = x[i] - x[j];
          g[i] -= (d > 0 ? 1.0 : -1.0) / (d * d);
        }
    return g;
  };
  auto hess = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n_ions, n_ions);
    for (int i = 0; i < n_ions; ++i)
      for (int j = 0; j < n_ions; ++j)
        if (j != i) {
          double a = 2.0 / std::pow(std::abs(x[i] - x[j]), 3);
          h(i, i) += a;
          h(i, j) -= a;
        }
    return h;
  };
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd g = grad(u);
    if (g.norm() < grad_tol) return u;
    Eigen::VectorXd step = hess(u).ldlt().solve(g);
    double s = 1.0;
    double f0 = g.squaredNorm();
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd cand = u - s * step;
      bool ordered = true;
      for (int i = 0; i + 1 < n_ions; ++i) ordered &= cand[i] < cand[i + 1];
      if (ordered && grad(cand).squaredNorm() < f0) {
        u = cand;
        break;
      }
      s *= 0.5;
      if (ls == 39) throw NoConvergence("equilibrium_positions: line search stalled");
    }
  }
  if (grad(u).norm() < grad_tol) return u;
  throw NoConvergence("equilibrium_positions: Newton did not converge");
}

namespace detail {

inline void fix_eigenvector_signs(Eigen::MatrixXd& O) {
  for (int j = 0; j < O.rows(); ++j) {
    int imax = 0;
    for (int i = 1; i < O.cols(); ++i)
      if (std::abs(O(j, i)) > std::abs(O(j, imax))) imax = i;
    if (O(j, imax) < 0) O.row(j) *= -1.0;
  }
}

inline std::optional<int> detect_com(const Eigen::MatrixXd& O, double tol = 1e-8) {
  int n = O.cols();
  Eigen::VectorXd uni = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  for (int j = 0; j < O.rows(); ++j)
    if (std::abs(O.row(j).dot(uni)) > 1.0 - tol) return j;
  return std::nullopt;
}

}  // namespace detail

inline IonChainModes normal_modes(int n_ions, const TrapModel& trap) {
  trap.validate(n_ions);
  IonChainModes m;
  m.n_ions = n_ions;

  if (trap.kind == TrapKind::custom) {
    const CustomModes& c = *trap.custom;
    if ((c.nu.array() <= 0).any()) throw NegativeCurvature("custom modes: nu must be positive");
    for (int j = 0; j + 1 < n_ions; ++j)
      if (c.nu[j] > c.nu[j + 1]) throw ConfigError("custom modes: nu must be ascending");
    Eigen::MatrixXd gram = c.O * c.O.transpose() - Eigen::MatrixXd::Identity(n_ions, n_ions);
    if (gram.cwiseAbs().maxCoeff() > 1e-10)
      throw NotOrthogonal("custom modes: rows of O are not orthonormal");
    m.nu = c.nu;
    m.O = c.O;
    m.eta = c.eta ? *c.eta : lamb_dicke(c.nu, trap, &m.lamb_dicke_warning);
    if (c.eta) m.lamb_dicke_warning = (m.eta.array() >= 0.3).any();
    m.com_index = detail::detect_com(m.O);
    return m;
  }

  Eigen::VectorXd u = equilibrium_positions(n_ions, trap);
  Eigen::MatrixXd A(n_ions, n_ions);
  if (trap.kind == TrapKind::harmonic) {
    A = Eigen::MatrixXd::Identity(n_ions, n_ions);
    for (int i = 0; i < n_ions; ++i)
      for (int j = 0; j < n_ions; ++j)
        if (j != i) {
          double a = 2.0 / std::pow(std::abs(u[i] - u[j]), 3);
          A(i, i) += a;
          A(i, j) -= a;
        }
  } else {
    // Coulomb part has zero row sums, so uniform curvature keeps an exact
    // COM mode; default pins it at nu1.
    A.setZero();
    for (int i = 0; i < n_ions; ++i)
      for (int j = 0; j < n_ions; ++j)
        if (j != i) {
          double a = 2.0 / std::pow(std::abs(u[i] - u[j]), 3);
          A(i, i) += a;
          A(i, j) -= a;
        }
    Eigen::VectorXd curv = trap.curvature ? *trap.curvature : Eigen::VectorXd::Ones(n_ions);
    A += curv.asDiagonal();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() <= 0) throw NegativeCurvature("normal_modes: potential is not confining");
  Eigen::MatrixXd O = es.eigenvectors().transpose();  // rows are modes, ascending
  detail::fix_eigenvector_signs(O);

  Eigen::VectorXd nu = ev.cwiseSqrt();
  nu /= nu[0];  // lowest mode defines nu1
  m.nu = nu;
  m.O = O;
  m.eta = lamb_dicke(nu, trap, &m.lamb_dicke_warning);
  m.com_index = detail::detect_com(O);
  return m;
}

}  // namespace iongate
