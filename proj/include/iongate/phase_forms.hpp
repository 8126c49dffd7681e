#pragma once

// Entangling-phase bilinear forms, phase-space trajectories and the
// second-order carrier (Magnus) forms.
//
// Conventions: f_j + i g_j = (2 sqrt(2)/sqrt(N)) eta_j sum_i r_i
// cos(w_i t + phi_i) exp(i nu_j t); alpha_j = F_j + i G_j = Omega
// int (f_j + i g_j); A_j = int F_j dG_j. The Rabi rate Omega is folded into
// the bilinear matrices so that phases are the physical entangling phases.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "iongate/constraints.hpp"
#include "iongate/drive.hpp"
#include "iongate/errors.hpp"
#include "iongate/trap.hpp"
#include "iongate/trig.hpp"

namespace iongate {

struct PhaseForms {
  std::vector<Eigen::MatrixXd> A_tilde;  // N symmetric M x M matrices
};

struct ReducedForms {
  std::vector<Eigen::MatrixXd> C_tilde;  // N-1 symmetric l x l matrices, j = 2..N
  Eigen::VectorXd target_gaps;           // phi_ref_desired - phi_j_desired
  int reference_mode = 0;
};

struct Trajectory {
  Eigen::VectorXd t_grid;
  Eigen::MatrixXcd alpha;  // N x n_t, F_j + i G_j
  Eigen::MatrixXd A;       // N x n_t, entangling phase vs time
  Eigen::VectorXcd alpha_end;
  Eigen::VectorXd A_end;   // phi_j
};

struct CarrierDiagnostics {
  double linear_term = 0.0;      // first-order Magnus J_x coefficient
  Eigen::VectorXcd cc_alpha;     // F_{j,cc} + i G_{j,cc} at T
};

/// Bilinear forms for the second-order carrier trajectories, precomputed so
/// the optimizer can evaluate F_{j,cc} = r^T Fm_j r, G_{j,cc} = r^T Gm_j r.
struct CarrierForms {
  std::vector<Eigen::MatrixXd> F_mats, G_mats;  // N symmetric M x M
  Eigen::VectorXd linear_coeffs;                // per-tone, times Omega
};

namespace detail {

/// tone i's contribution to f_j + i g_j, without the eta and sqrt(N) prefactor.
inline TrigPoly tone_mode_kernel(const ToneBasis& tones, int i, double nu) {
  return TrigPoly::cosine(tones.omega[i], tones.phi[i]) * TrigPoly::expi(nu);
}

}  // namespace detail

/// A-tilde_j: symmetric M x M with r^T A_j r = A_j(T).
inline Eigen::MatrixXd phase_matrix(const IonChainModes& modes, const ToneBasis& tones,
                                    int j, double Omega) {
  if (j < 0 || j >= modes.n_ions) throw DimensionMismatch("phase_matrix: bad mode index");
  int M = tones.n_tones();
  int N = modes.n_ions;
  double pref = Omega * Omega * (8.0 / N) * modes.eta[j] * modes.eta[j];
  TrigPoly cosm = TrigPoly::cosine(modes.nu[j], 0.0);
  TrigPoly sinm = TrigPoly::sine(modes.nu[j], 0.0);
  std::vector<TrigPoly> inner(M);  // int_0^t cos(w_i t'+phi_i) cos(nu t') dt'
  std::vector<TrigPoly> outer(M);  // cos(w_k t+phi_k) sin(nu t)
  for (int i = 0; i < M; ++i) {
    TrigPoly tone = TrigPoly::cosine(tones.omega[i], tones.phi[i]);
    inner[i] = (tone * cosm).antiderivative();
    outer[i] = tone * sinm;
  }
  Eigen::MatrixXd D(M, M);
  for (int i = 0; i < M; ++i)
    for (int k = 0; k < M; ++k) D(i, k) = (inner[i] * outer[k]).integrate(tones.T).real();
  return 0.5 * pref * (D + D.transpose());
}

inline PhaseForms phase_matrices(const IonChainModes& modes, const ToneBasis& tones,
                                 double Omega) {
  PhaseForms pf;
  pf.A_tilde.reserve(modes.n_ions);
  for (int j = 0; j < modes.n_ions; ++j)
    pf.A_tilde.push_back(phase_matrix(modes, tones, j, Omega));
  return pf;
}

/// Phase-space trajectories and accumulated entangling phases, closed form.
inline Trajectory trajectories(const IonChainModes& modes, const ToneBasis& tones,
                               const AmplitudeVector& amps, const Eigen::VectorXd& t_grid) {
  int N = modes.n_ions, M = tones.n_tones();
  if (amps.r.size() != M) throw DimensionMismatch("trajectories: r size != tone count");
  Trajectory tr;
  tr.t_grid = t_grid;
  tr.alpha.resize(N, t_grid.size());
  tr.A.resize(N, t_grid.size());
  tr.alpha_end.resize(N);
  tr.A_end.resize(N);
  for (int j = 0; j < N; ++j) {
    double pref = 2.0 * std::sqrt(2.0 / N) * modes.eta[j];
    TrigPoly fg;  // f_j + i g_j
    for (int i = 0; i < M; ++i) {
      if (amps.r[i] == 0.0) continue;
      fg += detail::tone_mode_kernel(tones, i, modes.nu[j]) *
            std::complex<double>(pref * amps.r[i], 0.0);
    }
    TrigPoly alpha = fg.antiderivative() * std::complex<double>(amps.Omega, 0.0);
    TrigPoly F = alpha.real_part();
    TrigPoly Gdot = fg.imag_part() * std::complex<double>(amps.Omega, 0.0);
    TrigPoly A = (F * Gdot).antiderivative();
    for (int k = 0; k < t_grid.size(); ++k) {
      tr.alpha(j, k) = alpha.eval(t_grid[k]);
      tr.A(j, k) = A.eval(t_grid[k]).real();
    }
    tr.alpha_end[j] = alpha.eval(tones.T);
    tr.A_end[j] = A.eval(tones.T).real();
  }
  return tr;
}

/// C-tilde_j = K^T (A_ref - A_j) K for all modes j != reference.
inline ReducedForms reduced_forms(const Eigen::MatrixXd& K, const PhaseForms& pf,
                                  const Eigen::VectorXd& target_gaps, int reference_mode = 0) {
  int N = int(pf.A_tilde.size());
  if (target_gaps.size() != N - 1)
    throw DimensionMismatch("reduced_forms: need N-1 target gaps");
  if (reference_mode < 0 || reference_mode >= N)
    throw DimensionMismatch("reduced_forms: bad reference mode");
  if (K.rows() != pf.A_tilde[0].rows())
    throw DimensionMismatch("reduced_forms: K and A_tilde disagree on tone count");
  ReducedForms rf;
  rf.reference_mode = reference_mode;
  rf.target_gaps = target_gaps;
  for (int j = 0; j < N; ++j) {
    if (j == reference_mode) continue;
    Eigen::MatrixXd C = K.transpose() * (pf.A_tilde[reference_mode] - pf.A_tilde[j]) * K;
    rf.C_tilde.push_back(0.5 * (C + C.transpose()));
  }
  return rf;
}

/// Second-order Magnus carrier bilinear forms (and the linear J_x term).
inline CarrierForms carrier_forms(const IonChainModes& modes, const ToneBasis& tones,
                                  double Omega) {
  int N = modes.n_ions, M = tones.n_tones();
  CarrierForms cf;
  cf.linear_coeffs.resize(M);
  for (int i = 0; i < M; ++i)
    cf.linear_coeffs[i] =
        Omega * TrigPoly::cosine(tones.omega[i], tones.phi[i]).integrate(tones.T).real();
  for (int j = 0; j < N; ++j) {
    TrigPoly cosm = TrigPoly::cosine(modes.nu[j], 0.0);
    TrigPoly sinm = TrigPoly::sine(modes.nu[j], 0.0);
    double pref = 0.25 * Omega * Omega * modes.eta[j];
    Eigen::MatrixXd Fm(M, M), Gm(M, M);
    std::vector<TrigPoly> inner_q(M), inner_p(M), outer(M);
    for (int m = 0; m < M; ++m) {
      TrigPoly tone = TrigPoly::cosine(tones.omega[m], tones.phi[m]);
      inner_p[m] = (tone * cosm).antiderivative();  // -> G_cc (p-hat coefficient)
      inner_q[m] = (tone * sinm).antiderivative();  // -> F_cc (q-hat coefficient)
      outer[m] = tone;
    }
    for (int n = 0; n < M; ++n)
      for (int m = 0; m < M; ++m) {
        Gm(n, m) = pref * (outer[n] * inner_p[m]).integrate(tones.T).real();
        Fm(n, m) = pref * (outer[n] * inner_q[m]).integrate(tones.T).real();
      }
    cf.F_mats.push_back(0.5 * (Fm + Fm.transpose()));
    cf.G_mats.push_back(0.5 * (Gm + Gm.transpose()));
  }
  return cf;
}

inline CarrierDiagnostics carrier_second_order(const CarrierForms& cf,
                                               const AmplitudeVector& amps) {
  CarrierDiagnostics d;
  d.linear_term = cf.linear_coeffs.dot(amps.r);
  int N = int(cf.F_mats.size());
  d.cc_alpha.resize(N);
  for (int j = 0; j < N; ++j) {
    double F = amps.r.dot(cf.F_mats[j] * amps.r);
    double G = amps.r.dot(cf.G_mats[j] * amps.r);
    d.cc_alpha[j] = std::complex<double>(F, G);
  }
  return d;
}

inline CarrierDiagnostics carrier_second_order(const IonChainModes& modes,
                                               const ToneBasis& tones,
                                               const AmplitudeVector& amps) {
  return carrier_second_order(carrier_forms(modes, tones, amps.Omega), amps);
}

}  // namespace iongate
