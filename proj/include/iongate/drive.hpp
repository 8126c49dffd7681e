#pragma once

// Multi-tone global drive: tone basis, waveform synthesis, power metrics.
// Times are in units of 1/nu1 (so one COM period is 2*pi), frequencies in
// units of nu1.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "iongate/errors.hpp"
#include "iongate/trap.hpp"

namespace iongate {

struct ToneBasis {
  double T = 0.0;             // gate time
  Eigen::VectorXi index;      // harmonic index n (0 when not harmonic)
  Eigen::VectorXd omega;      // tone angular frequencies, ascending
  Eigen::VectorXd phi;        // tone phases
  bool harmonic = false;      // omega_n = 2*pi*n/T, phi = pi/2

  int n_tones() const { return int(omega.size()); }
};

struct AmplitudeVector {
  Eigen::VectorXd r;     // dimensionless signed amplitudes
  double Omega = 1.0;    // characteristic Rabi rate, units of nu1
};

struct PeakMetrics {
  double one_norm = 0.0;
  double peak_power_proxy = 0.0;  // Omega^2 * one_norm^2
};

/// Harmonic tone basis covering [min(nu)-margin, max(nu)+margin].
inline ToneBasis harmonic_basis(double T, const IonChainModes& modes, double margin = 0.35,
                                bool allow_speed_limit = false) {
  if (T <= 0) throw ConfigError("harmonic_basis: T must be positive");
  if (T < M_PI && !allow_speed_limit)
    throw SpeedLimit("harmonic_basis: T below pi/nu1; drive power diverges");
  double lo = modes.nu.minCoeff() - margin;
  double hi = modes.nu.maxCoeff() + margin;
  int nmin = std::max(1, int(std::ceil(lo * T / (2.0 * M_PI) - 1e-12)));
  int nmax = int(std::floor(hi * T / (2.0 * M_PI) + 1e-12));
  if (nmax < nmin) throw ConfigError("harmonic_basis: empty tone window");
  ToneBasis b;
  b.T = T;
  b.harmonic = true;
  int M = nmax - nmin + 1;
  b.index.resize(M);
  b.omega.resize(M);
  b.phi = Eigen::VectorXd::Constant(M, M_PI / 2.0);
  for (int k = 0; k < M; ++k) {
    b.index[k] = nmin + k;
    b.omega[k] = 2.0 * M_PI * (nmin + k) / T;
  }
  return b;
}

/// s(t) = Omega * sum_i r_i cos(omega_i t + phi_i) on the given grid.
inline Eigen::VectorXd waveform(const ToneBasis& tones, const AmplitudeVector& amps,
                                const Eigen::VectorXd& t_grid) {
  Eigen::VectorXd s(t_grid.size());
  for (int k = 0; k < t_grid.size(); ++k) {
    double acc = 0.0;
    for (int i = 0; i < tones.n_tones(); ++i)
      acc += amps.r[i] * std::cos(tones.omega[i] * t_grid[k] + tones.phi[i]);
    s[k] = amps.Omega * acc;
  }
  return s;
}

inline PeakMetrics peak_metrics(const AmplitudeVector& amps) {
  PeakMetrics m;
  m.one_norm = amps.r.cwiseAbs().sum();
  m.peak_power_proxy = amps.Omega * amps.Omega * m.one_norm * m.one_norm;
  return m;
}

}  // namespace iongate
