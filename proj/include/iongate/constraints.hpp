#pragma once

// Linear constraint assembly: trajectory closure, robustness families,
// first-order carrier suppression, and the orthonormal null-space basis.
// All row entries are exact closed forms via TrigPoly; per-row eta
// prefactors are kept (they never change the null space).

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "iongate/drive.hpp"
#include "iongate/errors.hpp"
#include "iongate/trap.hpp"
#include "iongate/trig.hpp"

namespace iongate {

enum class RowKind {
  closure_cos,
  closure_sin,
  robust_timing_cos,
  robust_timing_sin,
  robust_freq_cos,
  robust_freq_sin,
  robust_optical_cos,
  robust_optical_sin,
  carrier_linear,
};

struct RowTag {
  RowKind kind;
  int mode = -1;   // -1 for carrier_linear
  int order = 1;   // timing-robustness derivative order
};

inline std::string to_string(const RowTag& t) {
  auto base = [&]() -> std::string {
    switch (t.kind) {
      case RowKind::closure_cos: return "closure_cos";
      case RowKind::closure_sin: return "closure_sin";
      case RowKind::robust_timing_cos: return "robust_timing_cos";
      case RowKind::robust_timing_sin: return "robust_timing_sin";
      case RowKind::robust_freq_cos: return "robust_freq_cos";
      case RowKind::robust_freq_sin: return "robust_freq_sin";
      case RowKind::robust_optical_cos: return "robust_optical_cos";
      case RowKind::robust_optical_sin: return "robust_optical_sin";
      case RowKind::carrier_linear: return "carrier_linear";
    }
    return "?";
  }();
  if (t.mode >= 0) base += "(" + std::to_string(t.mode) + ")";
  if (t.order > 1) base += "#" + std::to_string(t.order);
  return base;
}

struct TaggedRows {
  Eigen::MatrixXd rows;  // R x M
  std::vector<RowTag> tags;
  bool harmonic_trivial = false;  // every row identically zero
};

struct ConstraintSystem {
  Eigen::MatrixXd L;          // after zero-row removal
  std::vector<RowTag> row_tags;
  Eigen::MatrixXd K;          // M x l, orthonormal null basis
  int l = 0;
  double sv_tolerance = 1e-10;
};

/// Closure rows, one pair per mode: int cos(w_i t + phi_i) {cos,sin}(nu_j t).
inline TaggedRows closure_rows(const IonChainModes& modes, const ToneBasis& tones) {
  int N = modes.n_ions, M = tones.n_tones();
  TaggedRows out;
  out.rows.resize(2 * N, M);
  for (int j = 0; j < N; ++j) {
    TrigPoly cosm = TrigPoly::cosine(modes.nu[j], 0.0);
    TrigPoly sinm = TrigPoly::sine(modes.nu[j], 0.0);
    for (int i = 0; i < M; ++i) {
      TrigPoly tone = TrigPoly::cosine(tones.omega[i], tones.phi[i]);
      out.rows(j, i) = (tone * cosm).integrate(tones.T).real();
      out.rows(N + j, i) = (tone * sinm).integrate(tones.T).real();
    }
    out.tags.push_back({RowKind::closure_cos, j});
  }
  for (int j = 0; j < N; ++j) out.tags.push_back({RowKind::closure_sin, j});
  return out;
}

/// Timing-robustness rows of order k: the (k-1)'th derivative of f_j, g_j at T.
/// For the harmonic basis the order-1 rows vanish identically.
inline TaggedRows timing_robust_rows(const IonChainModes& modes, const ToneBasis& tones,
                                     int order = 1) {
  int N = modes.n_ions, M = tones.n_tones();
  TaggedRows out;
  out.rows.resize(2 * N * order, M);
  int row = 0;
  for (int k = 1; k <= order; ++k) {
    for (int j = 0; j < N; ++j) {
      TrigPoly cosm = TrigPoly::cosine(modes.nu[j], 0.0);
      TrigPoly sinm = TrigPoly::sine(modes.nu[j], 0.0);
      for (int i = 0; i < M; ++i) {
        TrigPoly tone = TrigPoly::cosine(tones.omega[i], tones.phi[i]);
        TrigPoly fc = tone * cosm;
        TrigPoly fs = tone * sinm;
        for (int d = 1; d < k; ++d) {
          fc = fc.derivative();
          fs = fs.derivative();
        }
        out.rows(row, i) = modes.eta[j] * fc.eval(tones.T).real();
        out.rows(row + 1, i) = modes.eta[j] * fs.eval(tones.T).real();
      }
      out.tags.push_back({RowKind::robust_timing_cos, j, k});
      out.tags.push_back({RowKind::robust_timing_sin, j, k});
      row += 2;
    }
  }
  out.harmonic_trivial = out.rows.cwiseAbs().maxCoeff() < 1e-12;
  return out;
}

/// Mode-frequency / heating robustness: int_0^T F_j = int_0^T G_j = 0.
inline TaggedRows freq_robust_rows(const IonChainModes& modes, const ToneBasis& tones) {
  int N = modes.n_ions, M = tones.n_tones();
  TaggedRows out;
  out.rows.resize(2 * N, M);
  for (int j = 0; j < N; ++j) {
    TrigPoly cosm = TrigPoly::cosine(modes.nu[j], 0.0);
    TrigPoly sinm = TrigPoly::sine(modes.nu[j], 0.0);
    for (int i = 0; i < M; ++i) {
      TrigPoly tone = TrigPoly::cosine(tones.omega[i], tones.phi[i]);
      out.rows(j, i) = modes.eta[j] * (tone * cosm).antiderivative().integrate(tones.T).real();
      out.rows(N + j, i) = modes.eta[j] * (tone * sinm).antiderivative().integrate(tones.T).real();
    }
    out.tags.push_back({RowKind::robust_freq_cos, j});
  }
  for (int j = 0; j < N; ++j) out.tags.push_back({RowKind::robust_freq_sin, j});
  return out;
}

/// Optical-phase-drift robustness: d(closure)/d(phi) = 0.
inline TaggedRows optical_robust_rows(const IonChainModes& modes, const ToneBasis& tones) {
  int N = modes.n_ions, M = tones.n_tones();
  TaggedRows out;
  out.rows.resize(2 * N, M);
  for (int j = 0; j < N; ++j) {
    TrigPoly cosm = TrigPoly::cosine(modes.nu[j], 0.0);
    TrigPoly sinm = TrigPoly::sine(modes.nu[j], 0.0);
    for (int i = 0; i < M; ++i) {
      TrigPoly dtone = TrigPoly::sine(tones.omega[i], tones.phi[i]) * std::complex<double>(-1.0, 0.0);
      out.rows(j, i) = modes.eta[j] * (dtone * cosm).integrate(tones.T).real();
      out.rows(N + j, i) = modes.eta[j] * (dtone * sinm).integrate(tones.T).real();
    }
    out.tags.push_back({RowKind::robust_optical_cos, j});
  }
  for (int j = 0; j < N; ++j) out.tags.push_back({RowKind::robust_optical_sin, j});
  return out;
}

/// First-order Magnus carrier row: entries cos(omega_i T + phi_i).
inline TaggedRows carrier_linear_row(const ToneBasis& tones) {
  TaggedRows out;
  out.rows.resize(1, tones.n_tones());
  for (int i = 0; i < tones.n_tones(); ++i)
    out.rows(0, i) = std::cos(tones.omega[i] * tones.T + tones.phi[i]);
  out.tags.push_back({RowKind::carrier_linear, -1});
  out.harmonic_trivial = out.rows.cwiseAbs().maxCoeff() < 1e-12;
  return out;
}

/// Orthonormal null basis of L by SVD. L should have zero rows removed.
inline Eigen::MatrixXd null_basis(const Eigen::MatrixXd& L, double tolerance = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(L, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double smax = sv.size() ? sv[0] : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tolerance * smax) ++rank;
  int l = int(L.cols()) - rank;
  if (l <= 0)
    throw EmptyNullSpace("null_basis: constraint matrix has no null space; add tones");
  return svd.matrixV().rightCols(l);
}

/// Stack row families, drop zero rows, compute the null basis.
inline ConstraintSystem assemble(const std::vector<TaggedRows>& families, int n_tones,
                                 double sv_tolerance = 1e-10) {
  std::vector<Eigen::RowVectorXd> keep;
  std::vector<RowTag> tags;
  double scale = 0.0;
  for (const auto& fam : families) scale = std::max(scale, fam.rows.cwiseAbs().maxCoeff());
  for (const auto& fam : families) {
    for (int i = 0; i < fam.rows.rows(); ++i) {
      if (fam.rows.row(i).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0)) {
        keep.push_back(fam.rows.row(i));
        tags.push_back(fam.tags[i]);
      }
    }
  }
  ConstraintSystem sys;
  sys.sv_tolerance = sv_tolerance;
  sys.L.resize(int(keep.size()), n_tones);
  for (std::size_t i = 0; i < keep.size(); ++i) sys.L.row(int(i)) = keep[i];
  sys.row_tags = std::move(tags);
  sys.K = sys.L.rows() ? null_basis(sys.L, sv_tolerance)
                       : Eigen::MatrixXd::Identity(n_tones, n_tones);
  sys.l = int(sys.K.cols());
  return sys;
}

}  // namespace iongate
