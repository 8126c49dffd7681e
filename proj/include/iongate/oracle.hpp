#pragma once

// Small-register Schrödinger-equation reference. The drive Hamiltonian
//   H(t) = Omega sum_j [f_j(t) q_j + g_j(t) p_j] J_{y,j}  (+ optional carrier)
// is integrated numerically on the full qubit x Fock space with an adaptive
// Dormand-Prince stepper, with no shared code path with the closed-form
// trajectory expressions. Capped at three ions by design.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/numeric/odeint.hpp>

#include "iongate/drive.hpp"
#include "iongate/errors.hpp"
#include "iongate/phase_forms.hpp"
#include "iongate/trap.hpp"
#include "iongate/trig.hpp"

namespace iongate {

struct FockConfig {
  int n_max = 20;              // Fock levels per mode
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  bool include_carrier = false;
  double leak_tol = 1e-8;      // max allowed population in the top two levels
};

using CVec = std::vector<std::complex<double>>;

class Oracle {
 public:
  Oracle(const IonChainModes& modes, const ToneBasis& tones, const AmplitudeVector& amps,
         FockConfig cfg = {})
      : modes_(modes), tones_(tones), amps_(amps), cfg_(cfg) {
    n_ = modes.n_ions;
    if (n_ > 3) throw DimensionGuard("oracle: register capped at 3 ions");
    if (cfg_.n_max < 3) throw BadParams("oracle: need at least 3 Fock levels");
    qdim_ = std::size_t(1) << n_;
    mdim_ = 1;
    for (int j = 0; j < n_; ++j) mdim_ *= std::size_t(cfg_.n_max);
    dim_ = qdim_ * mdim_;
    build_drives();
  }

  std::size_t dim() const { return dim_; }
  int n_ions() const { return n_; }
  int n_max() const { return cfg_.n_max; }

  /// Index layout: qubit bits are the low field, mode occupations stacked above.
  std::size_t index(std::size_t qubit_bits, const std::vector<int>& occ) const {
    std::size_t m = 0;
    for (int j = n_ - 1; j >= 0; --j) m = m * std::size_t(cfg_.n_max) + std::size_t(occ[j]);
    return m * qdim_ + qubit_bits;
  }

  /// Spin ground state with a definite Fock occupation per mode.
  CVec initial_state(const std::vector<int>& occ) const {
    if (int(occ.size()) != n_) throw DimensionMismatch("oracle: occupation size");
    for (int o : occ)
      if (o < 0 || o >= cfg_.n_max) throw BadParams("oracle: occupation out of range");
    CVec psi(dim_, {0.0, 0.0});
    psi[index(0, occ)] = 1.0;
    return psi;
  }

  void apply_h(double t, const CVec& psi, CVec& dpsi) const {
    std::fill(dpsi.begin(), dpsi.end(), std::complex<double>(0.0, 0.0));
    const double jpref = 0.5 * std::sqrt(double(n_));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const std::size_t nm = std::size_t(cfg_.n_max);
    for (int j = 0; j < n_; ++j) {
      std::complex<double> fg = fg_[j].eval(t);  // f_j + i g_j
      std::complex<double> c_raise = amps_.Omega * fg * inv_sqrt2;          // a^dag
      std::complex<double> c_lower = amps_.Omega * std::conj(fg) * inv_sqrt2;  // a
      std::size_t stride = qdim_;
      for (int k = 0; k < j; ++k) stride *= nm;
      for (std::size_t idx = 0; idx < dim_; ++idx) {
        std::complex<double> amp = psi[idx];
        if (amp == std::complex<double>(0.0, 0.0)) continue;
        int occ_j = int((idx / stride) % nm);
        // J_{y,j} flips one qubit with factor +/- i times the mode weight.
        for (int q = 0; q < n_; ++q) {
          double w = jpref * modes_.O(j, q);
          if (w == 0.0) continue;
          bool bit = (idx >> q) & 1u;
          std::size_t flipped = idx ^ (std::size_t(1) << q);
          // sigma_y |0> = i|1>, sigma_y |1> = -i|0>
          std::complex<double> sy = bit ? std::complex<double>(0.0, -1.0)
                                        : std::complex<double>(0.0, 1.0);
          std::complex<double> base = amp * w * sy;
          if (occ_j + 1 < cfg_.n_max)
            dpsi[flipped + stride] += c_raise * std::sqrt(double(occ_j + 1)) * base;
          if (occ_j > 0)
            dpsi[flipped - stride] += c_lower * std::sqrt(double(occ_j)) * base;
        }
      }
    }
    if (cfg_.include_carrier) {
      double h = 0.0;
      for (int i = 0; i < tones_.n_tones(); ++i)
        h += amps_.r[i] * std::cos(tones_.omega[i] * t + tones_.phi[i]);
      h *= amps_.Omega * 0.5;  // J_x = (1/2) sum_n sigma_x,n
      for (std::size_t idx = 0; idx < dim_; ++idx) {
        std::complex<double> amp = psi[idx];
        if (amp == std::complex<double>(0.0, 0.0)) continue;
        for (int q = 0; q < n_; ++q) dpsi[idx ^ (std::size_t(1) << q)] += h * amp;
      }
    }
  }

  /// Integrate i dpsi/dt = H psi from 0 to t_final.
  CVec evolve(const CVec& psi0, double t_final) const {
    namespace odeint = boost::numeric::odeint;
    CVec psi = psi0;
    CVec scratch(dim_);
    auto rhs = [this, &scratch](const CVec& y, CVec& dydt, double t) {
      apply_h(t, y, scratch);
      dydt.resize(dim_);
      for (std::size_t i = 0; i < dim_; ++i)
        dydt[i] = std::complex<double>(0.0, -1.0) * scratch[i];
    };
    auto stepper = odeint::make_controlled(
        cfg_.abs_tol, cfg_.rel_tol,
        odeint::runge_kutta_dopri5<CVec>());
    odeint::integrate_adaptive(stepper, rhs, psi, 0.0, t_final, t_final / 1024.0);
    check_truncation(psi);
    return psi;
  }

  /// Qubit density matrix after tracing out the motional registers.
  Eigen::MatrixXcd reduced_qubit_density(const CVec& psi) const {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(Eigen::Index(qdim_), Eigen::Index(qdim_));
    for (std::size_t m = 0; m < mdim_; ++m) {
      const std::complex<double>* block = psi.data() + m * qdim_;
      for (std::size_t a = 0; a < qdim_; ++a)
        for (std::size_t b = 0; b < qdim_; ++b)
          rho(Eigen::Index(a), Eigen::Index(b)) += block[a] * std::conj(block[b]);
    }
    return rho;
  }

  struct GhzResult {
    double branch_plus = 0.0;   // GHZ with +i relative phase
    double branch_minus = 0.0;  // GHZ with -i relative phase
    double value = 0.0;
  };

  /// GHZ fidelity of the reduced qubit state, both relative-phase branches.
  GhzResult ghz_fidelity(const Eigen::MatrixXcd& rho) const {
    std::size_t a = 0, b = qdim_ - 1;
    double diag = 0.5 * (rho(Eigen::Index(a), Eigen::Index(a)).real() +
                         rho(Eigen::Index(b), Eigen::Index(b)).real());
    std::complex<double> off = rho(Eigen::Index(a), Eigen::Index(b));
    GhzResult g;
    g.branch_plus = diag + (std::complex<double>(0.0, -1.0) * off).real();
    g.branch_minus = diag + (std::complex<double>(0.0, 1.0) * off).real();
    g.value = std::max(g.branch_plus, g.branch_minus);
    return g;
  }

  /// GHZ fidelity starting from independent thermal modes: Fock-diagonal
  /// mixture with weights truncated once their total reaches 1 - 1e-6.
  GhzResult thermal_ghz_fidelity(double t_final, const Eigen::VectorXd& nbar) const {
    if (nbar.size() != n_) throw DimensionMismatch("oracle: nbar size");
    std::vector<std::vector<double>> pj(n_);
    for (int j = 0; j < n_; ++j) {
      double nb = nbar[j];
      pj[j].resize(cfg_.n_max);
      for (int k = 0; k < cfg_.n_max; ++k)
        pj[j][k] = (1.0 / (nb + 1.0)) * std::pow(nb / (nb + 1.0), k);
    }
    struct Item { std::vector<int> occ; double w; };
    std::vector<Item> items;
    std::vector<int> occ(n_, 0);
    // keep initial occupations in the lower half of the Fock space: a
    // displaced |n> spreads to roughly n + 2 sqrt(n)|a| + |a|^2, so higher
    // starts would trip the truncation guard; the skipped tail carries
    // negligible thermal weight and is renormalized away below
    const int occ_cap = std::max(1, cfg_.n_max / 2);
    std::function<void(int, double)> rec = [&](int j, double w) {
      if (j == n_) { items.push_back({occ, w}); return; }
      for (int k = 0; k < occ_cap; ++k) {
        double ww = w * pj[j][k];
        if (ww < 1e-14) break;
        occ[j] = k;
        rec(j + 1, ww);
      }
      occ[j] = 0;
    };
    rec(0, 1.0);
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.w > b.w; });
    GhzResult g;
    double covered = 0.0;
    for (const Item& it : items) {
      if (covered >= 1.0 - 1e-6) break;
      CVec psi = evolve(initial_state(it.occ), t_final);
      GhzResult one = ghz_fidelity(reduced_qubit_density(psi));
      g.branch_plus += it.w * one.branch_plus;
      g.branch_minus += it.w * one.branch_minus;
      covered += it.w;
    }
    // renormalize for the discarded tail
    g.branch_plus /= covered;
    g.branch_minus /= covered;
    g.value = std::max(g.branch_plus, g.branch_minus);
    return g;
  }

  /// Full numerical propagator, column by column. Expensive; small sizes only.
  Eigen::MatrixXcd propagator(double t_final) const {
    const Eigen::Index d = Eigen::Index(dim_);
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t c = 0; c < dim_; ++c) {
      CVec e(dim_, {0.0, 0.0});
      e[c] = 1.0;
      CVec col;
      {
        // columns with occupation near the cap legitimately leak; skip the check
        namespace odeint = boost::numeric::odeint;
        CVec psi = e;
        CVec scratch(dim_);
        auto rhs = [this, &scratch](const CVec& y, CVec& dydt, double t) {
          apply_h(t, y, scratch);
          dydt.resize(dim_);
          for (std::size_t i = 0; i < dim_; ++i)
            dydt[i] = std::complex<double>(0.0, -1.0) * scratch[i];
        };
        auto stepper = odeint::make_controlled(cfg_.abs_tol, cfg_.rel_tol,
                                               odeint::runge_kutta_dopri5<CVec>());
        odeint::integrate_adaptive(stepper, rhs, psi, 0.0, t_final, t_final / 1024.0);
        col = psi;
      }
      for (std::size_t rr = 0; rr < dim_; ++rr) U(Eigen::Index(rr), Eigen::Index(c)) = col[rr];
    }
    return U;
  }

  /// Closed-form propagator  prod_j exp(+i A_j J^2) exp(-i F q J) exp(-i G p J),
  /// built by exact diagonalization in the collective-spin eigenbasis.
  Eigen::MatrixXcd closed_form_propagator(double t_final) const {
    const int nm = cfg_.n_max;
    // endpoint values from the closed-form trajectories
    Eigen::VectorXd A(n_), F(n_), G(n_);
    for (int j = 0; j < n_; ++j) {
      TrigPoly alpha = fg_[j].antiderivative() * amps_.Omega;
      TrigPoly Fp = alpha.real_part(), Gp = alpha.imag_part();
      std::complex<double> a_end = alpha.eval(t_final);
      F[j] = a_end.real();
      G[j] = a_end.imag();
      A[j] = (Fp * Gp.derivative()).antiderivative().eval(t_final).real();
    }
    // qubit y-basis change: per qubit |y_+-> = (|0> +- i|1>)/sqrt(2)
    Eigen::MatrixXcd V = Eigen::MatrixXcd::Ones(1, 1);
    Eigen::MatrixXcd v1(2, 2);
    const double is2 = 1.0 / std::sqrt(2.0);
    v1 << is2, is2, std::complex<double>(0, is2), std::complex<double>(0, -is2);
    // qubit q is bit q of the flat index, so bit 0 varies fastest
    for (int q = 0; q < n_; ++q) V = Eigen::kroneckerProduct(v1, V).eval();
    // mode ladder operators
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(nm, nm);
    for (int k = 1; k < nm; ++k) a(k - 1, k) = std::sqrt(double(k));
    Eigen::MatrixXcd q_op = (a + a.adjoint()) / std::sqrt(2.0);
    Eigen::MatrixXcd p_op = std::complex<double>(0, 1) * (a.adjoint() - a) / std::sqrt(2.0);

    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(Eigen::Index(dim_), Eigen::Index(dim_));
    const double jpref = 0.5 * std::sqrt(double(n_));
    for (std::size_t alpha_idx = 0; alpha_idx < qdim_; ++alpha_idx) {
      // eigenvalues of each J_{y,j} on this y-bitstring
      Eigen::VectorXd lam(n_);
      for (int j = 0; j < n_; ++j) {
        double acc = 0.0;
        for (int q = 0; q < n_; ++q)
          acc += ((alpha_idx >> q) & 1u) ? -modes_.O(j, q) : modes_.O(j, q);
        lam[j] = jpref * acc;
      }
      // motional factor: tensor product over modes
      Eigen::MatrixXcd M = Eigen::MatrixXcd::Ones(1, 1);
      std::complex<double> phase(1.0, 0.0);
      for (int j = 0; j < n_; ++j) {
        phase *= std::exp(std::complex<double>(0.0, A[j] * lam[j] * lam[j]));
        Eigen::MatrixXcd ef = (std::complex<double>(0, -1) * F[j] * lam[j] * q_op).exp();
        Eigen::MatrixXcd eg = (std::complex<double>(0, -1) * G[j] * lam[j] * p_op).exp();
        M = Eigen::kroneckerProduct((ef * eg).eval(), M).eval();
      }
      // qubit projector onto this y-basis state, in the z basis
      Eigen::VectorXcd v = V.col(Eigen::Index(alpha_idx));
      Eigen::MatrixXcd P = v * v.adjoint();
      U += Eigen::kroneckerProduct(M, (phase * P).eval()).eval();
    }
    return U;
  }

  /// Max |U_numeric - U_closed_form| over a truncated inner block, i.e.
  /// columns and rows whose occupations stay clear of the Fock cap.
  double check_unitary_structure(double t_final, int safe_levels) const {
    Eigen::MatrixXcd Un = propagator(t_final);
    Eigen::MatrixXcd Uc = closed_form_propagator(t_final);
    double worst = 0.0;
    const std::size_t nm = std::size_t(cfg_.n_max);
    auto inner = [&](std::size_t idx) {
      std::size_t m = idx / qdim_;
      for (int j = 0; j < n_; ++j) {
        if (int(m % nm) >= safe_levels) return false;
        m /= nm;
      }
      return true;
    };
    for (std::size_t c = 0; c < dim_; ++c) {
      if (!inner(c)) continue;
      for (std::size_t r = 0; r < dim_; ++r)
        worst = std::max(worst,
                         std::abs(Un(Eigen::Index(r), Eigen::Index(c)) -
                                  Uc(Eigen::Index(r), Eigen::Index(c))));
    }
    return worst;
  }

 private:
  void build_drives() {
    const double pref = 2.0 * std::sqrt(2.0 / double(n_));
    fg_.resize(n_);
    for (int j = 0; j < n_; ++j) {
      TrigPoly sum;
      for (int i = 0; i < tones_.n_tones(); ++i) {
        if (amps_.r[i] == 0.0) continue;
        sum += TrigPoly::cosine(tones_.omega[i], tones_.phi[i]) * amps_.r[i];
      }
      fg_[j] = (sum * TrigPoly::expi(modes_.nu[j])) * (pref * modes_.eta[j]);
    }
  }

  void check_truncation(const CVec& psi) const {
    const std::size_t nm = std::size_t(cfg_.n_max);
    double leak = 0.0;
    for (std::size_t idx = 0; idx < dim_; ++idx) {
      std::size_t m = idx / qdim_;
      bool top = false;
      for (int j = 0; j < n_; ++j) {
        if (int(m % nm) >= cfg_.n_max - 2) top = true;
        m /= nm;
      }
      if (top) leak += std::norm(psi[idx]);
    }
    if (leak > cfg_.leak_tol)
      throw TruncationError("oracle: population reached the Fock-space cap");
  }

  IonChainModes modes_;
  ToneBasis tones_;
  AmplitudeVector amps_;
  FockConfig cfg_;
  int n_ = 0;
  std::size_t qdim_ = 0, mdim_ = 0, dim_ = 0;
  std::vector<TrigPoly> fg_;
};

}  // namespace iongate
