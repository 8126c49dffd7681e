#pragma once

// Reduced quadratic problem: find x with x^T C_j x = gap_j minimizing
// |K x|_1, with a penalty keeping the second-order carrier trajectories
// small. Analytic constructions for the two- and three-ion cases seed a
// multi-start augmented-Lagrangian search with an L-BFGS inner loop.

#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "iongate/errors.hpp"
#include "iongate/phase_forms.hpp"

namespace iongate {

struct SpectralSplit {
  Eigen::MatrixXd psi;       // columns: eigenvectors with positive eigenvalues
  Eigen::VectorXd lambda;    // positive eigenvalues, descending
  Eigen::MatrixXd xi;        // columns: eigenvectors with negative eigenvalues
  Eigen::VectorXd gamma;     // negative eigenvalues, ascending (most negative first)
  Eigen::MatrixXd zero_space;
};

inline SpectralSplit split_spectrum(const Eigen::MatrixXd& D, double rel_tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  double scale = ev.cwiseAbs().maxCoeff();
  double cut = rel_tol * std::max(scale, 1e-300);
  std::vector<int> pos, neg, zer;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > cut) pos.push_back(i);
    else if (ev[i] < -cut) neg.push_back(i);
    else zer.push_back(i);
  }
  SpectralSplit s;
  auto take = [&](const std::vector<int>& idx, Eigen::MatrixXd& V, Eigen::VectorXd* w) {
    V.resize(D.rows(), idx.size());
    if (w) w->resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      V.col(int(k)) = es.eigenvectors().col(idx[k]);
      if (w) (*w)[int(k)] = ev[idx[k]];
    }
  };
  std::reverse(pos.begin(), pos.end());  // descending eigenvalues
  take(pos, s.psi, &s.lambda);
  take(neg, s.xi, &s.gamma);
  take(zer, s.zero_space, nullptr);
  return s;
}

struct GateSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd r;
  Eigen::VectorXd phases;          // phi_j = r^T A_tilde_j r
  Eigen::VectorXd quad_residuals;  // x^T C_j x - gap_j
  double closure_residual = 0.0;   // max |L r| (when L supplied)
  double cc_penalty = 0.0;         // sum_j F_cc^2 + G_cc^2
  double one_norm = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool feasible = false;
  bool degenerate = false;
  int phase_sign = +1;
};

/// Two-ion solution: scaled top eigenvector of the single reduced form.
inline Eigen::VectorXd solve_two_ion(const Eigen::MatrixXd& C2, double gap, int* phase_sign) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C2);
  const Eigen::VectorXd& ev = es.eigenvalues();
  double scale = ev.cwiseAbs().maxCoeff();
  if (scale < 1e-14) throw ZeroMatrix("solve_two_ion: reduced form is zero");
  // largest eigenvalue of the same sign as the gap if available, else the
  // largest magnitude (realizes -gap, flagged).
  int best = -1;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] * gap > 0 && (best < 0 || std::abs(ev[i]) > std::abs(ev[best]))) best = i;
  }
  int sign = +1;
  if (best < 0) {
    for (int i = 0; i < ev.size(); ++i)
      if (best < 0 || std::abs(ev[i]) > std::abs(ev[best])) best = i;
    sign = -1;
  }
  if (phase_sign) *phase_sign = sign;
  return es.eigenvectors().col(best) * std::sqrt(std::abs(gap / ev[best]));
}

/// Three-ion constructive solution: x = C (psi_i + sqrt(lambda_i/|gamma_j|) xi_j)
/// with D = C2 - C3, normalized on C2.
inline Eigen::VectorXd solve_three_ion(const Eigen::MatrixXd& C2, const Eigen::MatrixXd& C3,
                                       double gap, int* phase_sign) {
  SpectralSplit s = split_spectrum(C2 - C3);
  if (s.lambda.size() == 0 || s.gamma.size() == 0)
    throw Infeasible("solve_three_ion: D3 is sign-definite");
  for (int i = 0; i < s.lambda.size(); ++i) {
    for (int j = 0; j < s.gamma.size(); ++j) {
      Eigen::VectorXd x =
          s.psi.col(i) + std::sqrt(s.lambda[i] / std::abs(s.gamma[j])) * s.xi.col(j);
      double c2 = x.dot(C2 * x);
      if (std::abs(c2) < 1e-10 * C2.cwiseAbs().maxCoeff() * x.squaredNorm()) continue;
      int sign = (c2 * gap > 0) ? +1 : -1;
      if (phase_sign) *phase_sign = sign;
      return x * std::sqrt(std::abs(gap / c2));
    }
  }
  throw DegenerateDirection("solve_three_ion: every candidate annihilates C2");
}

/// Rescale x so x^T D x = 0 exactly (first D only), then normalize on C2.
inline Eigen::VectorXd renormalize_feasible(const Eigen::VectorXd& x,
                                            const std::vector<Eigen::MatrixXd>& D_list,
                                            const Eigen::MatrixXd& C2, double gap) {
  Eigen::VectorXd y = x;
  if (!D_list.empty()) {
    SpectralSplit s = split_spectrum(D_list.front());
    Eigen::VectorXd a = s.psi.transpose() * y;
    Eigen::VectorXd b = s.xi.transpose() * y;
    double na2 = 0.0, nb2 = 0.0;
    for (int i = 0; i < a.size(); ++i) na2 += a[i] * a[i] * s.lambda[i];
    for (int j = 0; j < b.size(); ++j) nb2 += b[j] * b[j] * std::abs(s.gamma[j]);
    if (na2 <= 0.0 || nb2 <= 0.0)
      throw ProjectionFailed("renormalize_feasible: no component in a required subspace");
    double sa = std::sqrt(std::sqrt(nb2 / na2));
    double sb = 1.0 / sa;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(y.size());
    if (s.zero_space.cols() > 0) z = s.zero_space * (s.zero_space.transpose() * y);
    y = s.psi * (sa * a) + s.xi * (sb * b) + z;
  }
  double c2 = y.dot(C2 * y);
  if (std::abs(c2) < 1e-14) throw ProjectionFailed("renormalize_feasible: x annihilates C2");
  return y * std::sqrt(std::abs(gap / c2));
}

struct SolverOptions {
  std::uint64_t seed = 0;
  int restarts = 32;
  int max_iterations = 4000;   // inner L-BFGS iteration budget per restart
  double tol_quad = 1e-6;      // per-gap tolerance (rad)
  double tol_cc = 4e-5;        // bound on sum_j (F_cc^2 + G_cc^2)
  bool global_stage = false;
  double smooth_eps = 1e-8;
};

namespace detail {

/// L-BFGS with Armijo backtracking. f(x, grad) returns the value and fills grad.
template <typename F>
inline int lbfgs_minimize(Eigen::VectorXd& x, F&& f, int max_iter, double grad_tol) {
  const int mem = 10;
  std::deque<Eigen::VectorXd> sv, yv;
  std::deque<double> rho;
  Eigen::VectorXd g(x.size()), gp(x.size());
  double fx = f(x, g);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (g.norm() < grad_tol * std::max(1.0, x.norm())) break;
    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha(sv.size());
    for (int i = int(sv.size()) - 1; i >= 0; --i) {
      alpha[i] = rho[i] * sv[i].dot(q);
      q -= alpha[i] * yv[i];
    }
    if (!sv.empty()) {
      double gamma = sv.back().dot(yv.back()) / yv.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t i = 0; i < sv.size(); ++i) {
      double beta = rho[i] * yv[i].dot(q);
      q += (alpha[i] - beta) * sv[i];
    }
    Eigen::VectorXd d = -q;
    double dg = d.dot(g);
    if (dg >= 0) {  // not a descent direction; reset
      d = -g;
      dg = -g.squaredNorm();
      sv.clear(); yv.clear(); rho.clear();
    }
    double step = sv.empty() ? std::min(1.0, 1.0 / std::max(g.norm(), 1e-12)) : 1.0;
    Eigen::VectorXd xp = x;
    gp = g;
    double fp = fx;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x = xp + step * d;
      fx = f(x, g);
      if (std::isfinite(fx) && fx <= fp + 1e-4 * step * dg) { accepted = true; break; }
      step *= 0.5;
    }
    if (!accepted) { x = xp; g = gp; fx = fp; break; }
    Eigen::VectorXd s = x - xp, yk = g - gp;
    double sy = s.dot(yk);
    if (sy > 1e-12 * s.norm() * yk.norm()) {
      sv.push_back(s); yv.push_back(yk); rho.push_back(1.0 / sy);
      if (int(sv.size()) > mem) { sv.pop_front(); yv.pop_front(); rho.pop_front(); }
    }
  }
  return it;
}

}  // namespace detail

/// Certified infeasibility: if x^T C_j x = g_j for all j then the cross form
/// C_j/g_j - C_1/g_1 annihilates x; a sign-definite cross form is a proof.
inline bool certified_infeasible(const ReducedForms& rf, double rel_tol = 1e-12) {
  int n = int(rf.C_tilde.size());
  if (n < 2) return false;
  for (int j = 1; j < n; ++j) {
    double g0 = rf.target_gaps[0], gj = rf.target_gaps[j];
    if (g0 == 0.0 || gj == 0.0) continue;
    Eigen::MatrixXd D = rf.C_tilde[0] / g0 - rf.C_tilde[j] / gj;
    SpectralSplit s = split_spectrum(D, rel_tol);
    if ((s.lambda.size() == 0) != (s.gamma.size() == 0)) {
      if (s.zero_space.cols() == 0) return true;
    }
  }
  return false;
}

inline GateSolution optimize(const ReducedForms& rf, const Eigen::MatrixXd& K,
                             const PhaseForms& pf, const CarrierForms* cf,
                             const SolverOptions& opt,
                             const Eigen::MatrixXd* L_for_residual = nullptr) {
  const int l = int(K.cols());
  const int nc = int(rf.C_tilde.size());
  if (l < 1) throw EmptyNullSpace("optimize: empty null space");

  auto finish = [&](const Eigen::VectorXd& x, std::uint64_t seed, int iters,
                    bool degenerate) {
    GateSolution s;
    s.x = x;
    s.r = K * x;
    s.seed = seed;
    s.iterations = iters;
    s.degenerate = degenerate;
    s.one_norm = s.r.cwiseAbs().sum();
    s.quad_residuals.resize(nc);
    for (int j = 0; j < nc; ++j)
      s.quad_residuals[j] = x.dot(rf.C_tilde[j] * x) - rf.target_gaps[j];
    s.phases.resize(int(pf.A_tilde.size()));
    for (std::size_t j = 0; j < pf.A_tilde.size(); ++j)
      s.phases[int(j)] = s.r.dot(pf.A_tilde[j] * s.r);
    s.cc_penalty = 0.0;
    if (cf) {
      for (std::size_t j = 0; j < cf->F_mats.size(); ++j) {
        double F = s.r.dot(cf->F_mats[j] * s.r);
        double G = s.r.dot(cf->G_mats[j] * s.r);
        s.cc_penalty += F * F + G * G;
      }
    }
    if (L_for_residual && L_for_residual->rows() > 0)
      s.closure_residual = (*L_for_residual * s.r).cwiseAbs().maxCoeff();
    double qr = nc ? s.quad_residuals.cwiseAbs().maxCoeff() : 0.0;
    s.feasible = qr < opt.tol_quad && (!cf || s.cc_penalty < opt.tol_cc);
    return s;
  };

  // All gaps zero: the zero drive is the (degenerate) optimum.
  if (nc == 0 || rf.target_gaps.cwiseAbs().maxCoeff() == 0.0)
    return finish(Eigen::VectorXd::Zero(l), opt.seed, 0, true);

  if (certified_infeasible(rf))
    throw Infeasible("optimize: cross form is sign-definite; target gaps unreachable");

  // Feasibility projection data for random starts.
  std::vector<Eigen::MatrixXd> D_list;
  for (int j = 1; j < nc; ++j)
    D_list.push_back(rf.C_tilde[0] / rf.target_gaps[0] - rf.C_tilde[j] / rf.target_gaps[j]);

  // Objective pieces.
  const double eps = opt.smooth_eps;
  auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad, double w_cc) {
    Eigen::VectorXd r = K * x;
    double f = 0.0;
    Eigen::VectorXd u(r.size());
    for (int i = 0; i < r.size(); ++i) {
      double s = std::sqrt(r[i] * r[i] + eps * eps);
      f += s;
      u[i] = r[i] / s;
    }
    Eigen::VectorXd gr = u;
    if (cf && w_cc > 0) {
      for (std::size_t j = 0; j < cf->F_mats.size(); ++j) {
        double F = r.dot(cf->F_mats[j] * r);
        double G = r.dot(cf->G_mats[j] * r);
        f += w_cc * (F * F + G * G);
        gr += w_cc * (4.0 * F * (cf->F_mats[j] * r) + 4.0 * G * (cf->G_mats[j] * r));
      }
    }
    grad = K.transpose() * gr;
    return f;
  };

  auto constraints = [&](const Eigen::VectorXd& x, Eigen::VectorXd& c, Eigen::MatrixXd& Jt) {
    c.resize(nc);
    Jt.resize(l, nc);  // columns are gradients 2 C_j x
    for (int j = 0; j < nc; ++j) {
      Eigen::VectorXd Cx = rf.C_tilde[j] * x;
      c[j] = x.dot(Cx) - rf.target_gaps[j];
      Jt.col(j) = 2.0 * Cx;
    }
  };

  // Gauss-Newton projection onto the constraint manifold.
  auto polish = [&](Eigen::VectorXd& x) {
    Eigen::VectorXd c;
    Eigen::MatrixXd Jt;
    for (int it = 0; it < 60; ++it) {
      constraints(x, c, Jt);
      if (c.cwiseAbs().maxCoeff() < 1e-13) return true;
      Eigen::MatrixXd J = Jt.transpose();
      Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-c);
      if (!step.allFinite()) return false;
      x += step;
    }
    constraints(x, c, Jt);
    return c.cwiseAbs().maxCoeff() < 1e-10;
  };

  auto run_restart = [&](Eigen::VectorXd x0, std::uint64_t seed) -> GateSolution {
    double w_cc = cf ? 1.0 / opt.tol_cc : 0.0;
    GateSolution best_local;
    bool have_local = false;
    for (int round = 0; round < (cf ? 4 : 1); ++round) {
      Eigen::VectorXd x = x0;
      Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nc);
      double mu = 10.0;
      int iters = 0;
      double prev_cnorm = std::numeric_limits<double>::infinity();
      for (int outer = 0; outer < 40; ++outer) {
        auto merit = [&](const Eigen::VectorXd& xx, Eigen::VectorXd& g) {
          Eigen::VectorXd gobj;
          double f = objective(xx, gobj, w_cc);
          Eigen::VectorXd c;
          Eigen::MatrixXd Jt;
          constraints(xx, c, Jt);
          g = gobj;
          for (int j = 0; j < nc; ++j) {
            f += lambda[j] * c[j] + 0.5 * mu * c[j] * c[j];
            g += (lambda[j] + mu * c[j]) * Jt.col(j);
          }
          return f;
        };
        double gtol = std::max(1e-10, 1e-4 * std::pow(0.3, outer));
        iters += detail::lbfgs_minimize(x, merit,
                                        std::max(50, opt.max_iterations / 20), gtol);
        Eigen::VectorXd c;
        Eigen::MatrixXd Jt;
        constraints(x, c, Jt);
        double cn = c.cwiseAbs().maxCoeff();
        lambda += mu * c;
        if (cn > 0.25 * prev_cnorm) mu = std::min(mu * 5.0, 1e12);
        prev_cnorm = cn;
        if (cn < 1e-9 && iters > opt.max_iterations / 4) break;
        if (iters > opt.max_iterations) break;
      }
      polish(x);
      GateSolution cand = finish(x, seed, iters, false);
      if (!have_local || (cand.feasible && !best_local.feasible) ||
          (cand.feasible == best_local.feasible && cand.one_norm < best_local.one_norm)) {
        best_local = cand;
        have_local = true;
      }
      if (!cf || cand.cc_penalty < opt.tol_cc) break;
      w_cc *= 10.0;  // carrier penalty too lax; tighten and retry
    }
    return best_local;
  };

  // Starting points: analytic constructions plus projected random draws.
  std::vector<Eigen::VectorXd> starts;
  double gap0 = rf.target_gaps[0];
  try {
    int ps = 0;
    if (nc == 1) starts.push_back(solve_two_ion(rf.C_tilde[0], gap0, &ps));
    else starts.push_back(solve_three_ion(rf.C_tilde[0],
                                          rf.C_tilde[0] - D_list[0] * gap0, gap0, &ps));
  } catch (const Error&) {
    // fall through to random starts
  }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (int(starts.size()) < std::max(1, opt.restarts)) {
    Eigen::VectorXd x(l);
    for (int i = 0; i < l; ++i) x[i] = gauss(rng);
    try {
      x = renormalize_feasible(x, D_list, rf.C_tilde[0], gap0);
    } catch (const Error&) {
      double c2 = x.dot(rf.C_tilde[0] * x);
      if (std::abs(c2) > 1e-14) x *= std::sqrt(std::abs(gap0 / c2));
    }
    starts.push_back(x);
  }

  GateSolution best;
  bool have = false;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    GateSolution cand = run_restart(starts[k], opt.seed + k);
    if (!have || (cand.feasible && !best.feasible) ||
        (cand.feasible == best.feasible && cand.one_norm < best.one_norm)) {
      best = cand;
      have = true;
    }
  }
  return best;
}

}  // namespace iongate
