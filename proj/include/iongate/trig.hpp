#pragma once

// Exact integration of products of sinusoids.
//
// Everything the gate design needs to integrate is a product of cosines and
// complex exponentials of t, so every integrand can be written as a finite
// sum of terms c * t^p * exp(i*mu*t). That family is closed under products,
// derivatives and antiderivatives, which gives closed forms for all closure
// rows, phase bilinear forms, robustness rows and carrier trajectories,
// including the degenerate tone-on-mode limits (a frequency that cancels to
// zero simply lands in the polynomial branch).

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace iongate {

class TrigPoly {
 public:
  struct Term {
    std::complex<double> c;
    double mu;  // angular frequency of exp(i*mu*t)
    int p;      // power of t
  };

  // Frequencies closer than this are merged; a frequency below it is treated
  // as exactly zero. Callers work in units where nu1 = 1, so an absolute
  // cutoff is adequate.
  static constexpr double kFreqTol = 1e-9;

  TrigPoly() = default;
  explicit TrigPoly(std::vector<Term> terms) : terms_(std::move(terms)) { normalize(); }

  static TrigPoly constant(std::complex<double> c) {
    return TrigPoly({{c, 0.0, 0}});
  }
  /// exp(i*w*t)
  static TrigPoly expi(double w) { return TrigPoly({{{1.0, 0.0}, w, 0}}); }
  /// cos(w*t + ph)
  static TrigPoly cosine(double w, double ph) {
    const std::complex<double> i(0.0, 1.0);
    return TrigPoly({{0.5 * std::exp(i * ph), w, 0}, {0.5 * std::exp(-i * ph), -w, 0}});
  }
  /// sin(w*t + ph)
  static TrigPoly sine(double w, double ph) {
    const std::complex<double> i(0.0, 1.0);
    return TrigPoly({{-0.5 * i * std::exp(i * ph), w, 0}, {0.5 * i * std::exp(-i * ph), -w, 0}});
  }

  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  TrigPoly& operator+=(const TrigPoly& o) {
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    normalize();
    return *this;
  }
  friend TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }

  TrigPoly& operator*=(std::complex<double> s) {
    for (auto& t : terms_) t.c *= s;
    return *this;
  }
  friend TrigPoly operator*(TrigPoly a, std::complex<double> s) { return a *= s; }
  friend TrigPoly operator*(std::complex<double> s, TrigPoly a) { return a *= s; }

  friend TrigPoly operator*(const TrigPoly& a, const TrigPoly& b) {
    std::vector<Term> out;
    out.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& x : a.terms_)
      for (const auto& y : b.terms_) out.push_back({x.c * y.c, x.mu + y.mu, x.p + y.p});
    return TrigPoly(std::move(out));
  }

  /// Complex conjugate as a function of real t.
  TrigPoly conj() const {
    std::vector<Term> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) out.push_back({std::conj(t.c), -t.mu, t.p});
    return TrigPoly(std::move(out));
  }

  TrigPoly real_part() const {
    TrigPoly r = *this + conj();
    return r * std::complex<double>(0.5, 0.0);
  }
  TrigPoly imag_part() const {
    TrigPoly r = *this + conj() * std::complex<double>(-1.0, 0.0);
    return r * std::complex<double>(0.0, -0.5);
  }

  TrigPoly derivative() const {
    const std::complex<double> i(0.0, 1.0);
    std::vector<Term> out;
    for (const auto& t : terms_) {
      if (std::abs(t.mu) > kFreqTol) out.push_back({t.c * i * t.mu, t.mu, t.p});
      if (t.p > 0) out.push_back({t.c * double(t.p), t.mu, t.p - 1});
    }
    return TrigPoly(std::move(out));
  }

  /// Definite integral from 0 to t, returned as a function of t.
  TrigPoly antiderivative() const {
    const std::complex<double> i(0.0, 1.0);
    std::vector<Term> out;
    for (const auto& t : terms_) {
      if (std::abs(t.mu) <= kFreqTol) {
        out.push_back({t.c / double(t.p + 1), 0.0, t.p + 1});
        continue;
      }
      // int_0^t s^p e^{i mu s} ds, by parts:
      //   coefficient of t^k e^{i mu t} is a_k; the k=0 coefficient also
      //   appears negated as the constant from the lower limit.
      std::complex<double> a = 1.0 / (i * t.mu);
      // a_k built from k = p down to 0
      std::vector<std::complex<double>> coef(t.p + 1);
      coef[t.p] = a;
      for (int k = t.p - 1; k >= 0; --k) coef[k] = -coef[k + 1] * double(k + 1) * a;
      for (int k = 0; k <= t.p; ++k) out.push_back({t.c * coef[k], t.mu, k});
      out.push_back({-t.c * coef[0], 0.0, 0});
    }
    return TrigPoly(std::move(out));
  }

  std::complex<double> eval(double t) const {
    const std::complex<double> i(0.0, 1.0);
    std::complex<double> acc(0.0, 0.0), comp(0.0, 0.0);
    for (const auto& term : terms_) {
      std::complex<double> v = term.c * std::exp(i * term.mu * t);
      for (int k = 0; k < term.p; ++k) v *= t;
      // Kahan step; coefficients of nearly-degenerate terms can be large.
      std::complex<double> y = v - comp;
      std::complex<double> s = acc + y;
      comp = (s - acc) - y;
      acc = s;
    }
    return acc;
  }

  /// int_0^T of this poly.
  std::complex<double> integrate(double T) const { return antiderivative().eval(T); }

 private:
  void normalize() {
    std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) {
      if (a.p != b.p) return a.p < b.p;
      return a.mu < b.mu;
    });
    std::vector<Term> merged;
    for (const auto& t : terms_) {
      if (!merged.empty() && merged.back().p == t.p &&
          std::abs(merged.back().mu - t.mu) <= kFreqTol) {
        merged.back().c += t.c;
      } else {
        merged.push_back(t);
        if (std::abs(merged.back().mu) <= kFreqTol) merged.back().mu = 0.0;
      }
    }
    std::erase_if(merged, [](const Term& t) { return std::abs(t.c) == 0.0; });
    terms_ = std::move(merged);
  }

  std::vector<Term> terms_;
};

}  // namespace iongate
