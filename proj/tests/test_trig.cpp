// Closed-form trigonometric-polynomial engine vs an independent quadrature
// oracle, including the degenerate (resonant) frequency limits.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "iongate/trig.hpp"
#include "support/quadrature.hpp"

using iongate::TrigPoly;
using testsupport::integrate;

TEST_CASE("factories evaluate to their defining functions") {
  double mu = 1.7, phi = 0.4;
  for (double t : {0.0, 0.3, 2.9, 11.0}) {
    CHECK(TrigPoly::cosine(mu, phi).eval(t).real() == Catch::Approx(std::cos(mu * t + phi)));
    CHECK(TrigPoly::sine(mu, phi).eval(t).real() == Catch::Approx(std::sin(mu * t + phi)));
    CHECK(TrigPoly::expi(mu).eval(t).real() == Catch::Approx(std::cos(mu * t)));
    CHECK(TrigPoly::expi(mu).eval(t).imag() == Catch::Approx(std::sin(mu * t)));
    CHECK(TrigPoly::constant({2.0, -1.0}).eval(t) == std::complex<double>(2.0, -1.0));
  }
}

TEST_CASE("product and antiderivative match quadrature on random inputs") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> freq(0.1, 4.0), phase(0.0, 6.28), tdist(0.5, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    double w1 = freq(rng), w2 = freq(rng), p1 = phase(rng), p2 = phase(rng);
    double T = tdist(rng);
    TrigPoly prod = TrigPoly::cosine(w1, p1) * TrigPoly::sine(w2, p2);
    auto f = [&](double t) { return std::cos(w1 * t + p1) * std::sin(w2 * t + p2); };
    double closed = prod.integrate(T).real();
    double quad = integrate(f, 0.0, T);
    CHECK(closed == Catch::Approx(quad).margin(1e-11));
    // antiderivative starts at zero and differentiates back
    TrigPoly F = prod.antiderivative();
    CHECK(std::abs(F.eval(0.0)) < 1e-14);
    double tm = 0.37 * T;
    CHECK(F.eval(tm).real() == Catch::Approx(integrate(f, 0.0, tm)).margin(1e-11));
  }
}

TEST_CASE("degenerate frequencies fall into the polynomial branch") {
  double w = 2.0, T = 7.3;
  // cos(wt)*cos(wt) integrates to T/2 + sin(2wT)/(4w)
  TrigPoly sq = TrigPoly::cosine(w, 0.0) * TrigPoly::cosine(w, 0.0);
  CHECK(sq.integrate(T).real() ==
        Catch::Approx(T / 2.0 + std::sin(2 * w * T) / (4 * w)).epsilon(1e-12));
  // e^{iwt} * e^{-iwt} = 1
  TrigPoly one = TrigPoly::expi(w) * TrigPoly::expi(-w);
  CHECK(one.integrate(T).real() == Catch::Approx(T).epsilon(1e-13));
  CHECK(std::abs(one.integrate(T).imag()) < 1e-13);
  // nearly-degenerate frequencies within tolerance are merged, not blown up
  TrigPoly nearly = TrigPoly::expi(w) * TrigPoly::expi(-w + 1e-12);
  CHECK(nearly.integrate(T).real() == Catch::Approx(T).epsilon(1e-9));
}

TEST_CASE("derivative is the inverse of antiderivative") {
  TrigPoly p = TrigPoly::cosine(1.3, 0.2) * TrigPoly::sine(0.9, 1.1) +
               TrigPoly::cosine(2.1, 0.0) * 0.5;
  TrigPoly back = p.antiderivative().derivative();
  for (double t : {0.1, 1.0, 4.2, 9.9})
    CHECK(std::abs(back.eval(t) - p.eval(t)) < 1e-11);
}

TEST_CASE("real and imaginary parts split a complex exponential") {
  TrigPoly e = TrigPoly::expi(1.5);
  for (double t : {0.2, 1.7}) {
    CHECK(e.real_part().eval(t).real() == Catch::Approx(std::cos(1.5 * t)));
    CHECK(e.imag_part().eval(t).real() == Catch::Approx(std::sin(1.5 * t)));
    CHECK(std::abs(e.real_part().eval(t).imag()) < 1e-14);
  }
}

TEST_CASE("polynomial-weighted terms integrate exactly") {
  // t * cos(wt): integral by parts has a closed form
  TrigPoly t_cos = TrigPoly::cosine(1.1, 0.0).antiderivative();  // sin(wt)/w
  auto f = [](double t) { return std::sin(1.1 * t) / 1.1; };
  TrigPoly sq = t_cos * t_cos;
  auto f2 = [&](double t) { return f(t) * f(t); };
  double T = 5.0;
  CHECK(sq.integrate(T).real() == Catch::Approx(integrate(f2, 0.0, T)).margin(1e-11));
}
