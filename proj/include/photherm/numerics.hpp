#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace photherm::numerics {

// Gauss-Hermite rule for integral of exp(-t^2) f(t) dt, physicists' weight.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Cached, thread-safe; n up to a few thousand.
const GaussHermite& gauss_hermite(int n);

// Mean of f against a unit-variance standard normal using an n-point rule.
double gauss_mean(int n, const std::function<double(double)>& f);

struct AdaptiveResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
    int evaluations = 0;
};

// Adaptive Gauss-Kronrod 7/15 on [a, b]; breakpoints seed the interval stack
// (sharp features such as narrow Lorentzian peaks should be listed there).
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a,
                                  double b, double rel_tol = 1e-10,
                                  double abs_tol = 0.0,
                                  const std::vector<double>& breakpoints = {},
                                  int max_intervals = 4000);

std::complex<double> integrate_adaptive_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    double rel_tol = 1e-10);

// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im(z) >= 0.
std::complex<double> faddeeva_w(std::complex<double> z);

// Convolution of a unit-area Gaussian (std sigma) with a unit-area Lorentzian
// (half width gamma_hwhm), evaluated at offset d. Degenerates to the pure
// profile when either width vanishes.
double voigt_profile(double d, double sigma, double gamma_hwhm);

// (exp(z) - 1)/z with a series fallback near z = 0.
std::complex<double> phi1(std::complex<double> z);

}  // namespace photherm::numerics
