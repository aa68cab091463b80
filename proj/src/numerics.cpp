#include "photherm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "photherm/constants.hpp"

namespace photherm::numerics {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights come
// from the first eigenvector components. Symmetric tridiagonal QL with
// implicit shifts, tracking only the first row of the eigenvector matrix.
GaussHermite build_gauss_hermite(int n) {
    std::vector<double> d(n, 0.0);       // diagonal (zero for Hermite)
    std::vector<double> e(n, 0.0);       // subdiagonal, e[0..n-2]
    std::vector<double> z(n, 0.0);       // first eigenvector row
    for (int j = 0; j + 1 < n; ++j) e[j] = std::sqrt(0.5 * (j + 1));
    z[0] = 1.0;

    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (++iter > 60)
                    throw std::runtime_error("gauss_hermite: QL failed to converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    f = z[i + 1];
                    z[i + 1] = s * z[i] + c * f;
                    z[i] = c * z[i] - s * f;
                }
                if (r == 0.0 && m - 1 >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    std::vector<std::pair<double, double>> zipped(n);
    const double mu0 = std::sqrt(constants::pi);  // total weight
    for (int i = 0; i < n; ++i) zipped[i] = {d[i], mu0 * z[i] * z[i]};
    std::sort(zipped.begin(), zipped.end());

    GaussHermite rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = zipped[i].first;
        rule.weights[i] = zipped[i].second;
    }
    // enforce exact symmetry of the rule
    for (int i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

std::mutex gh_mutex;
std::map<int, GaussHermite> gh_cache;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
constexpr double kronrod_x[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kronrod_w[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double gauss_w[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct PanelResult {
    double kronrod = 0.0;
    double err = 0.0;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kronrod_x[i]);
        fv[14 - i] = f(c + h * kronrod_x[i]);
    }
    fv[7] = f(c);
    double resk = kronrod_w[7] * fv[7];
    double resg = gauss_w[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        resk += kronrod_w[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) resg += gauss_w[i / 2] * (fv[i] + fv[14 - i]);
    }
    PanelResult r;
    r.kronrod = resk * h;
    r.err = std::abs((resk - resg) * h);
    return r;
}

}  // namespace

const GaussHermite& gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    std::lock_guard<std::mutex> lock(gh_mutex);
    auto it = gh_cache.find(n);
    if (it == gh_cache.end()) it = gh_cache.emplace(n, build_gauss_hermite(n)).first;
    return it->second;
}

double gauss_mean(int n, const std::function<double(double)>& f) {
    const GaussHermite& rule = gauss_hermite(n);
    double acc = 0.0;
    const double scale = std::sqrt(2.0);
    for (int i = 0; i < n; ++i) acc += rule.weights[i] * f(scale * rule.nodes[i]);
    return acc / std::sqrt(constants::pi);
}

AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a,
                                  double b, double rel_tol, double abs_tol,
                                  const std::vector<double>& breakpoints,
                                  int max_intervals) {
    struct Interval {
        double a, b, value, err;
    };
    std::vector<double> cuts{a, b};
    for (double x : breakpoints)
        if (x > a && x < b) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<Interval> heap;
    AdaptiveResult out;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const PanelResult p = gk15(f, cuts[i], cuts[i + 1]);
        heap.push_back({cuts[i], cuts[i + 1], p.kronrod, p.err});
        out.evaluations += 15;
    }
    auto total = [&heap]() {
        double v = 0.0, e = 0.0;
        for (const auto& iv : heap) { v += iv.value; e += iv.err; }
        return std::pair<double, double>(v, e);
    };
    while (static_cast<int>(heap.size()) < max_intervals) {
        auto [v, e] = total();
        if (e <= std::max(abs_tol, rel_tol * std::abs(v))) {
            out.value = v;
            out.error = e;
            out.converged = true;
            return out;
        }
        auto worst = std::max_element(heap.begin(), heap.end(),
                                      [](const Interval& x, const Interval& y) {
                                          return x.err < y.err;
                                      });
        const Interval iv = *worst;
        heap.erase(worst);
        const double mid = 0.5 * (iv.a + iv.b);
        const PanelResult l = gk15(f, iv.a, mid);
        const PanelResult r = gk15(f, mid, iv.b);
        heap.push_back({iv.a, mid, l.kronrod, l.err});
        heap.push_back({mid, iv.b, r.kronrod, r.err});
        out.evaluations += 30;
    }
    auto [v, e] = total();
    out.value = v;
    out.error = e;
    out.converged = e <= std::max(abs_tol, rel_tol * std::abs(v));
    return out;
}

std::complex<double> integrate_adaptive_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    double rel_tol) {
    const AdaptiveResult re = integrate_adaptive(
        [&f](double t) { return f(t).real(); }, a, b, rel_tol, 1e-300);
    const AdaptiveResult im = integrate_adaptive(
        [&f](double t) { return f(t).imag(); }, a, b, rel_tol, 1e-300);
    return {re.value, im.value};
}

namespace {

// Weideman rational approximation of the Faddeeva function, N = 64 terms.
// Coefficients come from a discrete cosine transform computed once.
struct WeidemanTable {
    static constexpr int N = 64;
    double L = 0.0;
    std::vector<double> poly;  // highest degree first

    WeidemanTable() {
        const int M = 2 * N;
        const int M2 = 2 * M;
        L = std::sqrt(N / std::sqrt(2.0));
        std::vector<double> f(M2, 0.0);
        for (int k = -M + 1; k <= M - 1; ++k) {
            const double theta = k * constants::pi / M;
            const double t = L * std::tan(0.5 * theta);
            f[k + M] = std::exp(-t * t) * (L * L + t * t);
        }
        // a_j = Re(FFT(fftshift(f)))_j / M2 for j = 1..N
        std::vector<double> shifted(M2);
        for (int i = 0; i < M2; ++i) shifted[i] = f[(i + M) % M2];
        poly.resize(N);
        for (int j = 1; j <= N; ++j) {
            double s = 0.0;
            for (int k = 0; k < M2; ++k)
                s += shifted[k] * std::cos(constants::two_pi * j * k / M2);
            poly[N - j] = s / M2;
        }
    }
};

const WeidemanTable& weideman() {
    static const WeidemanTable table;
    return table;
}

}  // namespace

std::complex<double> faddeeva_w(std::complex<double> z) {
    if (z.imag() < 0.0)
        throw std::domain_error("faddeeva_w: requires Im(z) >= 0");
    const WeidemanTable& t = weideman();
    const std::complex<double> iz(-z.imag(), z.real());
    const std::complex<double> denom = t.L - iz;
    const std::complex<double> Z = (t.L + iz) / denom;
    std::complex<double> p(0.0, 0.0);
    for (double c : t.poly) p = p * Z + c;
    return 2.0 * p / (denom * denom) +
           (1.0 / std::sqrt(constants::pi)) / denom;
}

double voigt_profile(double d, double sigma, double gamma_hwhm) {
    if (sigma < 0.0 || gamma_hwhm < 0.0)
        throw std::domain_error("voigt_profile: widths must be >= 0");
    const double scale = std::max(std::abs(d), std::max(sigma, gamma_hwhm));
    if (scale == 0.0) throw std::domain_error("voigt_profile: zero widths");
    if (gamma_hwhm <= 1e-14 * scale) {
        if (sigma == 0.0) throw std::domain_error("voigt_profile: zero widths");
        const double u = d / sigma;
        return std::exp(-0.5 * u * u) / (sigma * std::sqrt(constants::two_pi));
    }
    if (sigma <= 1e-14 * scale) {
        return gamma_hwhm / (constants::pi * (d * d + gamma_hwhm * gamma_hwhm));
    }
    const std::complex<double> zarg(d / (sigma * std::sqrt(2.0)),
                                    gamma_hwhm / (sigma * std::sqrt(2.0)));
    return faddeeva_w(zarg).real() / (sigma * std::sqrt(constants::two_pi));
}

std::complex<double> phi1(std::complex<double> z) {
    if (std::abs(z) < 1e-4) {
        // 1 + z/2 + z^2/6 + z^3/24; truncation below 1e-17 in this range
        return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0)));
    }
    return (std::exp(z) - 1.0) / z;
}

}  // namespace photherm::numerics
