#include "hamens/special.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hamens {

namespace {

// Rybicki's sampling of the Dawson kernel. Truncation error ~ exp(-(π/2h)²) ≈ 1e-27 for h = 0.2.
constexpr double kStep = 0.2;
constexpr int kTerms = 18;

const std::array<double, kTerms>& rybicki_weights() {
    static const std::array<double, kTerms> c = [] {
        std::array<double, kTerms> out{};
        for (int i = 0; i < kTerms; ++i) {
            const double arg = (2.0 * i + 1.0) * kStep;
            out[i] = std::exp(-arg * arg);
        }
        return out;
    }();
    return c;
}

double dawson_series(double x) {
    // x Σ (-2x²)^k / (2k+1)!!
    const double x2 = x * x;
    double term = x;
    double sum = x;
    for (int k = 1; k < 40; ++k) {
        term *= -2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

double dawson_asymptotic(double x) {
    const double r = 1.0 / (2.0 * x * x);
    return (1.0 + r * (1.0 + r * (3.0 + r * (15.0 + r * 105.0)))) / (2.0 * x);
}

} // namespace

double dawson(double x) {
    const double ax = std::abs(x);
    if (ax < 0.2) return dawson_series(x);
    if (ax > 50.0) return std::copysign(dawson_asymptotic(ax), x);

    const auto& c = rybicki_weights();
    const int n0 = 2 * static_cast<int>(0.5 * ax / kStep + 0.5);
    const double xp = ax - n0 * kStep;
    double e1 = std::exp(2.0 * xp * kStep);
    const double e2 = e1 * e1;
    double d1 = n0 + 1.0;
    double d2 = d1 - 2.0;
    double sum = 0.0;
    for (int i = 0; i < kTerms; ++i, d1 += 2.0, d2 -= 2.0, e1 *= e2) {
        sum += c[i] * (e1 / d1 + 1.0 / (d2 * e1));
    }
    return std::copysign(std::exp(-xp * xp) * sum / std::sqrt(std::numbers::pi), x);
}

double dawson_derivative(double x) { return 1.0 - 2.0 * x * dawson(x); }

QuadratureRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
    const double xm = 0.5 * (b + a);
    const double xl = 0.5 * (b - a);
    const int m = (n + 1) / 2;
    for (int i = 1; i <= m; ++i) {
        double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0;
            double p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        rule.nodes[i - 1] = xm - xl * z;
        rule.nodes[n - i] = xm + xl * z;
        rule.weights[i - 1] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        rule.weights[n - i] = rule.weights[i - 1];
    }
    return rule;
}

} // namespace hamens
