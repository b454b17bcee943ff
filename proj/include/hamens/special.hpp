// special.hpp: Dawson's integral and Gauss–Legendre rules

#pragma once

#include <vector>

namespace hamens {

// F(x) = exp(-x²) ∫₀ˣ exp(t²) dt, absolute accuracy better than 1e-15 on the real line.
double dawson(double x);

// F'(x) = 1 − 2x F(x)
double dawson_derivative(double x);

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// n-point Gauss–Legendre rule mapped onto [a, b].
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

} // namespace hamens
