#include "dgreg/quadrature.hpp"

#include "dgreg/errors.hpp"

#include <cmath>
#include <numbers>

namespace dgreg {

void gauss_legendre_unit(int npoints, std::vector<double>& nodes, std::vector<double>& weights) {
    if (npoints < 1) {
        throw InvalidArgument("gauss_legendre_unit: need at least one point");
    }
    nodes.assign(static_cast<std::size_t>(npoints), 0.0);
    weights.assign(static_cast<std::size_t>(npoints), 0.0);
    const int n = npoints;
    for (int i = 0; i < n; ++i) {
        // Newton iteration on P_n starting from the Chebyshev-like guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = (n == 1) ? x : p1;
            const double pnm1 = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        // Recompute derivative at the converged node.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double pn = (n == 1) ? x : p1;
        const double pnm1 = (n == 1) ? 1.0 : p0;
        dp = n * (x * pn - pnm1) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1], ascending order
        const auto idx = static_cast<std::size_t>(n - 1 - i);
        nodes[idx] = 0.5 * (x + 1.0);
        weights[idx] = 0.5 * w;
    }
}

QuadratureRule simplex_rule(int dim, int degree) {
    if (dim < 1 || dim > 3 || degree < 0) {
        throw InvalidArgument("simplex_rule: dim must be 1..3 and degree >= 0");
    }
    QuadratureRule rule;
    rule.dim = dim;
    rule.degree = degree;
    // The collapsed map adds a Jacobian of degree dim-1 along the first axis.
    const int q = std::max(1, (degree + dim + 1) / 2);
    std::vector<double> x;
    std::vector<double> w;
    gauss_legendre_unit(q, x, w);

    if (dim == 1) {
        for (int i = 0; i < q; ++i) {
            rule.points.push_back({1.0 - x[i], x[i], 0.0, 0.0});
            rule.weights.push_back(w[i]);
        }
    } else if (dim == 2) {
        for (int i = 0; i < q; ++i) {
            for (int j = 0; j < q; ++j) {
                const double u = x[i];
                const double s = (1.0 - u) * x[j];
                rule.points.push_back({1.0 - u - s, u, s, 0.0});
                rule.weights.push_back(2.0 * w[i] * w[j] * (1.0 - u));
            }
        }
    } else {
        for (int i = 0; i < q; ++i) {
            for (int j = 0; j < q; ++j) {
                for (int k = 0; k < q; ++k) {
                    const double u = x[i];
                    const double s = (1.0 - u) * x[j];
                    const double t = (1.0 - u) * (1.0 - x[j]) * x[k];
                    rule.points.push_back({1.0 - u - s - t, u, s, t});
                    rule.weights.push_back(6.0 * w[i] * w[j] * w[k] * (1.0 - u) * (1.0 - u) *
                                           (1.0 - x[j]));
                }
            }
        }
    }
    return rule;
}

double barycentric_monomial_mean(int dim, const std::array<int, 4>& exponents) {
    auto factorial = [](int n) {
        double f = 1.0;
        for (int i = 2; i <= n; ++i) {
            f *= i;
        }
        return f;
    };
    double num = factorial(dim);
    int total = 0;
    for (int i = 0; i <= dim; ++i) {
        num *= factorial(exponents[static_cast<std::size_t>(i)]);
        total += exponents[static_cast<std::size_t>(i)];
    }
    return num / factorial(dim + total);
}

} // namespace dgreg
