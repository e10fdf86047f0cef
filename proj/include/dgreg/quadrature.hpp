#pragma once

#include <array>
#include <vector>

namespace dgreg {

/// Quadrature on the reference simplex of dimension 1..3.
///
/// Points are stored in barycentric coordinates (d+1 entries, unused trailing
/// entries zero) and weights are normalized so they sum to one; multiply by
/// the simplex measure to integrate over a physical simplex.
struct QuadratureRule {
    int dim = 0;
    int degree = 0;
    std::vector<std::array<double, 4>> points;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
};

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre_unit(int npoints, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed-coordinate (Stroud conical product) rule with positive weights,
/// exact for polynomials up to `degree` on the `dim`-simplex.
QuadratureRule simplex_rule(int dim, int degree);

/// Exact mean over a `dim`-simplex of prod_i lambda_i^{a_i}:
/// d! prod(a_i!) / (d + sum a_i)!.
double barycentric_monomial_mean(int dim, const std::array<int, 4>& exponents);

} // namespace dgreg
