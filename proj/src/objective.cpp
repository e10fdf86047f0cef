#include "dgreg/objective.hpp"

#include "dgreg/errors.hpp"
#include "dgreg/image.hpp"
#include "dgreg/quadrature.hpp"

#include <cmath>

namespace dgreg {

void ObjectiveConfig::validate() const {
    if (!(delta > 0.0) || !(gamma > 0.0) || !(tukey_c > 0.0)) {
        throw InvalidArgument("ObjectiveConfig: delta, gamma and tukey_c must be positive");
    }
}

double huber(double x, double delta) {
    const double ax = std::abs(x);
    if (ax <= delta) {
        return 0.5 * x * x;
    }
    return delta * (ax - 0.5 * delta);
}

double huber_derivative(double x, double delta) {
    if (std::abs(x) <= delta) {
        return x;
    }
    return x > 0.0 ? delta : -delta;
}

double tukey_biweight(double x, double c) {
    if (std::abs(x) > c) {
        return 0.5 * c * c;
    }
    const double r = 1.0 - (x * x) / (c * c);
    return 0.5 * c * c * (1.0 - r * r * r);
}

double tukey_metric(std::span<const double> a, std::span<const double> b, double c) {
    if (a.size() != b.size()) {
        throw InvalidArgument("tukey_metric: inputs differ in size");
    }
    if (!(c > 0.0)) {
        throw InvalidArgument("tukey_metric: c must be positive");
    }
    if (a.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += tukey_biweight(a[i] - b[i], c);
    }
    return s / static_cast<double>(a.size());
}

namespace {

const QuadratureRule& element_rule(int dim) {
    static const QuadratureRule r2 = simplex_rule(2, 4);
    static const QuadratureRule r3 = simplex_rule(3, 4);
    return dim == 2 ? r2 : r3;
}

} // namespace

double mismatch(const DgScalarField& phi_t, const DgScalarField& phi_e, double delta) {
    require_same_mesh(phi_t.mesh, phi_e.mesh, "mismatch");
    const GridMesh& mesh = *phi_t.mesh;
    const int n = mesh.vertices_per_cell();
    const QuadratureRule& rule = element_rule(mesh.dim());
    double total = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double* a = phi_t.coefficients.data() + c * n;
        const double* b = phi_e.coefficients.data() + c * n;
        double cell = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            double diff = 0.0;
            for (int m = 0; m < n; ++m) {
                diff += rule.points[q][static_cast<std::size_t>(m)] * (a[m] - b[m]);
            }
            cell += rule.weights[q] * huber(diff, delta);
        }
        total += mesh.cell_volume(c) * cell;
    }
    return total;
}

std::vector<double> mismatch_gradient(const DgScalarField& phi_t, const DgScalarField& phi_e, double delta) {
    require_same_mesh(phi_t.mesh, phi_e.mesh, "mismatch_gradient");
    const GridMesh& mesh = *phi_t.mesh;
    const int n = mesh.vertices_per_cell();
    const QuadratureRule& rule = element_rule(mesh.dim());
    std::vector<double> g(phi_t.size(), 0.0);
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double* a = phi_t.coefficients.data() + c * n;
        const double* b = phi_e.coefficients.data() + c * n;
        double* gc = g.data() + c * n;
        const double vol = mesh.cell_volume(c);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            double diff = 0.0;
            for (int m = 0; m < n; ++m) {
                diff += rule.points[q][static_cast<std::size_t>(m)] * (a[m] - b[m]);
            }
            const double w = vol * rule.weights[q] * huber_derivative(diff, delta);
            for (int m = 0; m < n; ++m) {
                gc[m] += w * rule.points[q][static_cast<std::size_t>(m)];
            }
        }
    }
    return g;
}

double regularizer(const CgVectorField& tilde_v, const CgOperators& ops) {
    const int d = tilde_v.mesh->dim();
    const auto mv = apply_componentwise(ops.mass, tilde_v.values, d);
    double s = 0.0;
    for (std::size_t i = 0; i < mv.size(); ++i) {
        s += tilde_v.values[i] * mv[i];
    }
    return s;
}

std::vector<double> regularizer_gradient(const CgVectorField& tilde_v, const CgOperators& ops) {
    auto g = apply_componentwise(ops.mass, tilde_v.values, tilde_v.mesh->dim());
    for (double& x : g) {
        x *= 2.0;
    }
    return g;
}

double l2_discrepancy(const DgScalarField& phi_t, const DgScalarField& phi_e) {
    require_same_mesh(phi_t.mesh, phi_e.mesh, "l2_discrepancy");
    const GridMesh& mesh = *phi_t.mesh;
    const int n = mesh.vertices_per_cell();
    double total = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double vol = mesh.cell_volume(c);
        std::array<double, 4> e{};
        double sum = 0.0;
        double sq = 0.0;
        for (int m = 0; m < n; ++m) {
            e[static_cast<std::size_t>(m)] = phi_t.coefficients[static_cast<std::size_t>(c * n + m)] -
                                            phi_e.coefficients[static_cast<std::size_t>(c * n + m)];
            sum += e[static_cast<std::size_t>(m)];
            sq += e[static_cast<std::size_t>(m)] * e[static_cast<std::size_t>(m)];
        }
        // e^T M_E e with M_E = |E| (I + 11^T) / ((d+1)(d+2))
        total += vol * (sq + sum * sum) / (n * (n + 1.0));
    }
    return std::sqrt(std::max(0.0, total));
}

double default_huber_delta(std::span<const double> target_intensities) {
    const double range = percentile(target_intensities, 99.0) - percentile(target_intensities, 1.0);
    return range > 0.0 ? 0.1 * range : 0.1;
}

} // namespace dgreg
