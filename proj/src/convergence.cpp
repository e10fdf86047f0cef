#include "dgreg/convergence.hpp"

#include "dgreg/errors.hpp"
#include "dgreg/quadrature.hpp"
#include "dgreg/transport.hpp"

#include <cmath>
#include <numbers>

namespace dgreg {

namespace {

constexpr double swirl_radius = 0.4;
constexpr double swirl_rate = 0.5 * std::numbers::pi;

double swirl_profile(double r) {
    const double s = r / swirl_radius;
    if (s >= 1.0) {
        return 0.0;
    }
    const double t = 1.0 - s * s;
    return t * t * t * t;
}

} // namespace

Vec3 swirl_velocity(const Vec3& x) {
    const double dx = x[0] - 0.5;
    const double dy = x[1] - 0.5;
    const double w = swirl_rate * swirl_profile(std::hypot(dx, dy));
    return {-w * dy, w * dx, 0.0};
}

double swirl_initial(const Vec3& x) {
    const double dx = x[0] - 0.62;
    const double dy = x[1] - 0.5;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * 0.07 * 0.07));
}

double swirl_exact(const Vec3& x, double t) {
    // The swirl rotates every circle about the centre rigidly.
    const double dx = x[0] - 0.5;
    const double dy = x[1] - 0.5;
    const double a = -swirl_rate * swirl_profile(std::hypot(dx, dy)) * t;
    const double c = std::cos(a);
    const double s = std::sin(a);
    return swirl_initial({0.5 + c * dx - s * dy, 0.5 + s * dx + c * dy, 0.0});
}

std::vector<ConvergenceRow> convergence_study(const std::string& name, const ConvergenceOptions& options) {
    if (name != "rotate-blob") {
        throw InvalidArgument("convergence study supports only 'rotate-blob'");
    }
    if (options.base < 4 || options.levels < 2 || !(options.cfl > 0.0)) {
        throw InvalidArgument("convergence study needs base >= 4, levels >= 2, cfl > 0");
    }
    std::vector<ConvergenceRow> rows;
    const QuadratureRule rule = simplex_rule(2, 6);
    for (int level = 0; level < options.levels; ++level) {
        const int n = options.base << level;
        const int dims[2] = {n, n};
        const MeshPtr mesh = GridMesh::build(dims);
        const double nd = n;
        TransportProblem p;
        p.mesh = mesh;
        p.velocity = interpolate_cg(
            mesh,
            [&](const Vec3& x) {
                const Vec3 u = swirl_velocity({x[0] / nd, x[1] / nd, 0.0});
                return Vec3{nd * u[0], nd * u[1], 0.0};
            },
            true);
        p.epsilon = options.epsilon;
        p.final_time = 1.0;
        const double vmax = p.velocity.max_norm();
        p.steps = static_cast<int>(std::ceil(vmax / (options.cfl * mesh->min_indiameter())));
        const DgScalarField phi0 = interpolate_dg(mesh, [&](const Vec3& x) { return swirl_initial({x[0] / nd, x[1] / nd, 0.0}); });
        const TransportResult res = solve_transport(phi0, p, false, 1.0);

        double err2 = 0.0;
        for (Index c = 0; c < mesh->num_cells(); ++c) {
            const auto vs = mesh->cell(c);
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                Vec3 x{0.0, 0.0, 0.0};
                for (std::size_t k = 0; k < 3; ++k) {
                    const Vec3& v = mesh->vertex(vs[k]);
                    x[0] += rule.points[q][k] * v[0];
                    x[1] += rule.points[q][k] * v[1];
                }
                const double diff = evaluate_in_cell(res.final_state, c, rule.points[q]) -
                                    swirl_exact({x[0] / nd, x[1] / nd, 0.0}, p.final_time);
                err2 += rule.weights[q] * mesh->cell_volume(c) * diff * diff;
            }
        }
        ConvergenceRow row;
        row.n = n;
        row.steps = p.steps;
        row.dt = p.dt();
        row.cfl = res.cfl.number;
        row.l2_error = std::sqrt(err2) / nd;
        if (!rows.empty()) {
            row.order = std::log2(rows.back().l2_error / row.l2_error);
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace dgreg
