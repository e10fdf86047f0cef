#include "doctest.h"
#include "helpers.hpp"

#include "dgreg/errors.hpp"
#include "dgreg/transport.hpp"

#include <algorithm>
#include <cmath>

using namespace dgreg;
using namespace testutil;

namespace {

TransportProblem make_problem(const MeshPtr& mesh, CgVectorField v, int steps, double eps) {
    TransportProblem p;
    p.mesh = mesh;
    p.velocity = std::move(v);
    p.steps = steps;
    p.epsilon = eps;
    return p;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

// Brute-force residual: loops over cells and facets with their own quadrature,
// evaluating the fields through the public evaluation routines.
std::vector<double> brute_residual(const DgScalarField& phi, const TransportProblem& p) {
    const GridMesh& m = *p.mesh;
    const int d = m.dim();
    const int nl = d + 1;
    std::vector<double> r(phi.size(), 0.0);
    const QuadratureRule cell_rule = simplex_rule(d, 4);
    for (Index c = 0; c < m.num_cells(); ++c) {
        double div = 0.0;
        for (int k = 0; k < nl; ++k) {
            const Vec3 vk = p.velocity.at_vertex(m.cell(c)[static_cast<std::size_t>(k)]);
            const Vec3& g = m.barycentric_gradient(c, k);
            for (int a = 0; a < d; ++a) {
                div += vk[static_cast<std::size_t>(a)] * g[static_cast<std::size_t>(a)];
            }
        }
        for (std::size_t q = 0; q < cell_rule.points.size(); ++q) {
            const auto& b = cell_rule.points[q];
            const double w = cell_rule.weights[q] * m.cell_volume(c);
            const double ph = evaluate_in_cell(phi, c, b);
            const Vec3 v = evaluate_in_cell(p.velocity, c, b);
            for (int i = 0; i < nl; ++i) {
                const Vec3& g = m.barycentric_gradient(c, i);
                double vg = 0.0;
                for (int a = 0; a < d; ++a) {
                    vg += v[static_cast<std::size_t>(a)] * g[static_cast<std::size_t>(a)];
                }
                r[static_cast<std::size_t>(c * nl + i)] += w * (div * b[static_cast<std::size_t>(i)] * ph + ph * vg);
            }
        }
    }
    const QuadratureRule facet_rule = simplex_rule(d - 1, 4);
    for (const InteriorFacet& f : m.interior_facets()) {
        for (std::size_t q = 0; q < facet_rule.points.size(); ++q) {
            Vec3 x{0.0, 0.0, 0.0};
            for (int k = 0; k < d; ++k) {
                const Vec3& vx = m.vertex(f.vertices[static_cast<std::size_t>(k)]);
                for (int a = 0; a < 3; ++a) {
                    x[static_cast<std::size_t>(a)] += facet_rule.points[q][static_cast<std::size_t>(k)] * vx[static_cast<std::size_t>(a)];
                }
            }
            const double w = facet_rule.weights[q] * f.measure;
            const double p1 = evaluate_trace(phi, f, 0, x);
            const double p2 = evaluate_trace(phi, f, 1, x);
            const Vec3 v = evaluate(p.velocity, x, f.cells[0]);
            double vn = 0.0;
            for (int a = 0; a < d; ++a) {
                vn += v[static_cast<std::size_t>(a)] * f.normal[static_cast<std::size_t>(a)];
            }
            const double flux = numerical_flux(p1, p2, vn, p.epsilon);
            for (int s = 0; s < 2; ++s) {
                const Index c = f.cells[static_cast<std::size_t>(s)];
                const auto b = m.barycentric(c, x);
                for (int i = 0; i < nl; ++i) {
                    const double jump_sign = s == 0 ? 1.0 : -1.0;
                    r[static_cast<std::size_t>(c * nl + i)] -= w * jump_sign * b[static_cast<std::size_t>(i)] * flux;
                }
            }
        }
    }
    return r;
}

} // namespace

TEST_CASE("smoothed max and sigmoid") {
    CHECK(smoothed_max(0.1, 0.0) == 0.0);
    CHECK(std::abs(smoothed_max(0.1, 10.0) - 10.0) < 1e-12);
    CHECK(sigmoid(0.1, 1e6) == 1.0);
    CHECK(sigmoid(0.1, -1e6) >= 0.0);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double x = uniform(rng, -5.0, 5.0);
        const double eps = uniform(rng, 1e-3, 1.0);
        CHECK(std::abs(sigmoid(eps, x) + sigmoid(eps, -x) - 1.0) < 1e-12);
        CHECK(std::abs(smoothed_max(eps, x) - smoothed_max(eps, -x) - x) < 1e-12);
    }
}

TEST_CASE("smoothed max derivative matches differences") {
    for (double eps : {0.5, 1e-2}) {
        for (double x : {-0.3, -0.01, 0.0, 0.004, 0.2}) {
            const double h = 1e-6 * eps;
            const double fd = (smoothed_max(eps, x + h) - smoothed_max(eps, x - h)) / (2 * h);
            CHECK(std::abs(fd - smoothed_max_derivative(eps, x)) < 1e-6);
        }
    }
}

TEST_CASE("numerical flux examples") {
    CHECK(std::abs(numerical_flux(3, 3, 2, 0.1) - 6.0) < 1e-12);
    CHECK(numerical_flux(1, 5, -2, 0.0) == -10.0);
    CHECK(numerical_flux(1, 5, 0.0, 0.0) == 0.0);
    CHECK(numerical_flux(1, 5, 0.0, 0.1) == 0.0);
    CHECK(numerical_flux(1, 3, 0.0, 0.1) == 0.0);
    // Upwind orientation: downwind trace irrelevant at eps = 0.
    CHECK(numerical_flux(2, 100, 1.5, 0.0) == numerical_flux(2, -7, 1.5, 0.0));
    CHECK(numerical_flux(100, 2, -1.5, 0.0) == numerical_flux(-7, 2, -1.5, 0.0));
}

TEST_CASE("smoothed flux approaches upwind linearly in epsilon") {
    std::mt19937_64 rng(11);
    double prev = 0.0;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
        double worst = 0.0;
        for (int i = 0; i < 2000; ++i) {
            const double a = uniform(rng, -1, 1);
            const double b = uniform(rng, -1, 1);
            const double s = uniform(rng, -1, 1);
            worst = std::max(worst, std::abs(numerical_flux(a, b, s, eps) - numerical_flux(a, b, s, 0.0)));
        }
        // max_x |sigma(x) x - max(0,x)| = eps * 0.2785; traces bounded by 1, two of them.
        CHECK(worst <= 2 * 0.2785 * eps + 1e-15);
        if (prev > 0.0) {
            CHECK(worst < 0.2 * prev);
        }
        prev = worst;
    }
}

TEST_CASE("numerical flux derivative in normal velocity") {
    for (double s : {-0.2, 0.0, 0.05}) {
        const double h = 1e-7;
        const double fd = (numerical_flux(0.7, -0.4, s + h, 0.02) - numerical_flux(0.7, -0.4, s - h, 0.02)) / (2 * h);
        CHECK(std::abs(fd - numerical_flux_dvn(0.7, -0.4, s, 0.02)) < 1e-6);
    }
}

TEST_CASE("assembled residual matches brute force integration") {
    std::mt19937_64 rng(3);
    for (int dim : {2, 3}) {
        const MeshPtr mesh = dim == 2 ? square(4) : cube(2);
        for (double eps : {0.0, 0.05}) {
            auto p = make_problem(mesh, smooth_velocity(mesh, rng, 1.5), 10, eps);
            DgScalarField phi(mesh, random_vector(rng, static_cast<std::size_t>(mesh->num_cells() * (dim + 1))));
            const DgScalarField r = spatial_operator(phi, p);
            const auto ref = brute_residual(phi, p);
            CHECK(max_abs_diff(r.coefficients, ref) < 1e-12);
        }
    }
}

TEST_CASE("residual paired with one equals integral of div(v) phi") {
    std::mt19937_64 rng(5);
    const MeshPtr mesh = square(6);
    auto p = make_problem(mesh, smooth_velocity(mesh, rng, 2.0), 10, 0.0);
    for (int trial = 0; trial < 2; ++trial) {
        DgScalarField phi = trial == 0 ? DgScalarField(mesh, 1.7)
                                       : DgScalarField(mesh, random_vector(rng, static_cast<std::size_t>(mesh->num_cells() * 3)));
        const DgScalarField r = spatial_operator(phi, p);
        double total = 0.0;
        for (double x : r.coefficients) {
            total += x;
        }
        double ref = 0.0;
        for (Index c = 0; c < mesh->num_cells(); ++c) {
            double div = 0.0;
            double mean = 0.0;
            for (int k = 0; k < 3; ++k) {
                const Vec3 vk = p.velocity.at_vertex(mesh->cell(c)[static_cast<std::size_t>(k)]);
                const Vec3& g = mesh->barycentric_gradient(c, k);
                div += vk[0] * g[0] + vk[1] * g[1];
                mean += phi.coefficients[static_cast<std::size_t>(c * 3 + k)] / 3.0;
            }
            ref += div * mean * mesh->cell_volume(c);
        }
        CHECK(std::abs(total - ref) < 1e-10);
    }
}

TEST_CASE("zero velocity leaves the state untouched") {
    const MeshPtr mesh = square(5);
    std::mt19937_64 rng(1);
    auto p = make_problem(mesh, CgVectorField(mesh, true), 7, 0.01);
    DgScalarField phi(mesh, random_vector(rng, static_cast<std::size_t>(mesh->num_cells() * 3)));
    const DgScalarField r = spatial_operator(phi, p);
    CHECK(*std::max_element(r.coefficients.begin(), r.coefficients.end()) == 0.0);
    const auto next = step_rk2(phi, p, p.dt());
    CHECK(next.coefficients == phi.coefficients);
    const auto res = solve_transport(phi, p);
    CHECK(res.final_state.coefficients == phi.coefficients);
    CHECK(res.cfl.number == 0.0);
    CHECK_FALSE(res.cfl.advisory);
}

TEST_CASE("constant state preservation") {
    std::mt19937_64 rng(17);
    for (int dim : {2, 3}) {
        const MeshPtr mesh = dim == 2 ? square(16) : cube(4);
        for (double eps : {0.0, 1e-2}) {
            auto p = make_problem(mesh, smooth_velocity(mesh, rng, 2.0), 100, eps);
            const auto res = solve_transport(DgScalarField(mesh, 0.8), p);
            double err = 0.0;
            for (double x : res.final_state.coefficients) {
                err = std::max(err, std::abs(x - 0.8));
            }
            CHECK(err < 1e-9);
        }
    }
}

TEST_CASE("scheme is linear in the state") {
    std::mt19937_64 rng(19);
    const MeshPtr mesh = square(6);
    auto p = make_problem(mesh, smooth_velocity(mesh, rng, 1.0), 10, 0.02);
    const std::size_t n = static_cast<std::size_t>(mesh->num_cells() * 3);
    DgScalarField a(mesh, random_vector(rng, n));
    DgScalarField b(mesh, random_vector(rng, n));
    DgScalarField comb(mesh, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        comb.coefficients[i] = 2.5 * a.coefficients[i] - 0.75 * b.coefficients[i];
    }
    const auto sa = step_rk2(a, p, p.dt());
    const auto sb = step_rk2(b, p, p.dt());
    const auto sc = step_rk2(comb, p, p.dt());
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        err = std::max(err, std::abs(sc.coefficients[i] - (2.5 * sa.coefficients[i] - 0.75 * sb.coefficients[i])));
    }
    CHECK(err < 1e-10);
}

TEST_CASE("transpose step pairs with the step") {
    std::mt19937_64 rng(23);
    for (int dim : {2, 3}) {
        const MeshPtr mesh = dim == 2 ? square(8) : cube(3);
        auto p = make_problem(mesh, smooth_velocity(mesh, rng, 1.0), 10, 0.01);
        const TransportOperator op(p);
        const std::size_t n = op.size();
        const auto phi = random_vector(rng, n);
        const auto lam = random_vector(rng, n);
        std::vector<double> aphi(n);
        std::vector<double> atl(n);
        op.step(phi, p.dt(), aphi);
        op.step_transpose(lam, p.dt(), atl);
        const double lhs = dot(aphi, lam);
        const double rhs = dot(phi, atl);
        CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("single step error is third order in dt") {
    const MeshPtr mesh = square(16);
    auto vel = interpolate_cg(
        mesh,
        [](const Vec3& x) {
            const double dx = x[0] - 8.0;
            const double dy = x[1] - 8.0;
            const double r2 = (dx * dx + dy * dy) / 36.0;
            const double psi = r2 < 1.0 ? (1 - r2) * (1 - r2) : 0.0;
            return Vec3{-dy * psi * 0.3, dx * psi * 0.3, 0.0};
        },
        true);
    auto p = make_problem(mesh, vel, 1, 0.0);
    const TransportOperator op(p);
    const DgScalarField phi0 = gaussian(mesh, {9.0, 8.0, 0.0}, 2.0);
    auto one_step_error = [&](double dt) {
        std::vector<double> coarse(op.size());
        op.step(phi0.coefficients, dt, coarse);
        std::vector<double> fine = phi0.coefficients;
        std::vector<double> tmp(op.size());
        for (int k = 0; k < 10; ++k) {
            op.step(fine, dt / 10, tmp);
            fine.swap(tmp);
        }
        return max_abs_diff(coarse, fine);
    };
    const double e1 = one_step_error(0.2);
    const double e2 = one_step_error(0.1);
    const double order = std::log2(e1 / e2);
    CHECK(order > 2.8);
}

TEST_CASE("cfl number") {
    const MeshPtr mesh2 = square(4);
    CHECK(std::abs(mesh2->min_indiameter() - (2.0 - std::sqrt(2.0))) < 1e-12);
    const MeshPtr mesh3 = cube(2);
    CHECK(std::abs(mesh3->min_indiameter() - (std::sqrt(2.0) - 1.0)) < 1e-12);

    std::mt19937_64 rng(29);
    auto v = smooth_velocity(mesh2, rng, 5.0);
    auto p = make_problem(mesh2, v, 100, 0.01);
    const CflReport rep = cfl_number(p);
    CHECK(std::abs(rep.number - 0.01 * 5.0 / (2.0 - std::sqrt(2.0))) < 1e-12);
    CHECK_FALSE(rep.advisory);

    // dt = h_min / |v|: CFL number exactly one.
    p.final_time = mesh2->min_indiameter() / 5.0;
    p.steps = 1;
    const CflReport one = cfl_number(p);
    CHECK(std::abs(one.number - 1.0) < 1e-12);
    CHECK(one.advisory);
}

TEST_CASE("trajectory bookkeeping") {
    std::mt19937_64 rng(31);
    const MeshPtr mesh = square(4);
    auto p = make_problem(mesh, smooth_velocity(mesh, rng, 1.0), 6, 0.01);
    const DgScalarField phi0 = gaussian(mesh, {2.0, 2.0, 0.0}, 1.0);
    const auto res = solve_transport(phi0, p, true);
    REQUIRE(res.trajectory.has_value());
    CHECK(res.trajectory->states.size() == 7);
    CHECK(res.trajectory->midpoints.size() == 6);
    CHECK(res.trajectory->stored_snapshots() == 13);
    CHECK(res.trajectory->states[0] == phi0.coefficients);
    CHECK(res.trajectory->states.back() == res.final_state.coefficients);
}

TEST_CASE("invalid problems are rejected") {
    const MeshPtr mesh = square(4);
    CgVectorField v(mesh, false);
    v.values[0] = 1.0;
    auto p = make_problem(mesh, v, 10, 0.01);
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    auto q = make_problem(mesh, CgVectorField(mesh, true), 0, 0.01);
    CHECK_THROWS_AS(q.validate(), InvalidArgument);
    auto e = make_problem(mesh, CgVectorField(mesh, true), 10, -1.0);
    CHECK_THROWS_AS(e.validate(), InvalidArgument);
    const MeshPtr other = square(3);
    auto good = make_problem(mesh, CgVectorField(mesh, true), 10, 0.01);
    CHECK_THROWS_AS(spatial_operator(DgScalarField(other, 1.0), good), InvalidArgument);
}

TEST_CASE("blowup is reported with the step index") {
    const MeshPtr mesh = square(4);
    std::mt19937_64 rng(37);
    auto p = make_problem(mesh, smooth_velocity(mesh, rng, 200.0), 400, 0.0);
    p.final_time = 400.0;
    DgScalarField phi(mesh, random_vector(rng, static_cast<std::size_t>(mesh->num_cells() * 3)));
    CHECK_THROWS_AS(solve_transport(phi, p), NumericBlowup);
}
