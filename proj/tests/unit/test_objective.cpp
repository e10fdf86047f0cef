#include "doctest.h"
#include "helpers.hpp"

#include "dgreg/assembly.hpp"
#include "dgreg/errors.hpp"
#include "dgreg/objective.hpp"

#include <cmath>

using namespace dgreg;
using namespace testutil;

namespace {

// Quadratic-exact rules: triangle edge midpoints, 4-point tetrahedron rule.
double brute_l2_squared(const DgScalarField& a, const DgScalarField& b) {
    const GridMesh& m = *a.mesh;
    const int n = m.vertices_per_cell();
    std::vector<std::array<double, 4>> pts;
    if (m.dim() == 2) {
        pts = {{0.5, 0.5, 0.0, 0.0}, {0.0, 0.5, 0.5, 0.0}, {0.5, 0.0, 0.5, 0.0}};
    } else {
        const double p = 0.5854101966249685;
        const double q = 0.1381966011250105;
        pts = {{p, q, q, q}, {q, p, q, q}, {q, q, p, q}, {q, q, q, p}};
    }
    double total = 0.0;
    for (Index c = 0; c < m.num_cells(); ++c) {
        for (const auto& lam : pts) {
            double e = 0.0;
            for (int k = 0; k < n; ++k) {
                const auto i = static_cast<std::size_t>(c * n + k);
                e += lam[static_cast<std::size_t>(k)] * (a.coefficients[i] - b.coefficients[i]);
            }
            total += m.cell_volume(c) * e * e / static_cast<double>(pts.size());
        }
    }
    return total;
}

} // namespace

TEST_CASE("huber branches") {
    CHECK(huber(0.5, 1.0) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(huber(2.0, 1.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(huber(1.0, 1.0) == 0.5);
    CHECK(huber(-1.0, 1.0) == 0.5);
    CHECK(huber_derivative(1.0, 1.0) == 1.0);
    CHECK(huber_derivative(1.0 + 1e-12, 1.0) == 1.0);
    CHECK(huber_derivative(-3.0, 0.2) == -0.2);
    CHECK(huber(0.0, 0.3) == 0.0);
    CHECK(huber_derivative(0.0, 0.3) == 0.0);
}

TEST_CASE("huber properties") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const double delta = uniform(rng, 0.01, 2.0);
        const double x = uniform(rng, -5.0, 5.0);
        const double y = uniform(rng, -5.0, 5.0);
        const double t = uniform(rng, 0.0, 1.0);
        CHECK(huber(x, delta) == huber(-x, delta));
        CHECK(huber(x, delta) >= 0.0);
        CHECK(huber(x, delta) <= 0.5 * x * x + 1e-15);
        CHECK(std::abs(huber_derivative(x, delta)) <= delta);
        // Convexity along a chord.
        CHECK(huber(t * x + (1 - t) * y, delta) <= t * huber(x, delta) + (1 - t) * huber(y, delta) + 1e-12);
        const double h = 1e-6;
        const double fd = (huber(x + h, delta) - huber(x - h, delta)) / (2 * h);
        if (std::abs(std::abs(x) - delta) > 2 * h) {
            CHECK(std::abs(fd - huber_derivative(x, delta)) < 1e-8);
        }
    }
}

TEST_CASE("tukey biweight") {
    CHECK(tukey_biweight(0.0, 1.0) == 0.0);
    CHECK(tukey_biweight(1.0, 2.0) == doctest::Approx(1.15625).epsilon(1e-15));
    CHECK(tukey_biweight(5.0, 2.0) == 2.0);
    CHECK(tukey_biweight(-2.0, 2.0) == 2.0);
    const std::vector<double> a{0.0, 1.0, 2.0, -4.0};
    CHECK(tukey_metric(a, a, 0.7) == 0.0);
    const std::vector<double> far{10.0, -9.0, 12.0, 6.0};
    CHECK(tukey_metric(a, far, 1.5) == doctest::Approx(1.125).epsilon(1e-15));
    const std::vector<double> shift{1.0, 2.0, 3.0, -3.0};
    CHECK(tukey_metric(shift, a, 2.0) == doctest::Approx(1.15625).epsilon(1e-14));
    CHECK_THROWS_AS(tukey_metric(a, std::vector<double>{1.0}, 1.0), InvalidArgument);
    CHECK_THROWS_AS(tukey_metric(a, a, 0.0), InvalidArgument);
}

TEST_CASE("mismatch values") {
    for (int dim : {2, 3}) {
        const MeshPtr mesh = dim == 2 ? square(4) : cube(2);
        std::mt19937_64 rng(12);
        const DgScalarField phi(mesh, random_vector(rng, static_cast<std::size_t>(mesh->num_cells() * (dim + 1))));
        CHECK(mismatch(phi, phi, 0.1) == 0.0);
        for (double g : mismatch_gradient(phi, phi, 0.1)) {
            CHECK(g == 0.0);
        }
        DgScalarField shifted = phi;
        for (double& x : shifted.coefficients) {
            x += 0.05;
        }
        CHECK(std::abs(mismatch(shifted, phi, 0.1) - 0.5 * 0.05 * 0.05 * mesh->total_volume()) < 1e-13);
        CHECK(std::abs(mismatch(shifted, phi, 0.01) - 0.01 * (0.05 - 0.005) * mesh->total_volume()) < 1e-13);
        const DgScalarField other(mesh, random_vector(rng, phi.size()));
        CHECK(mismatch(phi, other, 0.3) > 0.0);
        // Quadratic zone: mismatch = 1/2 L2^2.
        const double l2 = l2_discrepancy(phi, other);
        CHECK(std::abs(mismatch(phi, other, 10.0) - 0.5 * l2 * l2) < 1e-12);
        CHECK_THROWS_AS(mismatch(phi, DgScalarField(square(3)), 0.1), InvalidArgument);
    }
}

TEST_CASE("mismatch gradient against central differences") {
    for (int dim : {2, 3}) {
        const MeshPtr mesh = dim == 2 ? square(3) : cube(2);
        std::mt19937_64 rng(13);
        const std::size_t n = static_cast<std::size_t>(mesh->num_cells() * (dim + 1));
        DgScalarField a(mesh, random_vector(rng, n, 0.5));
        const DgScalarField b(mesh, random_vector(rng, n, 0.5));
        const double delta = 0.2;
        const auto g = mismatch_gradient(a, b, delta);
        const auto dir = random_vector(rng, n);
        const double h = 1e-6;
        DgScalarField plus = a;
        DgScalarField minus = a;
        for (std::size_t i = 0; i < n; ++i) {
            plus.coefficients[i] += h * dir[i];
            minus.coefficients[i] -= h * dir[i];
        }
        const double fd = (mismatch(plus, b, delta) - mismatch(minus, b, delta)) / (2 * h);
        const double an = dot(g, dir);
        CHECK(std::abs(fd - an) / std::abs(an) < 1e-6);
        // Per-coefficient spot checks.
        for (std::size_t i = 0; i < n; i += n / 7) {
            DgScalarField p = a;
            DgScalarField q = a;
            p.coefficients[i] += h;
            q.coefficients[i] -= h;
            const double fdi = (mismatch(p, b, delta) - mismatch(q, b, delta)) / (2 * h);
            CHECK(std::abs(fdi - g[i]) < 1e-6 * std::max(1.0, std::abs(g[i])));
        }
    }
}

TEST_CASE("l2 discrepancy") {
    for (int dim : {2, 3}) {
        const MeshPtr mesh = dim == 2 ? square(5) : cube(3);
        std::mt19937_64 rng(14);
        const std::size_t n = static_cast<std::size_t>(mesh->num_cells() * (dim + 1));
        const DgScalarField a(mesh, random_vector(rng, n));
        const DgScalarField b(mesh, random_vector(rng, n));
        CHECK(l2_discrepancy(a, a) == 0.0);
        const DgScalarField c(mesh, -0.75);
        const DgScalarField z(mesh, 0.0);
        CHECK(std::abs(l2_discrepancy(c, z) - 0.75 * std::sqrt(mesh->total_volume())) < 1e-12);
        const double l2 = l2_discrepancy(a, b);
        CHECK(std::abs(l2 * l2 - brute_l2_squared(a, b)) < 1e-11);
    }
}

TEST_CASE("regularizer") {
    for (int dim : {2, 3}) {
        const MeshPtr mesh = dim == 2 ? square(4) : cube(3);
        const CgOperators ops = assemble_cg_operators(*mesh);
        const CgVectorField zero(mesh, false);
        CHECK(regularizer(zero, ops) == 0.0);
        const Vec3 c{0.3, -1.2, 0.5};
        const CgVectorField cst = interpolate_cg(mesh, [&](const Vec3&) { return c; }, false);
        double cc = 0.0;
        for (int a = 0; a < dim; ++a) {
            cc += c[static_cast<std::size_t>(a)] * c[static_cast<std::size_t>(a)];
        }
        CHECK(std::abs(regularizer(cst, ops) - cc * mesh->total_volume()) < 1e-10);

        std::mt19937_64 rng(15);
        const std::size_t n = static_cast<std::size_t>(mesh->num_vertices() * dim);
        const CgVectorField v(mesh, random_vector(rng, n), false);
        const auto g = regularizer_gradient(v, ops);
        const auto dir = random_vector(rng, n);
        const double h = 1e-4;
        CgVectorField p = v;
        CgVectorField q = v;
        for (std::size_t i = 0; i < n; ++i) {
            p.values[i] += h * dir[i];
            q.values[i] -= h * dir[i];
        }
        const double fd = (regularizer(p, ops) - regularizer(q, ops)) / (2 * h);
        CHECK(std::abs(fd - dot(g, dir)) / std::abs(fd) < 1e-8);
    }
}

TEST_CASE("default huber threshold") {
    std::vector<double> t(101);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<double>(i) / 100.0;
    }
    CHECK(default_huber_delta(t) == doctest::Approx(0.098).epsilon(1e-12));
    CHECK(default_huber_delta(std::vector<double>(10, 3.0)) == 0.1);
}

TEST_CASE("objective config validation") {
    ObjectiveConfig c;
    CHECK_NOTHROW(c.validate());
    c.delta = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.delta = 0.1;
    c.gamma = -1.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}
