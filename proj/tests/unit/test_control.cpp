#include "doctest.h"
#include "helpers.hpp"

#include "dgreg/assembly.hpp"
#include "dgreg/control.hpp"
#include "dgreg/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

using namespace dgreg;
using namespace testutil;

namespace {

SmootherConfig smoother(double alpha, double beta) {
    SmootherConfig c;
    c.alpha = alpha;
    c.beta = beta;
    return c;
}

double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

} // namespace

TEST_CASE("smoother config validation") {
    CHECK_NOTHROW(smoother(0.0, 1.0).validate());
    CHECK_NOTHROW(smoother(1.0, 0.0).validate());
    CHECK_THROWS_AS(smoother(0.0, 0.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(smoother(-1.0, 1.0).validate(), InvalidArgument);
    SmootherConfig c;
    c.cg_tol = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.cg_tol = 1e-8;
    c.cg_maxit = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    const std::vector<double> bad{1.0, 0.0, 2.0};
    CHECK_THROWS_AS(check_lumped_mass(bad), InvalidArgument);
}

TEST_CASE("cholesky scaling") {
    for (int dim : {2, 3}) {
        const MeshPtr mesh = dim == 2 ? square(4) : cube(3);
        const ControlChain chain(mesh, SmootherConfig{});
        const std::size_t n = chain.control_size();
        CHECK(n == static_cast<std::size_t>(mesh->num_vertices() * dim));
        for (double x : chain.cholesky_scale(std::vector<double>(n, 0.0))) {
            CHECK(x == 0.0);
        }
        std::mt19937_64 rng(21);
        const auto x = random_vector(rng, n);
        const auto cx = chain.cholesky_factor_apply(x);
        const auto ctcx = chain.cholesky_factor_apply(cx);
        const auto& ml = chain.operators().lumped_mass;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(ctcx[i] - ml[i / static_cast<std::size_t>(dim)] * x[i]) < 1e-12);
        }
        const auto back = chain.cholesky_scale(cx);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(back[i] - x[i]) < 1e-12);
        }
        const auto y = random_vector(rng, n);
        CHECK(std::abs(dot(chain.cholesky_scale(x), y) - dot(x, chain.cholesky_scale_adjoint(y))) < 1e-12);
    }
}

TEST_CASE("cholesky factor at two resolutions") {
    // Unit voxels: interior lumped mass is 1 in 2D at any resolution, the
    // corner on the diagonal carries 1/3 and the off-diagonal corner 1/6.
    for (int n : {4, 8}) {
        const MeshPtr mesh = square(n);
        const ControlChain chain(mesh, SmootherConfig{});
        std::vector<double> ones(chain.control_size(), 1.0);
        const auto s = chain.cholesky_scale(ones);
        const Index centre = mesh->vertex_index(n / 2, n / 2);
        CHECK(std::abs(s[static_cast<std::size_t>(2 * centre)] - 1.0) < 1e-14);
        CHECK(std::abs(s[0] - std::sqrt(3.0)) < 1e-13);
        const Index corner = mesh->vertex_index(n, 0);
        CHECK(std::abs(s[static_cast<std::size_t>(2 * corner)] - std::sqrt(6.0)) < 1e-13);
        const Index edge = mesh->vertex_index(n / 2, 0);
        CHECK(std::abs(s[static_cast<std::size_t>(2 * edge)] - std::sqrt(2.0)) < 1e-13);
    }
}

TEST_CASE("smoothing zero and identity cases") {
    const MeshPtr mesh = square(6);
    const ControlChain lap(mesh, smoother(0.0, 1.0));
    const CgVectorField zero(mesh, false);
    const CgVectorField v0 = lap.smooth_velocity(zero);
    CHECK(v0.dirichlet_zero);
    CHECK(max_abs(v0.values) == 0.0);

    // alpha = 1, beta = 0: interior rows of M v = M v~ with v = 0 on the
    // boundary reduce to the identity only when v~ already vanishes there.
    const ControlChain id(mesh, smoother(1.0, 0.0));
    std::mt19937_64 rng(22);
    CgVectorField tv(mesh, random_vector(rng, static_cast<std::size_t>(mesh->num_vertices() * 2)), false);
    tv.enforce_dirichlet();
    const CgVectorField v = id.smooth_velocity(tv);
    double err = 0.0;
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        err = std::max(err, std::abs(v.values[i] - tv.values[i]));
    }
    CHECK(err < 1e-9);
}

TEST_CASE("boundary values vanish") {
    for (int dim : {2, 3}) {
        const MeshPtr mesh = dim == 2 ? square(5) : cube(3);
        const ControlChain chain(mesh, smoother(0.5, 1.0));
        std::mt19937_64 rng(23);
        const auto vh = random_vector(rng, chain.control_size());
        const CgVectorField v = chain.control_to_velocity(vh);
        CHECK_NOTHROW(v.check_boundary());
        for (Index p = 0; p < mesh->num_vertices(); ++p) {
            if (mesh->is_boundary_vertex(p)) {
                for (int a = 0; a < dim; ++a) {
                    CHECK(v.values[static_cast<std::size_t>(p * dim + a)] == 0.0);
                }
            }
        }
    }
}

TEST_CASE("adjoint pairings") {
    for (int dim : {2, 3}) {
        for (auto [alpha, beta] : {std::pair{0.0, 1.0}, std::pair{1.0, 0.0}, std::pair{0.3, 2.0}}) {
            const MeshPtr mesh = dim == 2 ? square(6) : cube(3);
            // Tight solves so the pairing measures the transpose, not CG stopping error.
            SmootherConfig cfg = smoother(alpha, beta);
            cfg.cg_tol = 1e-14;
            const ControlChain chain(mesh, cfg);
            std::mt19937_64 rng(24);
            const std::size_t n = chain.control_size();
            for (int trial = 0; trial < 3; ++trial) {
                const auto x = random_vector(rng, n);
                const auto w = random_vector(rng, n);
                const CgVectorField sx = chain.smooth_velocity(CgVectorField(mesh, x, false));
                const double lhs = dot(sx.values, w);
                const double rhs = dot(x, chain.smooth_velocity_adjoint(w));
                CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));
                const double full_l = dot(chain.control_to_velocity(x).values, w);
                const double full_r = dot(x, chain.control_to_velocity_adjoint(w));
                CHECK(std::abs(full_l - full_r) < 1e-10 * std::max(1.0, std::abs(full_l)));
            }
        }
    }
}

TEST_CASE("smoothing against a dense direct solve") {
    const MeshPtr mesh = square(8);
    const ControlChain chain(mesh, smoother(0.0, 1.0));
    const CgOperators& ops = chain.operators();
    const Index nv = mesh->num_vertices();
    const Eigen::MatrixXd k = Eigen::MatrixXd(ops.stiffness);
    const Eigen::MatrixXd m = Eigen::MatrixXd(ops.mass);
    std::vector<Index> interior;
    for (Index v = 0; v < nv; ++v) {
        if (!mesh->is_boundary_vertex(v)) {
            interior.push_back(v);
        }
    }
    const auto ni = static_cast<Index>(interior.size());
    Eigen::MatrixXd kii(ni, ni);
    Eigen::MatrixXd mi(ni, nv);
    for (Index r = 0; r < ni; ++r) {
        for (Index c = 0; c < ni; ++c) {
            kii(r, c) = k(interior[static_cast<std::size_t>(r)], interior[static_cast<std::size_t>(c)]);
        }
        mi.row(r) = m.row(interior[static_cast<std::size_t>(r)]);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(kii);
    std::mt19937_64 rng(25);
    const auto vh = random_vector(rng, chain.control_size());
    const auto tv = chain.cholesky_scale(vh);
    const CgVectorField v = chain.control_to_velocity(vh);
    double err = 0.0;
    for (int a = 0; a < 2; ++a) {
        Eigen::VectorXd comp(nv);
        for (Index p = 0; p < nv; ++p) {
            comp[p] = tv[static_cast<std::size_t>(p * 2 + a)];
        }
        const Eigen::VectorXd sol = ldlt.solve(mi * comp);
        for (Index r = 0; r < ni; ++r) {
            const auto p = interior[static_cast<std::size_t>(r)];
            err = std::max(err, std::abs(sol[r] - v.values[static_cast<std::size_t>(p * 2 + a)]));
        }
    }
    CHECK(err < 1e-8);
    CHECK(v.max_norm() < max_abs(tv));
}

TEST_CASE("manufactured poisson solution converges at second order") {
    // -Lap u = f on [0,n]^2 with u = sin(pi x/n) sin(pi y/n).
    std::vector<double> errs;
    for (int n : {8, 16, 32}) {
        const MeshPtr mesh = square(n);
        const ControlChain chain(mesh, smoother(0.0, 1.0));
        const double k = std::numbers::pi / n;
        auto u = [k](const Vec3& x) { return std::sin(k * x[0]) * std::sin(k * x[1]); };
        const CgVectorField f = interpolate_cg(
            mesh, [&](const Vec3& x) { return Vec3{2 * k * k * u(x), -2 * k * k * u(x), 0.0}; }, false);
        const CgVectorField v = chain.smooth_velocity(f);
        double e = 0.0;
        for (Index p = 0; p < mesh->num_vertices(); ++p) {
            const double ex = u(mesh->vertex(p));
            e = std::max(e, std::abs(v.values[static_cast<std::size_t>(2 * p)] - ex));
            e = std::max(e, std::abs(v.values[static_cast<std::size_t>(2 * p + 1)] + ex));
        }
        errs.push_back(e);
    }
    CHECK(errs[0] < 0.05);
    CHECK(errs[0] / errs[1] > 3.5);
    CHECK(errs[1] / errs[2] > 3.5);
}

TEST_CASE("jacobi option gives the same velocity") {
    const MeshPtr mesh = square(10);
    SmootherConfig plain = smoother(0.2, 1.0);
    SmootherConfig jac = plain;
    jac.jacobi = true;
    const ControlChain a(mesh, plain);
    const ControlChain b(mesh, jac);
    std::mt19937_64 rng(26);
    const auto vh = random_vector(rng, a.control_size());
    const auto va = a.control_to_velocity(vh).values;
    const auto vb = b.control_to_velocity(vh).values;
    double err = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        err = std::max(err, std::abs(va[i] - vb[i]));
    }
    CHECK(err < 1e-8);
    CHECK(a.last_iterations() > 0);
}

TEST_CASE("solver failure is reported") {
    const MeshPtr mesh = square(12);
    SmootherConfig c = smoother(0.0, 1.0);
    c.cg_maxit = 1;
    c.cg_tol = 1e-14;
    const ControlChain chain(mesh, c);
    std::mt19937_64 rng(27);
    CHECK_THROWS_AS(chain.control_to_velocity(random_vector(rng, chain.control_size())), SolverError);
}
