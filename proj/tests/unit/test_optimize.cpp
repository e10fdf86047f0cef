#include "doctest.h"
#include "helpers.hpp"

#include "dgreg/errors.hpp"
#include "dgreg/objective.hpp"
#include "dgreg/optimize.hpp"
#include "dgreg/synthetic.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace dgreg;
using namespace testutil;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
}

struct Recorder {
    std::vector<std::vector<double>> xs;
    std::vector<LbfgsIteration> its;
    IterationCallback callback() {
        return [this](const LbfgsIteration& it, std::span<const double> x) {
            its.push_back(it);
            xs.emplace_back(x.begin(), x.end());
        };
    }
};

StageConfig small_stage(int iters) {
    StageConfig s;
    s.steps = 10;
    s.max_iterations = iters;
    s.gamma = 1e-3;
    return s;
}

std::pair<DgScalarField, DgScalarField> blob_pair(int n, int shift) {
    const int dims[2] = {n, n};
    SyntheticParams p;
    p.shift = {shift, 0, 0};
    p.radius = n * 0.22;
    const SyntheticPair pair = make_synthetic("translate-blob", dims, p, 3);
    const MeshPtr mesh = GridMesh::build(dims);
    return {voxel_image_to_dg(pair.input, mesh), voxel_image_to_dg(pair.target, mesh)};
}

} // namespace

TEST_CASE("lbfgs options validation") {
    LbfgsOptions o;
    CHECK_NOTHROW(o.validate());
    o.max_iterations = 0;
    CHECK_THROWS_AS(o.validate(), InvalidArgument);
    o = LbfgsOptions{};
    o.c1 = 0.95;
    CHECK_THROWS_AS(o.validate(), InvalidArgument);
    o = LbfgsOptions{};
    o.memory = 0;
    CHECK_THROWS_AS(o.validate(), InvalidArgument);
    CHECK(std::string(to_string(LbfgsStatus::line_search_failed)) == "line_search_failed");
}

TEST_CASE("convex quadratic matches a direct solve") {
    std::mt19937_64 rng(31);
    const int n = 10;
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            b(i, j) = uniform(rng, -1, 1);
        }
    }
    const Eigen::MatrixXd a = b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
        rhs[i] = uniform(rng, -1, 1);
    }
    const Eigen::VectorXd exact = a.ldlt().solve(rhs);
    auto fn = [&](std::span<const double> x, std::span<double> g) {
        const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
        const Eigen::VectorXd ax = a * xv;
        Eigen::Map<Eigen::VectorXd>(g.data(), n) = ax - rhs;
        return 0.5 * xv.dot(ax) - rhs.dot(xv);
    };
    LbfgsOptions o;
    o.max_iterations = 50;
    o.gtol_relative = 1e-12;
    const LbfgsResult r = lbfgs_minimize(fn, std::vector<double>(n, 0.0), o);
    CHECK(r.iterations <= 50);
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
        err += (r.x[static_cast<std::size_t>(i)] - exact[i]) * (r.x[static_cast<std::size_t>(i)] - exact[i]);
    }
    CHECK(std::sqrt(err) < 1e-8);

    // Started at the minimizer: no iterations needed.
    const std::vector<double> x0(exact.data(), exact.data() + n);
    const LbfgsResult s = lbfgs_minimize(fn, x0, o);
    CHECK(s.iterations <= 1);
    CHECK(s.status == LbfgsStatus::converged);
}

TEST_CASE("rosenbrock from the standard start") {
    LbfgsOptions o;
    o.max_iterations = 100;
    o.gtol_relative = 1e-12;
    Recorder rec;
    const LbfgsResult r = lbfgs_minimize(rosenbrock, {-1.2, 1.0}, o, rec.callback());
    CHECK(r.value < 1e-8);
    CHECK(r.iterations <= 100);
    CHECK(std::abs(r.x[0] - 1.0) < 1e-3);
    REQUIRE(rec.its.size() == r.trace.size());
    CHECK(rec.its.front().iteration == 0);
    for (std::size_t k = 1; k < rec.its.size(); ++k) {
        CHECK(rec.its[k].value <= rec.its[k - 1].value);
        CHECK(rec.its[k].armijo);
        CHECK(rec.its[k].curvature);
        // Independent strong Wolfe re-check along s = x_k - x_{k-1}.
        std::vector<double> g0(2);
        std::vector<double> g1(2);
        const double f0 = rosenbrock(rec.xs[k - 1], g0);
        const double f1 = rosenbrock(rec.xs[k], g1);
        const double s0 = rec.xs[k][0] - rec.xs[k - 1][0];
        const double s1 = rec.xs[k][1] - rec.xs[k - 1][1];
        const double d0 = g0[0] * s0 + g0[1] * s1;
        const double d1 = g1[0] * s0 + g1[1] * s1;
        CHECK(d0 < 0.0);
        CHECK(f1 <= f0 + o.c1 * d0 + 1e-14);
        CHECK(std::abs(d1) <= o.c2 * std::abs(d0) + 1e-14);
        CHECK(std::abs(rec.its[k].step_norm - std::hypot(s0, s1)) < 1e-12);
    }
}

TEST_CASE("memory one still converges on a quadratic") {
    auto fn = [](std::span<const double> x, std::span<double> g) {
        double f = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double w = 1.0 + static_cast<double>(i);
            g[i] = w * (x[i] - 1.0);
            f += 0.5 * w * (x[i] - 1.0) * (x[i] - 1.0);
        }
        return f;
    };
    LbfgsOptions o;
    o.memory = 1;
    o.max_iterations = 200;
    const LbfgsResult r = lbfgs_minimize(fn, std::vector<double>(6, 0.0), o);
    CHECK(r.status == LbfgsStatus::converged);
    for (double x : r.x) {
        CHECK(std::abs(x - 1.0) < 1e-6);
    }
}

TEST_CASE("wrong gradient ends with line search failure") {
    auto fn = [](std::span<const double> x, std::span<double> g) {
        g[0] = -2.0 * x[0];
        return x[0] * x[0];
    };
    LbfgsResult r;
    CHECK_NOTHROW(r = lbfgs_minimize(fn, {1.0}, LbfgsOptions{}));
    CHECK(r.status == LbfgsStatus::line_search_failed);
    CHECK(r.x[0] == 1.0);
    CHECK(r.value == 1.0);
}

TEST_CASE("blowup inside the line search counts as infinite value") {
    auto fn = [](std::span<const double> x, std::span<double> g) {
        if (x[0] >= 1.0) {
            throw NumericBlowup("test blowup", 0, 1e300);
        }
        g[0] = 2.0 * (x[0] - 5.0);
        return (x[0] - 5.0) * (x[0] - 5.0);
    };
    LbfgsOptions o;
    o.max_iterations = 20;
    LbfgsResult r;
    CHECK_NOTHROW(r = lbfgs_minimize(fn, {0.0}, o));
    CHECK(r.x[0] < 1.0);
    CHECK(r.value < 25.0);
    CHECK(std::isfinite(r.value));
}

TEST_CASE("non-finite start is rejected") {
    auto fn = [](std::span<const double>, std::span<double> g) {
        g[0] = 0.0;
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS(lbfgs_minimize(fn, {0.0}, LbfgsOptions{}));
}

TEST_CASE("stage config validation") {
    StageConfig s;
    CHECK_NOTHROW(s.validate());
    s.gamma = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = StageConfig{};
    s.alpha = 0.0;
    s.beta = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = StageConfig{};
    s.delta = -1.0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = StageConfig{};
    s.steps = 0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = StageConfig{};
    s.max_iterations = 0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("identical images give zero velocities") {
    const auto [a, e] = blob_pair(10, 2);
    const std::vector<StageConfig> stages(2, small_stage(5));
    const RegistrationResult r = register_multistage(a, a, stages);
    REQUIRE(r.stages.size() == 2);
    for (const auto& s : r.stages) {
        CHECK(s.iterations == 0);
        CHECK(s.final_objective == 0.0);
        CHECK(s.final_l2 == 0.0);
    }
    for (const auto& v : r.velocities) {
        CHECK(v.max_norm() == 0.0);
    }
    CHECK(r.trace.size() == 2);
    CHECK(r.images.back().coefficients == a.coefficients);
}

TEST_CASE("multistage registration bookkeeping") {
    const auto [a, e] = blob_pair(12, 2);
    std::vector<StageConfig> stages(2, small_stage(4));
    stages[1].alpha = 0.5;
    stages[1].beta = 0.5;
    std::vector<TraceRow> seen;
    const RegistrationResult r = register_multistage(a, e, stages, [&](const TraceRow& row) { seen.push_back(row); });
    REQUIRE(r.images.size() == 3);
    REQUIRE(r.velocities.size() == 2);
    CHECK(r.images[0].coefficients == a.coefficients);
    CHECK(seen.size() == r.trace.size());
    const double l2_0 = l2_discrepancy(a, e);
    CHECK(r.trace.front().l2 == doctest::Approx(l2_0).epsilon(1e-12));

    for (std::size_t si = 0; si < r.stages.size(); ++si) {
        const StageSummary& s = r.stages[si];
        CHECK(s.final_objective <= s.initial_objective);
        CHECK(s.final_l2 == doctest::Approx(l2_discrepancy(r.images[si + 1], e)).epsilon(1e-12));
        double prev = std::numeric_limits<double>::infinity();
        int rows = 0;
        for (const TraceRow& row : r.trace) {
            if (row.stage == static_cast<int>(si + 1)) {
                CHECK(row.iteration == rows);
                CHECK(row.objective <= prev);
                CHECK(std::abs(row.objective - (0.5 * row.mismatch + stages[si].gamma * row.regularizer)) <
                      1e-12 * std::max(1.0, row.objective));
                prev = row.objective;
                ++rows;
            }
        }
        CHECK(rows == s.iterations + 1);
    }
    CHECK(r.stages[0].final_l2 < l2_0);

    // Replaying the stored velocities reproduces the recorded images.
    const DgScalarField replay = replay_stages(a, r.velocities, stages);
    double err = 0.0;
    for (std::size_t i = 0; i < replay.size(); ++i) {
        err = std::max(err, std::abs(replay.coefficients[i] - r.images.back().coefficients[i]));
    }
    CHECK(err <= 1e-12);

    // Deterministic: a rerun gives a bit-identical trace.
    const RegistrationResult again = register_multistage(a, e, stages);
    REQUIRE(again.trace.size() == r.trace.size());
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        CHECK(again.trace[i].objective == r.trace[i].objective);
        CHECK(again.trace[i].l2 == r.trace[i].l2);
        CHECK(again.trace[i].grad_norm == r.trace[i].grad_norm);
    }
}

TEST_CASE("registration errors name the stage") {
    const auto [a, e] = blob_pair(8, 1);
    std::vector<StageConfig> stages(2, small_stage(2));
    stages[1].c1 = 0.95;
    try {
        register_multistage(a, e, stages);
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& err) {
        CHECK(std::string(err.what()).find("stage 2") != std::string::npos);
    }
    CHECK_THROWS_AS(register_multistage(a, e, std::span<const StageConfig>{}), InvalidArgument);
    CHECK_THROWS_AS(replay_stages(a, std::vector<CgVectorField>(1), std::span<const StageConfig>{}), InvalidArgument);
}
