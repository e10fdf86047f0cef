#include "dgreg/adjoint.hpp"

#include "dgreg/errors.hpp"

#include <cmath>
#include <limits>

namespace dgreg {

namespace {

bool finite(std::span<const double> x) {
    for (double v : x) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        s += v * v;
    }
    return std::sqrt(s);
}

} // namespace

ReducedObjective::ReducedObjective(DgScalarField phi_a, DgScalarField phi_e, TransportSettings transport,
                                   ObjectiveConfig objective, const ControlChain& chain)
    : phi_a_(std::move(phi_a)), phi_e_(std::move(phi_e)), transport_(transport), objective_(objective),
      chain_(chain) {
    require_same_mesh(phi_a_.mesh, phi_e_.mesh, "ReducedObjective");
    require_same_mesh(phi_a_.mesh, chain_.mesh(), "ReducedObjective");
    objective_.validate();
    if (transport_.steps < 1 || !(transport_.final_time > 0.0) || !(transport_.epsilon >= 0.0)) {
        throw InvalidArgument("ReducedObjective: invalid transport settings");
    }
}

TransportProblem ReducedObjective::problem_for(const CgVectorField& velocity) const {
    TransportProblem p;
    p.mesh = phi_a_.mesh;
    p.velocity = velocity;
    p.final_time = transport_.final_time;
    p.steps = transport_.steps;
    p.epsilon = transport_.epsilon;
    return p;
}

GradientReport ReducedObjective::value(std::span<const double> v_hat) const {
    if (v_hat.size() != size()) {
        throw InvalidArgument("ReducedObjective: control has the wrong length");
    }
    const CgVectorField tilde(phi_a_.mesh, chain_.cholesky_scale(v_hat), false);
    const CgVectorField velocity = chain_.smooth_velocity(tilde);
    const TransportOperator op(problem_for(velocity));
    auto fwd = solve_transport(phi_a_, op, false);
    GradientReport r;
    r.mismatch = mismatch(fwd.final_state, phi_e_, objective_.delta);
    r.regularizer = regularizer(tilde, chain_.operators());
    r.objective = 0.5 * r.mismatch + objective_.gamma * r.regularizer;
    r.stored_states = 2;
    r.final_state = std::move(fwd.final_state);
    return r;
}

GradientReport ReducedObjective::evaluate(std::span<const double> v_hat) const {
    if (!(transport_.epsilon > 0.0)) {
        throw InvalidArgument("gradient requires a smoothed flux (epsilon > 0)");
    }
    if (v_hat.size() != size()) {
        throw InvalidArgument("ReducedObjective: control has the wrong length");
    }
    const CgVectorField tilde(phi_a_.mesh, chain_.cholesky_scale(v_hat), false);
    const CgVectorField velocity = chain_.smooth_velocity(tilde);
    const TransportOperator op(problem_for(velocity));

    auto fwd = solve_transport(phi_a_, op, true);
    const Trajectory& traj = *fwd.trajectory;

    GradientReport r;
    r.mismatch = mismatch(fwd.final_state, phi_e_, objective_.delta);
    r.regularizer = regularizer(tilde, chain_.operators());
    r.objective = 0.5 * r.mismatch + objective_.gamma * r.regularizer;
    r.stored_states = traj.stored_snapshots();

    // Reverse sweep. For phi* = phi + dt/2 B phi, phi+ = phi + dt B phi*:
    //   mu = dt M^{-1} lam+,  xi = L^T mu,  nu = dt/2 M^{-1} xi,
    //   lam = lam+ + xi + L^T nu,  dJ/dv += d<mu, L phi*>/dv + d<nu, L phi>/dv.
    std::vector<double> lam = mismatch_gradient(fwd.final_state, phi_e_, objective_.delta);
    for (double& x : lam) {
        x *= 0.5;
    }
    const std::size_t n = lam.size();
    const double dt = traj.dt;
    const DgMass& mass = op.mass();
    const SparseMatrix& L = op.residual_matrix();
    VelocitySensitivity sens(op);
    std::vector<double> mu(n);
    std::vector<double> xi(n);
    std::vector<double> nu(n);
    std::vector<double> lt(n);
    r.adjoint_norms.reserve(static_cast<std::size_t>(transport_.steps) + 1);
    r.adjoint_norms.push_back(norm2(lam));
    for (int k = transport_.steps - 1; k >= 0; --k) {
        const auto ku = static_cast<std::size_t>(k);
        mass.apply_inverse(lam, mu);
        for (double& x : mu) {
            x *= dt;
        }
        Eigen::Map<const Eigen::VectorXd> muv(mu.data(), static_cast<Index>(n));
        Eigen::Map<Eigen::VectorXd> xiv(xi.data(), static_cast<Index>(n));
        xiv.noalias() = L.transpose() * muv;
        mass.apply_inverse(xi, nu);
        for (double& x : nu) {
            x *= 0.5 * dt;
        }
        Eigen::Map<const Eigen::VectorXd> nuv(nu.data(), static_cast<Index>(n));
        Eigen::Map<Eigen::VectorXd> ltv(lt.data(), static_cast<Index>(n));
        ltv.noalias() = L.transpose() * nuv;
        sens.accumulate(mu, traj.midpoints[ku]);
        sens.accumulate(nu, traj.states[ku]);
        for (std::size_t i = 0; i < n; ++i) {
            lam[i] += xi[i] + lt[i];
        }
        if (!finite(lam)) {
            throw NumericBlowup("adjoint reverse sweep", ku, norm2(lam));
        }
        r.adjoint_norms.push_back(norm2(lam));
    }

    const std::vector<double> gv = sens.gradient();
    std::vector<double> g_tilde = chain_.smooth_velocity_adjoint(gv);
    const std::vector<double> greg = regularizer_gradient(tilde, chain_.operators());
    for (std::size_t i = 0; i < g_tilde.size(); ++i) {
        g_tilde[i] += objective_.gamma * greg[i];
    }
    r.gradient = chain_.cholesky_scale_adjoint(g_tilde);
    if (!finite(r.gradient) || !std::isfinite(r.objective)) {
        throw NumericBlowup("objective gradient", 0, norm2(r.gradient));
    }
    r.final_state = std::move(fwd.final_state);
    return r;
}

GradientReport evaluate_objective_and_gradient(std::span<const double> v_hat, const DgScalarField& phi_a,
                                               const DgScalarField& phi_e, const TransportSettings& transport,
                                               const ObjectiveConfig& objective, const ControlChain& chain) {
    ReducedObjective j(phi_a, phi_e, transport, objective, chain);
    return j.evaluate(v_hat);
}

FdReport fd_gradient_check(const std::function<double(std::span<const double>)>& value,
                           std::span<const double> gradient, std::span<const double> x,
                           std::span<const double> direction, std::span<const double> steps) {
    if (direction.size() != x.size() || gradient.size() != x.size()) {
        throw InvalidArgument("fd_gradient_check: size mismatch");
    }
    if (norm2(direction) == 0.0) {
        throw InvalidArgument("fd_gradient_check: direction must be nonzero");
    }
    double dd = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dd += gradient[i] * direction[i];
    }
    FdReport rep;
    rep.min_error = std::numeric_limits<double>::infinity();
    std::vector<double> xp(x.size());
    std::vector<double> xm(x.size());
    for (double h : steps) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            xp[i] = x[i] + h * direction[i];
            xm[i] = x[i] - h * direction[i];
        }
        FdRow row;
        row.step = h;
        row.finite_difference = (value(xp) - value(xm)) / (2.0 * h);
        row.adjoint = dd;
        const double scale = std::max(std::abs(dd), std::numeric_limits<double>::min());
        row.relative_error = std::abs(row.finite_difference - dd) / scale;
        rep.min_error = std::min(rep.min_error, row.relative_error);
        rep.rows.push_back(row);
    }
    rep.degraded = !(rep.min_error < 1e-5);
    return rep;
}

FdReport fd_gradient_check(const ReducedObjective& objective, std::span<const double> v_hat,
                           std::span<const double> direction, std::span<const double> steps) {
    const GradientReport base = objective.evaluate(v_hat);
    auto f = [&](std::span<const double> x) { return objective.value(x).objective; };
    return fd_gradient_check(f, base.gradient, v_hat, direction, steps);
}

} // namespace dgreg
