#include "dgreg/control.hpp"

#include "dgreg/errors.hpp"

#include <cmath>
#include <string>

namespace dgreg {

void SmootherConfig::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(alpha + beta > 0.0)) {
        throw InvalidArgument("SmootherConfig: need alpha, beta >= 0 and alpha + beta > 0");
    }
    if (!(cg_tol > 0.0 && cg_tol < 1.0)) {
        throw InvalidArgument("SmootherConfig: cg_tol must be in (0, 1)");
    }
    if (cg_maxit < 1) {
        throw InvalidArgument("SmootherConfig: cg_maxit must be >= 1");
    }
}

void check_lumped_mass(std::span<const double> lumped) {
    for (std::size_t i = 0; i < lumped.size(); ++i) {
        if (!(lumped[i] > 0.0)) {
            throw InvalidArgument("lumped mass entry " + std::to_string(i) + " is not positive");
        }
    }
}

struct ControlChain::Solver {
    using ColMatrix = Eigen::SparseMatrix<double>;
    ColMatrix op;
    Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper, Eigen::IdentityPreconditioner> plain;
    Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> jacobi;
};

ControlChain::ControlChain(MeshPtr mesh, SmootherConfig config)
    : mesh_(std::move(mesh)), config_(config), solver_(std::make_unique<Solver>()) {
    config_.validate();
    ops_ = assemble_cg_operators(*mesh_);
    check_lumped_mass(ops_.lumped_mass);
    sqrt_lumped_.resize(ops_.lumped_mass.size());
    for (std::size_t i = 0; i < sqrt_lumped_.size(); ++i) {
        sqrt_lumped_[i] = std::sqrt(ops_.lumped_mass[i]);
    }

    // alpha M + beta K with boundary rows and columns replaced by identity.
    const Index nv = mesh_->num_vertices();
    std::vector<Eigen::Triplet<double>> trip;
    for (Index r = 0; r < nv; ++r) {
        if (mesh_->is_boundary_vertex(r)) {
            trip.emplace_back(r, r, 1.0);
            continue;
        }
        for (SparseMatrix::InnerIterator it(ops_.mass, r); it; ++it) {
            if (!mesh_->is_boundary_vertex(it.col())) {
                trip.emplace_back(r, it.col(), config_.alpha * it.value());
            }
        }
        for (SparseMatrix::InnerIterator it(ops_.stiffness, r); it; ++it) {
            if (!mesh_->is_boundary_vertex(it.col())) {
                trip.emplace_back(r, it.col(), config_.beta * it.value());
            }
        }
    }
    solver_->op.resize(nv, nv);
    solver_->op.setFromTriplets(trip.begin(), trip.end());
    if (config_.jacobi) {
        solver_->jacobi.setTolerance(config_.cg_tol);
        solver_->jacobi.setMaxIterations(config_.cg_maxit);
        solver_->jacobi.compute(solver_->op);
    } else {
        solver_->plain.setTolerance(config_.cg_tol);
        solver_->plain.setMaxIterations(config_.cg_maxit);
        solver_->plain.compute(solver_->op);
    }
}

ControlChain::~ControlChain() = default;

std::size_t ControlChain::control_size() const {
    return static_cast<std::size_t>(mesh_->num_vertices() * mesh_->dim());
}

std::vector<double> ControlChain::cholesky_scale(std::span<const double> v_hat) const {
    if (v_hat.size() != control_size()) {
        throw InvalidArgument("cholesky_scale: control has the wrong length");
    }
    const int d = mesh_->dim();
    std::vector<double> out(v_hat.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = v_hat[i] / sqrt_lumped_[i / static_cast<std::size_t>(d)];
    }
    return out;
}

std::vector<double> ControlChain::cholesky_scale_adjoint(std::span<const double> w) const {
    return cholesky_scale(w);
}

std::vector<double> ControlChain::cholesky_factor_apply(std::span<const double> x) const {
    if (x.size() != control_size()) {
        throw InvalidArgument("cholesky_factor_apply: vector has the wrong length");
    }
    const int d = mesh_->dim();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[i] * sqrt_lumped_[i / static_cast<std::size_t>(d)];
    }
    return out;
}

std::vector<double> ControlChain::solve(std::span<const double> rhs) const {
    const int d = mesh_->dim();
    const Index nv = mesh_->num_vertices();
    std::vector<double> out(rhs.size(), 0.0);
    Eigen::VectorXd b(nv);
    Eigen::VectorXd x(nv);
    long iters = 0;
    for (int a = 0; a < d; ++a) {
        double bnorm = 0.0;
        for (Index v = 0; v < nv; ++v) {
            b(v) = mesh_->is_boundary_vertex(v) ? 0.0 : rhs[static_cast<std::size_t>(v * d + a)];
            bnorm += b(v) * b(v);
        }
        if (bnorm == 0.0) {
            continue;
        }
        double err = 0.0;
        bool ok = false;
        if (config_.jacobi) {
            x = solver_->jacobi.solve(b);
            err = solver_->jacobi.error();
            iters += solver_->jacobi.iterations();
            ok = solver_->jacobi.info() == Eigen::Success;
        } else {
            x = solver_->plain.solve(b);
            err = solver_->plain.error();
            iters += solver_->plain.iterations();
            ok = solver_->plain.info() == Eigen::Success;
        }
        if (!ok) {
            throw SolverError("elliptic velocity smoothing: CG did not converge", err,
                              config_.jacobi ? solver_->jacobi.iterations() : solver_->plain.iterations());
        }
        for (Index v = 0; v < nv; ++v) {
            out[static_cast<std::size_t>(v * d + a)] = mesh_->is_boundary_vertex(v) ? 0.0 : x(v);
        }
    }
    last_iterations_ = iters;
    return out;
}

CgVectorField ControlChain::smooth_velocity(const CgVectorField& tilde_v) const {
    require_same_mesh(tilde_v.mesh, mesh_, "smooth_velocity");
    const auto rhs = apply_componentwise(ops_.mass, tilde_v.values, mesh_->dim());
    return CgVectorField(mesh_, solve(rhs), true);
}

std::vector<double> ControlChain::smooth_velocity_adjoint(std::span<const double> w) const {
    if (w.size() != control_size()) {
        throw InvalidArgument("smooth_velocity_adjoint: vector has the wrong length");
    }
    // (P A^{-1} P M)^T = M P A^{-1} P with P the interior projection.
    const auto y = solve(w);
    return apply_componentwise(ops_.mass, y, mesh_->dim());
}

CgVectorField ControlChain::control_to_velocity(std::span<const double> v_hat) const {
    CgVectorField tilde(mesh_, cholesky_scale(v_hat), false);
    return smooth_velocity(tilde);
}

std::vector<double> ControlChain::control_to_velocity_adjoint(std::span<const double> w) const {
    return cholesky_scale_adjoint(smooth_velocity_adjoint(w));
}

} // namespace dgreg
