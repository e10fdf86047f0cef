#pragma once

#include "dgreg/assembly.hpp"
#include "dgreg/fields.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <memory>
#include <span>
#include <vector>

namespace dgreg {

/// Coefficients of alpha v - beta Lap v = v~ with v = 0 on the boundary.
struct SmootherConfig {
    double alpha = 0.0;
    double beta = 1.0;
    double cg_tol = 1e-10;
    int cg_maxit = 10000;
    bool jacobi = false;

    void validate() const;
};

/// Control chain v^ -> v~ = C^{-1} v^ -> v = (alpha M + beta K)^{-1} M v~ and
/// the transpose of every link. C = diag(sqrt(M_L)) is the Cholesky factor of
/// the lumped mass matrix. Control vectors are vertex-major, d per vertex.
class ControlChain {
public:
    ControlChain(MeshPtr mesh, SmootherConfig config);
    ~ControlChain();
    ControlChain(const ControlChain&) = delete;
    ControlChain& operator=(const ControlChain&) = delete;

    const MeshPtr& mesh() const { return mesh_; }
    const CgOperators& operators() const { return ops_; }
    const SmootherConfig& config() const { return config_; }
    std::size_t control_size() const;

    /// v~ = C^{-1} v^.
    std::vector<double> cholesky_scale(std::span<const double> v_hat) const;
    /// C^{-T} w (C is diagonal, so the same scaling).
    std::vector<double> cholesky_scale_adjoint(std::span<const double> w) const;
    /// C x, for checking C^T C = M_L.
    std::vector<double> cholesky_factor_apply(std::span<const double> x) const;

    /// Elliptic smoothing; the result is zero on the boundary.
    CgVectorField smooth_velocity(const CgVectorField& tilde_v) const;
    /// Transpose of smooth_velocity as a linear map on nodal vectors.
    std::vector<double> smooth_velocity_adjoint(std::span<const double> w) const;

    CgVectorField control_to_velocity(std::span<const double> v_hat) const;
    std::vector<double> control_to_velocity_adjoint(std::span<const double> w) const;

    /// Iterations used by the most recent solve (diagnostic).
    long last_iterations() const { return last_iterations_; }

private:
    /// Solves A x = b per component with zero boundary rows.
    std::vector<double> solve(std::span<const double> rhs) const;

    struct Solver;
    MeshPtr mesh_;
    SmootherConfig config_;
    CgOperators ops_;
    std::vector<double> sqrt_lumped_;
    std::unique_ptr<Solver> solver_;
    mutable long last_iterations_ = 0;
};

/// Throws InvalidArgument unless all entries of `lumped` are positive.
void check_lumped_mass(std::span<const double> lumped);

} // namespace dgreg
