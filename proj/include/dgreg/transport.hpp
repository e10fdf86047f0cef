#pragma once

#include "dgreg/assembly.hpp"
#include "dgreg/fields.hpp"
#include "dgreg/quadrature.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dgreg {

/// Linear transport d/dt phi + v . grad phi = 0 on [0, T] with a stationary
/// CG1 velocity that vanishes on the box boundary.
struct TransportProblem {
    MeshPtr mesh;
    CgVectorField velocity;
    double final_time = 1.0;
    int steps = 100;
    /// Flux smoothing width; 0 selects the exact upwind flux.
    double epsilon = 1e-2;

    double dt() const { return final_time / steps; }
    void validate() const;
};

/// Logistic sigmoid 1 / (1 + exp(-x/eps)); the exponent is clamped to +-40.
double sigmoid(double epsilon, double x);
/// Smoothed max(0, x) = sigmoid(x) x.
double smoothed_max(double epsilon, double x);
/// d/dx smoothed_max, consistent with the clamped sigmoid.
double smoothed_max_derivative(double epsilon, double x);
/// Upwind flux through a facet with normal velocity `vn` (E1 -> E2); the
/// smoothed variant is used for epsilon > 0.
double numerical_flux(double phi_e1, double phi_e2, double vn, double epsilon);
/// d/d(vn) of numerical_flux.
double numerical_flux_dvn(double phi_e1, double phi_e2, double vn, double epsilon);

/// Assembled semi-discrete operator for a fixed velocity:
///   M dphi/dt = L phi,   rate(phi) = M^{-1} L phi.
/// L pairs phi with each test function psi through
///   sum_E int div(v) psi phi + sum_E int phi v.grad(psi) - sum_F int [[psi]] f_eps.
class TransportOperator {
public:
    explicit TransportOperator(const TransportProblem& problem);

    const TransportProblem& problem() const { return problem_; }
    const DgMass& mass() const { return mass_; }
    const SparseMatrix& residual_matrix() const { return residual_; }
    std::size_t size() const { return static_cast<std::size_t>(residual_.rows()); }

    void residual(std::span<const double> phi, std::span<double> out) const;
    void rate(std::span<const double> phi, std::span<double> out) const;
    void rate_transpose(std::span<const double> w, std::span<double> out) const;

    /// Explicit midpoint step; optionally returns the midpoint stage.
    void step(std::span<const double> phi, double dt, std::span<double> out,
              std::span<double> midpoint = {}) const;
    /// Transpose of the linear map implemented by step().
    void step_transpose(std::span<const double> lambda, double dt, std::span<double> out) const;

    const QuadratureRule& facet_rule() const { return facet_rule_; }
    /// Per facet and facet quadrature point: normal velocity and flux weights
    /// a = max_eps(0, s), b = max_eps(0, -s) with their s-derivatives.
    struct FacetSample {
        double vn;
        double a;
        double b;
        double da;
        double db;
    };
    const std::vector<FacetSample>& facet_samples() const { return samples_; }

private:
    TransportProblem problem_;
    DgMass mass_;
    QuadratureRule facet_rule_;
    std::vector<FacetSample> samples_;
    SparseMatrix residual_;
    SparseMatrix rate_;
    SparseMatrix rate_t_;
};

/// Accumulates bilinear moments of (z, phi) pairs so that the derivative of
/// sum_k < z_k, L(v) phi_k > with respect to the nodal velocity can be
/// evaluated once at the end.
class VelocitySensitivity {
public:
    explicit VelocitySensitivity(const TransportOperator& op);

    void accumulate(std::span<const double> z, std::span<const double> phi);
    /// Vertex-major nodal gradient (d per vertex).
    std::vector<double> gradient() const;

private:
    const TransportOperator& op_;
    int n_ = 0;
    int d_ = 0;
    std::vector<double> cell_moments_;
    std::vector<double> facet_moments_;
};

/// Residual r of the semi-discrete scheme (M dphi/dt = r).
DgScalarField spatial_operator(const DgScalarField& phi, const TransportProblem& problem);

/// One explicit midpoint step; `step_index` labels blowup errors.
DgScalarField step_rk2(const DgScalarField& phi, const TransportProblem& problem, double dt,
                       std::size_t step_index = 0);

struct CflReport {
    double number = 0.0;
    double dt = 0.0;
    double max_speed = 0.0;
    /// Minimum cell in-diameter.
    double h_min = 0.0;
    double threshold = 0.25;
    bool advisory = false;
};

CflReport cfl_number(const TransportProblem& problem, double threshold = 0.25);

/// Stored forward states for the adjoint: N+1 states, N midpoint stages.
struct Trajectory {
    std::vector<std::vector<double>> states;
    std::vector<std::vector<double>> midpoints;
    double dt = 0.0;

    std::size_t stored_snapshots() const { return states.size() + midpoints.size(); }
};

struct TransportResult {
    DgScalarField final_state;
    std::optional<Trajectory> trajectory;
    CflReport cfl;
};

/// N explicit midpoint steps. Throws NumericBlowup on non-finite states.
TransportResult solve_transport(const DgScalarField& phi0, const TransportProblem& problem,
                                bool record = false, double cfl_threshold = 0.25);
/// Same, reusing an assembled operator.
TransportResult solve_transport(const DgScalarField& phi0, const TransportOperator& op, bool record,
                                double cfl_threshold = 0.25);

} // namespace dgreg
