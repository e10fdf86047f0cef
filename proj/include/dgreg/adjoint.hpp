#pragma once

#include "dgreg/control.hpp"
#include "dgreg/objective.hpp"
#include "dgreg/transport.hpp"

#include <span>
#include <vector>

namespace dgreg {

/// Time discretization shared by a registration stage.
struct TransportSettings {
    double final_time = 1.0;
    int steps = 100;
    double epsilon = 1e-2;
};

struct GradientReport {
    /// 0.5 * mismatch + gamma * regularizer.
    double objective = 0.0;
    double mismatch = 0.0;
    double regularizer = 0.0;
    std::vector<double> gradient;
    /// Euclidean norm of the adjoint state after each reverse step, k = N..0.
    std::vector<double> adjoint_norms;
    /// Number of state vectors held during the reverse sweep.
    std::size_t stored_states = 0;
    DgScalarField final_state;
};

/// Reduced functional j(v^) = 0.5 J_d(S_v(phi_a), phi_e) + gamma R(v~) with
/// the control chain of `chain`. Gradients come from the exact transpose of
/// the discrete RK2 / DG1 time loop.
class ReducedObjective {
public:
    ReducedObjective(DgScalarField phi_a, DgScalarField phi_e, TransportSettings transport,
                     ObjectiveConfig objective, const ControlChain& chain);

    std::size_t size() const { return chain_.control_size(); }
    const ControlChain& chain() const { return chain_; }
    const DgScalarField& initial() const { return phi_a_; }
    const DgScalarField& target() const { return phi_e_; }
    const TransportSettings& transport() const { return transport_; }
    const ObjectiveConfig& config() const { return objective_; }

    TransportProblem problem_for(const CgVectorField& velocity) const;
    /// Objective value and its parts without the reverse sweep.
    GradientReport value(std::span<const double> v_hat) const;
    /// Requires epsilon > 0: the exact upwind flux has no gradient at v.n = 0.
    GradientReport evaluate(std::span<const double> v_hat) const;

private:
    DgScalarField phi_a_;
    DgScalarField phi_e_;
    TransportSettings transport_;
    ObjectiveConfig objective_;
    const ControlChain& chain_;
};

GradientReport evaluate_objective_and_gradient(std::span<const double> v_hat, const DgScalarField& phi_a,
                                               const DgScalarField& phi_e, const TransportSettings& transport,
                                               const ObjectiveConfig& objective, const ControlChain& chain);

struct FdRow {
    double step = 0.0;
    double finite_difference = 0.0;
    double adjoint = 0.0;
    double relative_error = 0.0;
};

struct FdReport {
    std::vector<FdRow> rows;
    double min_error = 0.0;
    /// True when the best relative error stays above 1e-5.
    bool degraded = false;
};

/// Central differences along `direction` at each step size against the
/// adjoint directional derivative. Throws InvalidArgument for a zero direction.
FdReport fd_gradient_check(const ReducedObjective& objective, std::span<const double> v_hat,
                           std::span<const double> direction, std::span<const double> steps);

/// Same check for an arbitrary smooth functional with a gradient callback;
/// the adjoint derivative is <grad, direction>.
FdReport fd_gradient_check(const std::function<double(std::span<const double>)>& value,
                           std::span<const double> gradient, std::span<const double> x,
                           std::span<const double> direction, std::span<const double> steps);

} // namespace dgreg
