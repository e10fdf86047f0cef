#pragma once

#include "dgreg/adjoint.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dgreg {

/// Value at x; writes the gradient into `grad` (already sized).
using ObjectiveFunction = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
    int max_iterations = 100;
    int memory = 10;
    double c1 = 1e-4;
    double c2 = 0.9;
    /// Stop once |g| <= gtol_relative * |g0|.
    double gtol_relative = 1e-8;
    /// Also stop once |g| <= gtol_absolute (covers starts at a minimizer).
    double gtol_absolute = 1e-12;
    int max_line_search = 30;
    void validate() const;
};

enum class LbfgsStatus { converged, max_iterations, line_search_failed };

const char* to_string(LbfgsStatus status);

struct LbfgsIteration {
    int iteration = 0;
    double value = 0.0;
    double grad_norm = 0.0;
    /// |x_k - x_{k-1}|; zero for the starting point.
    double step_norm = 0.0;
    /// Accepted line-search parameter along the search direction.
    double alpha = 0.0;
    int evaluations = 0;
    /// Strong Wolfe conditions re-checked on the accepted point.
    bool armijo = true;
    bool curvature = true;
};

struct LbfgsResult {
    std::vector<double> x;
    double value = 0.0;
    std::vector<double> gradient;
    LbfgsStatus status = LbfgsStatus::converged;
    int iterations = 0;
    int evaluations = 0;
    /// Row 0 is the starting point.
    std::vector<LbfgsIteration> trace;
};

/// Called after the start point and after every accepted iterate.
using IterationCallback = std::function<void(const LbfgsIteration&, std::span<const double> x)>;

/// Unconstrained L-BFGS with the two-loop recursion and a strong Wolfe line
/// search (bracketing + zoom). A failed line search ends the run with the
/// last accepted iterate; NumericBlowup during a trial step is treated as an
/// infinite value.
LbfgsResult lbfgs_minimize(const ObjectiveFunction& fn, std::vector<double> x0, const LbfgsOptions& options,
                           const IterationCallback& callback = {});

/// Hyperparameters of one registration stage.
struct StageConfig {
    double alpha = 0.0;
    double beta = 1.0;
    double gamma = 1e-2;
    /// Huber threshold; unset selects 0.1 (P99 - P1) of the target.
    std::optional<double> delta;
    double epsilon = 1e-2;
    int steps = 100;
    double final_time = 1.0;
    int max_iterations = 100;
    int memory = 10;
    double c1 = 1e-4;
    double c2 = 0.9;
    double gtol_relative = 1e-8;
    double cg_tol = 1e-10;
    bool jacobi = false;
    void validate() const;

    SmootherConfig smoother() const;
    TransportSettings transport() const;
    LbfgsOptions lbfgs() const;
};

/// One row per optimizer iterate (iteration 0 is the stage's start).
struct TraceRow {
    int stage = 0;
    int iteration = 0;
    double objective = 0.0;
    double mismatch = 0.0;
    double regularizer = 0.0;
    /// L2 distance between the stage's transported image and the target.
    double l2 = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
};

struct StageSummary {
    LbfgsStatus status = LbfgsStatus::converged;
    int iterations = 0;
    int evaluations = 0;
    double delta = 0.0;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double initial_l2 = 0.0;
    double final_l2 = 0.0;
};

struct RegistrationResult {
    /// Optimized velocity of each stage.
    std::vector<CgVectorField> velocities;
    /// Optimized controls v^ of each stage.
    std::vector<std::vector<double>> controls;
    /// images[0] is the input, images[i] = S_i(images[i-1]).
    std::vector<DgScalarField> images;
    std::vector<TraceRow> trace;
    std::vector<StageSummary> stages;
};

using TraceCallback = std::function<void(const TraceRow&)>;

/// Optimizes one stationary velocity per stage, each starting from v^ = 0
/// with the previous stage's result as initial image.
RegistrationResult register_multistage(const DgScalarField& phi_a, const DgScalarField& phi_e,
                                       std::span<const StageConfig> stages, const TraceCallback& on_row = {});

/// Re-runs the stored velocities one after another from `phi_a`.
DgScalarField replay_stages(const DgScalarField& phi_a, std::span<const CgVectorField> velocities,
                            std::span<const StageConfig> stages);

} // namespace dgreg
