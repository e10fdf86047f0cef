#include "dgreg/errors.hpp"
#include "dgreg/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace dgreg {

void StageConfig::validate() const {
    smoother().validate();
    lbfgs().validate();
    if (!(gamma > 0.0)) {
        throw InvalidArgument("stage: gamma must be > 0");
    }
    if (delta && !(*delta > 0.0)) {
        throw InvalidArgument("stage: delta must be > 0");
    }
    if (!(epsilon >= 0.0) || steps < 1 || !(final_time > 0.0)) {
        throw InvalidArgument("stage: invalid transport settings");
    }
}

SmootherConfig StageConfig::smoother() const {
    SmootherConfig s;
    s.alpha = alpha;
    s.beta = beta;
    s.cg_tol = cg_tol;
    s.jacobi = jacobi;
    return s;
}

TransportSettings StageConfig::transport() const { return {final_time, steps, epsilon}; }

LbfgsOptions StageConfig::lbfgs() const {
    LbfgsOptions o;
    o.max_iterations = max_iterations;
    o.memory = memory;
    o.c1 = c1;
    o.c2 = c2;
    o.gtol_relative = gtol_relative;
    return o;
}

namespace {

std::string stage_prefix(std::size_t i) { return "stage " + std::to_string(i + 1) + ": "; }

TransportProblem problem_for(const MeshPtr& mesh, const CgVectorField& v, const StageConfig& cfg) {
    TransportProblem p;
    p.mesh = mesh;
    p.velocity = v;
    p.final_time = cfg.final_time;
    p.steps = cfg.steps;
    p.epsilon = cfg.epsilon;
    return p;
}

} // namespace

RegistrationResult register_multistage(const DgScalarField& phi_a, const DgScalarField& phi_e,
                                       std::span<const StageConfig> stages, const TraceCallback& on_row) {
    if (stages.empty()) {
        throw InvalidArgument("registration needs at least one stage");
    }
    require_same_mesh(phi_a.mesh, phi_e.mesh, "register_multistage");
    for (std::size_t si = 0; si < stages.size(); ++si) {
        try {
            stages[si].validate();
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(stage_prefix(si) + e.what());
        }
    }
    const MeshPtr& mesh = phi_a.mesh;
    const double auto_delta = default_huber_delta(phi_e.coefficients);

    RegistrationResult out;
    out.images.push_back(phi_a);
    for (std::size_t si = 0; si < stages.size(); ++si) {
        const StageConfig& cfg = stages[si];
        try {
            ControlChain chain(mesh, cfg.smoother());
            ObjectiveConfig oc;
            oc.delta = cfg.delta.value_or(auto_delta);
            oc.gamma = cfg.gamma;
            const ReducedObjective j(out.images.back(), phi_e, cfg.transport(), oc, chain);

            // Last evaluated point and its report; the line search always
            // accepts the point it evaluated last.
            std::vector<double> last_x;
            GradientReport last;
            auto fn = [&](std::span<const double> x, std::span<double> g) {
                GradientReport r = j.evaluate(x);
                std::copy(r.gradient.begin(), r.gradient.end(), g.begin());
                last_x.assign(x.begin(), x.end());
                last = std::move(r);
                return last.objective;
            };
            auto cb = [&](const LbfgsIteration& it, std::span<const double> x) {
                if (!std::equal(x.begin(), x.end(), last_x.begin(), last_x.end())) {
                    last_x.assign(x.begin(), x.end());
                    last = j.value(x);
                }
                TraceRow row;
                row.stage = static_cast<int>(si + 1);
                row.iteration = it.iteration;
                row.objective = it.value;
                row.mismatch = last.mismatch;
                row.regularizer = last.regularizer;
                row.l2 = l2_discrepancy(last.final_state, phi_e);
                row.grad_norm = it.grad_norm;
                row.step = it.step_norm;
                out.trace.push_back(row);
                if (on_row) {
                    on_row(row);
                }
            };
            const std::size_t first_row = out.trace.size();
            LbfgsResult res = lbfgs_minimize(fn, std::vector<double>(j.size(), 0.0), cfg.lbfgs(), cb);

            CgVectorField v = chain.control_to_velocity(res.x);
            const DgScalarField next = solve_transport(out.images.back(), problem_for(mesh, v, cfg)).final_state;

            StageSummary sum;
            sum.status = res.status;
            sum.iterations = res.iterations;
            sum.evaluations = res.evaluations;
            sum.delta = oc.delta;
            sum.initial_objective = out.trace[first_row].objective;
            sum.final_objective = res.value;
            sum.initial_l2 = out.trace[first_row].l2;
            sum.final_l2 = l2_discrepancy(next, phi_e);
            out.stages.push_back(sum);
            out.velocities.push_back(std::move(v));
            out.controls.push_back(std::move(res.x));
            out.images.push_back(next);
        } catch (const NumericBlowup& e) {
            throw NumericBlowup(stage_prefix(si) + e.what(), e.step(), e.max_abs());
        } catch (const SolverError& e) {
            throw SolverError(stage_prefix(si) + e.what(), e.residual(), e.iterations());
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(stage_prefix(si) + e.what());
        }
    }
    return out;
}

DgScalarField replay_stages(const DgScalarField& phi_a, std::span<const CgVectorField> velocities,
                            std::span<const StageConfig> stages) {
    if (velocities.size() != stages.size()) {
        throw InvalidArgument("replay_stages: one stage config per velocity required");
    }
    DgScalarField phi = phi_a;
    for (std::size_t i = 0; i < velocities.size(); ++i) {
        phi = solve_transport(phi, problem_for(phi_a.mesh, velocities[i], stages[i])).final_state;
    }
    return phi;
}

} // namespace dgreg
