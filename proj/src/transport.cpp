#include "dgreg/transport.hpp"

#include "dgreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

namespace dgreg {

namespace {

constexpr double kExponentClamp = 40.0;

double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

bool all_finite(std::span<const double> x) {
    for (double v : x) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

} // namespace

void TransportProblem::validate() const {
    if (!mesh) {
        throw InvalidArgument("TransportProblem: null mesh");
    }
    require_same_mesh(mesh, velocity.mesh, "TransportProblem");
    if (steps < 1) {
        throw InvalidArgument("TransportProblem: steps must be >= 1");
    }
    if (!(final_time > 0.0)) {
        throw InvalidArgument("TransportProblem: final time must be positive");
    }
    if (!(epsilon >= 0.0)) {
        throw InvalidArgument("TransportProblem: epsilon must be >= 0");
    }
    if (!velocity.dirichlet_zero) {
        throw InvalidArgument("TransportProblem: velocity must vanish on the boundary");
    }
    velocity.check_boundary();
}

double sigmoid(double epsilon, double x) {
    const double t = std::clamp(x / epsilon, -kExponentClamp, kExponentClamp);
    return 1.0 / (1.0 + std::exp(-t));
}

double smoothed_max(double epsilon, double x) { return sigmoid(epsilon, x) * x; }

double smoothed_max_derivative(double epsilon, double x) {
    const double s = sigmoid(epsilon, x);
    if (std::abs(x / epsilon) >= kExponentClamp) {
        return s;
    }
    return s + x * s * (1.0 - s) / epsilon;
}

double numerical_flux(double phi_e1, double phi_e2, double vn, double epsilon) {
    if (epsilon == 0.0) {
        return phi_e1 * std::max(0.0, vn) + phi_e2 * std::min(0.0, vn);
    }
    return phi_e1 * smoothed_max(epsilon, vn) - phi_e2 * smoothed_max(epsilon, -vn);
}

double numerical_flux_dvn(double phi_e1, double phi_e2, double vn, double epsilon) {
    if (epsilon == 0.0) {
        return vn >= 0.0 ? phi_e1 : phi_e2;
    }
    return phi_e1 * smoothed_max_derivative(epsilon, vn) + phi_e2 * smoothed_max_derivative(epsilon, -vn);
}

TransportOperator::TransportOperator(const TransportProblem& problem)
    : problem_(problem), mass_(problem.mesh) {
    problem_.validate();
    const GridMesh& mesh = *problem_.mesh;
    const int d = mesh.dim();
    const int n = d + 1;
    const double eps = problem_.epsilon;
    const auto& vel = problem_.velocity;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_cells() * n * n +
                                          static_cast<Index>(mesh.interior_facets().size()) * 4 * d * d));

    // Cell terms, integrated exactly (integrands are polynomials of degree <= 2).
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const auto vs = mesh.cell(c);
        const double vol = mesh.cell_volume(c);
        std::array<Vec3, 4> vk{};
        double div = 0.0;
        for (int k = 0; k < n; ++k) {
            vk[static_cast<std::size_t>(k)] = vel.at_vertex(vs[static_cast<std::size_t>(k)]);
            const Vec3& g = mesh.barycentric_gradient(c, k);
            const Vec3& v = vk[static_cast<std::size_t>(k)];
            div += v[0] * g[0] + v[1] * g[1] + v[2] * g[2];
        }
        for (int i = 0; i < n; ++i) {
            const Vec3& gi = mesh.barycentric_gradient(c, i);
            std::array<double, 4> vg{};
            for (int k = 0; k < n; ++k) {
                const Vec3& v = vk[static_cast<std::size_t>(k)];
                vg[static_cast<std::size_t>(k)] = v[0] * gi[0] + v[1] * gi[1] + v[2] * gi[2];
            }
            for (int j = 0; j < n; ++j) {
                double val = div * dg_local_mass(d, vol, i, j);
                for (int k = 0; k < n; ++k) {
                    val += vg[static_cast<std::size_t>(k)] * dg_local_mass(d, vol, j, k);
                }
                trip.emplace_back(c * n + i, c * n + j, val);
            }
        }
    }

    // Facet flux terms with quadrature (the smoothed flux is not polynomial).
    facet_rule_ = simplex_rule(d - 1, 4);
    const auto& facets = mesh.interior_facets();
    const std::size_t nq = facet_rule_.size();
    samples_.resize(facets.size() * nq);
    for (std::size_t f = 0; f < facets.size(); ++f) {
        const InteriorFacet& F = facets[f];
        std::array<double, 3> vn_vert{};
        for (int m = 0; m < d; ++m) {
            const Vec3 v = vel.at_vertex(F.vertices[static_cast<std::size_t>(m)]);
            vn_vert[static_cast<std::size_t>(m)] = v[0] * F.normal[0] + v[1] * F.normal[1] + v[2] * F.normal[2];
        }
        std::array<std::array<double, 3>, 3> ea{};
        std::array<std::array<double, 3>, 3> eb{};
        for (std::size_t q = 0; q < nq; ++q) {
            const auto& mu = facet_rule_.points[q];
            double s = 0.0;
            for (int m = 0; m < d; ++m) {
                s += mu[static_cast<std::size_t>(m)] * vn_vert[static_cast<std::size_t>(m)];
            }
            FacetSample smp{};
            smp.vn = s;
            if (eps == 0.0) {
                smp.a = std::max(0.0, s);
                smp.b = std::max(0.0, -s);
                smp.da = s >= 0.0 ? 1.0 : 0.0;
                smp.db = s >= 0.0 ? 0.0 : -1.0;
            } else {
                smp.a = smoothed_max(eps, s);
                smp.b = smoothed_max(eps, -s);
                smp.da = smoothed_max_derivative(eps, s);
                smp.db = -smoothed_max_derivative(eps, -s);
            }
            samples_[f * nq + q] = smp;
            const double w = facet_rule_.weights[q] * F.measure;
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    const double mm = w * mu[static_cast<std::size_t>(i)] * mu[static_cast<std::size_t>(j)];
                    ea[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += mm * smp.a;
                    eb[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += mm * smp.b;
                }
            }
        }
        const Index c1 = F.cells[0];
        const Index c2 = F.cells[1];
        for (int i = 0; i < d; ++i) {
            const Index r1 = c1 * n + F.local[0][static_cast<std::size_t>(i)];
            const Index r2 = c2 * n + F.local[1][static_cast<std::size_t>(i)];
            for (int j = 0; j < d; ++j) {
                const Index k1 = c1 * n + F.local[0][static_cast<std::size_t>(j)];
                const Index k2 = c2 * n + F.local[1][static_cast<std::size_t>(j)];
                const double a = ea[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                const double b = eb[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                trip.emplace_back(r1, k1, -a);
                trip.emplace_back(r1, k2, b);
                trip.emplace_back(r2, k1, a);
                trip.emplace_back(r2, k2, -b);
            }
        }
    }

    const Index size = mesh.num_cells() * n;
    residual_.resize(size, size);
    residual_.setFromTriplets(trip.begin(), trip.end());
    rate_ = mass_.inverse_matrix() * residual_;
    rate_.makeCompressed();
    rate_t_ = rate_.transpose();
    rate_t_.makeCompressed();
}

void TransportOperator::residual(std::span<const double> phi, std::span<double> out) const {
    Eigen::Map<const Eigen::VectorXd> x(phi.data(), static_cast<Index>(phi.size()));
    Eigen::Map<Eigen::VectorXd> y(out.data(), static_cast<Index>(out.size()));
    y.noalias() = residual_ * x;
}

void TransportOperator::rate(std::span<const double> phi, std::span<double> out) const {
    Eigen::Map<const Eigen::VectorXd> x(phi.data(), static_cast<Index>(phi.size()));
    Eigen::Map<Eigen::VectorXd> y(out.data(), static_cast<Index>(out.size()));
    y.noalias() = rate_ * x;
}

void TransportOperator::rate_transpose(std::span<const double> w, std::span<double> out) const {
    Eigen::Map<const Eigen::VectorXd> x(w.data(), static_cast<Index>(w.size()));
    Eigen::Map<Eigen::VectorXd> y(out.data(), static_cast<Index>(out.size()));
    y.noalias() = rate_t_ * x;
}

void TransportOperator::step(std::span<const double> phi, double dt, std::span<double> out,
                             std::span<double> midpoint) const {
    const std::size_t n = phi.size();
    std::vector<double> k(n);
    std::vector<double> mid_local;
    std::span<double> mid = midpoint;
    if (mid.empty()) {
        mid_local.resize(n);
        mid = mid_local;
    }
    rate(phi, k);
    for (std::size_t i = 0; i < n; ++i) {
        mid[i] = phi[i] + 0.5 * dt * k[i];
    }
    rate(mid, k);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = phi[i] + dt * k[i];
    }
}

void TransportOperator::step_transpose(std::span<const double> lambda, double dt, std::span<double> out) const {
    // out = (I + dt B (I + dt/2 B))^T lambda = lambda + (I + dt/2 B^T)(dt B^T lambda)
    const std::size_t n = lambda.size();
    std::vector<double> xi(n);
    std::vector<double> k(n);
    rate_transpose(lambda, xi);
    for (double& x : xi) {
        x *= dt;
    }
    rate_transpose(xi, k);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lambda[i] + xi[i] + 0.5 * dt * k[i];
    }
}

VelocitySensitivity::VelocitySensitivity(const TransportOperator& op) : op_(op) {
    const GridMesh& mesh = *op.problem().mesh;
    d_ = mesh.dim();
    n_ = d_ + 1;
    cell_moments_.assign(static_cast<std::size_t>(mesh.num_cells() * n_ * n_), 0.0);
    facet_moments_.assign(mesh.interior_facets().size() * 2 * static_cast<std::size_t>(d_ * d_), 0.0);
}

void VelocitySensitivity::accumulate(std::span<const double> z, std::span<const double> phi) {
    const GridMesh& mesh = *op_.problem().mesh;
    const int n = n_;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        double* S = cell_moments_.data() + c * n * n;
        const double* zc = z.data() + c * n;
        const double* pc = phi.data() + c * n;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                S[i * n + j] += zc[i] * pc[j];
            }
        }
    }
    const auto& facets = mesh.interior_facets();
    const int dd = d_ * d_;
    for (std::size_t f = 0; f < facets.size(); ++f) {
        const InteriorFacet& F = facets[f];
        double* P21 = facet_moments_.data() + f * 2 * static_cast<std::size_t>(dd);
        double* P12 = P21 + dd;
        const double* z1 = z.data() + F.cells[0] * n;
        const double* z2 = z.data() + F.cells[1] * n;
        const double* p1 = phi.data() + F.cells[0] * n;
        const double* p2 = phi.data() + F.cells[1] * n;
        for (int i = 0; i < d_; ++i) {
            const int l1i = F.local[0][static_cast<std::size_t>(i)];
            const int l2i = F.local[1][static_cast<std::size_t>(i)];
            for (int j = 0; j < d_; ++j) {
                const int l1j = F.local[0][static_cast<std::size_t>(j)];
                const int l2j = F.local[1][static_cast<std::size_t>(j)];
                P21[i * d_ + j] += z2[l2i] * p1[l1j];
                P12[i * d_ + j] += z1[l1i] * p2[l2j];
            }
        }
    }
}

std::vector<double> VelocitySensitivity::gradient() const {
    const GridMesh& mesh = *op_.problem().mesh;
    const int n = n_;
    const int d = d_;
    std::vector<double> g(static_cast<std::size_t>(mesh.num_vertices() * d), 0.0);

    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double* S = cell_moments_.data() + c * n * n;
        const auto vs = mesh.cell(c);
        const double vol = mesh.cell_volume(c);
        // d/dv of div(v) int psi phi
        double pair = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                pair += S[i * n + j] * dg_local_mass(d, vol, i, j);
            }
        }
        for (int k = 0; k < n; ++k) {
            const Vec3& gk = mesh.barycentric_gradient(c, k);
            // T_ik = sum_j S_ij Mloc_jk
            std::array<double, 4> t{};
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) {
                    s += S[i * n + j] * dg_local_mass(d, vol, j, k);
                }
                t[static_cast<std::size_t>(i)] = s;
            }
            double* gv = g.data() + vs[static_cast<std::size_t>(k)] * d;
            for (int a = 0; a < d; ++a) {
                double val = pair * gk[static_cast<std::size_t>(a)];
                for (int i = 0; i < n; ++i) {
                    val += t[static_cast<std::size_t>(i)] * mesh.barycentric_gradient(c, i)[static_cast<std::size_t>(a)];
                }
                gv[a] += val;
            }
        }
    }

    const auto& facets = mesh.interior_facets();
    const auto& rule = op_.facet_rule();
    const auto& samples = op_.facet_samples();
    const std::size_t nq = rule.size();
    const int dd = d * d;
    for (std::size_t f = 0; f < facets.size(); ++f) {
        const InteriorFacet& F = facets[f];
        const double* P21 = facet_moments_.data() + f * 2 * static_cast<std::size_t>(dd);
        const double* P12 = P21 + dd;
        const double* S1 = cell_moments_.data() + F.cells[0] * n * n;
        const double* S2 = cell_moments_.data() + F.cells[1] * n * n;
        // jump-weighted moments restricted to the facet dofs
        std::array<double, 9> J1{};
        std::array<double, 9> J2{};
        for (int i = 0; i < d; ++i) {
            const int l1i = F.local[0][static_cast<std::size_t>(i)];
            const int l2i = F.local[1][static_cast<std::size_t>(i)];
            for (int j = 0; j < d; ++j) {
                const int l1j = F.local[0][static_cast<std::size_t>(j)];
                const int l2j = F.local[1][static_cast<std::size_t>(j)];
                J1[static_cast<std::size_t>(i * d + j)] = S1[l1i * n + l1j] - P21[i * d + j];
                J2[static_cast<std::size_t>(i * d + j)] = P12[i * d + j] - S2[l2i * n + l2j];
            }
        }
        std::array<double, 3> gvn{};
        for (std::size_t q = 0; q < nq; ++q) {
            const auto& mu = rule.points[q];
            double j1 = 0.0;
            double j2 = 0.0;
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    const double mm = mu[static_cast<std::size_t>(i)] * mu[static_cast<std::size_t>(j)];
                    j1 += mm * J1[static_cast<std::size_t>(i * d + j)];
                    j2 += mm * J2[static_cast<std::size_t>(i * d + j)];
                }
            }
            const auto& smp = samples[f * nq + q];
            const double w = rule.weights[q] * F.measure;
            const double ds = -w * (j1 * smp.da - j2 * smp.db);
            for (int m = 0; m < d; ++m) {
                gvn[static_cast<std::size_t>(m)] += ds * mu[static_cast<std::size_t>(m)];
            }
        }
        for (int m = 0; m < d; ++m) {
            double* gv = g.data() + F.vertices[static_cast<std::size_t>(m)] * d;
            for (int a = 0; a < d; ++a) {
                gv[a] += gvn[static_cast<std::size_t>(m)] * F.normal[static_cast<std::size_t>(a)];
            }
        }
    }
    return g;
}

DgScalarField spatial_operator(const DgScalarField& phi, const TransportProblem& problem) {
    require_same_mesh(phi.mesh, problem.mesh, "spatial_operator");
    TransportOperator op(problem);
    DgScalarField r(problem.mesh);
    op.residual(phi.coefficients, r.coefficients);
    return r;
}

DgScalarField step_rk2(const DgScalarField& phi, const TransportProblem& problem, double dt,
                       std::size_t step_index) {
    require_same_mesh(phi.mesh, problem.mesh, "step_rk2");
    if (!(dt > 0.0)) {
        throw InvalidArgument("step_rk2: dt must be positive");
    }
    TransportOperator op(problem);
    DgScalarField out(problem.mesh);
    op.step(phi.coefficients, dt, out.coefficients);
    if (!all_finite(out.coefficients)) {
        throw NumericBlowup("step_rk2", step_index, max_abs(phi.coefficients));
    }
    return out;
}

CflReport cfl_number(const TransportProblem& problem, double threshold) {
    CflReport r;
    r.dt = problem.dt();
    r.max_speed = problem.velocity.max_norm();
    r.h_min = problem.mesh->min_indiameter();
    r.number = r.dt * r.max_speed / r.h_min;
    r.threshold = threshold;
    r.advisory = r.number > threshold;
    return r;
}

TransportResult solve_transport(const DgScalarField& phi0, const TransportProblem& problem, bool record,
                                double cfl_threshold) {
    require_same_mesh(phi0.mesh, problem.mesh, "solve_transport");
    TransportOperator op(problem);
    return solve_transport(phi0, op, record, cfl_threshold);
}

TransportResult solve_transport(const DgScalarField& phi0, const TransportOperator& op, bool record,
                                double cfl_threshold) {
    const TransportProblem& problem = op.problem();
    require_same_mesh(phi0.mesh, problem.mesh, "solve_transport");
    TransportResult result;
    result.cfl = cfl_number(problem, cfl_threshold);
    const double dt = problem.dt();
    const std::size_t n = phi0.size();
    std::vector<double> cur = phi0.coefficients;
    std::vector<double> next(n);
    Trajectory traj;
    if (record) {
        traj.dt = dt;
        traj.states.reserve(static_cast<std::size_t>(problem.steps) + 1);
        traj.midpoints.reserve(static_cast<std::size_t>(problem.steps));
        traj.states.push_back(cur);
    }
    std::vector<double> mid(n);
    for (int k = 0; k < problem.steps; ++k) {
        op.step(cur, dt, next, mid);
        if (!all_finite(next)) {
            throw NumericBlowup("solve_transport", static_cast<std::size_t>(k), max_abs(cur));
        }
        cur.swap(next);
        if (record) {
            traj.midpoints.push_back(mid);
            traj.states.push_back(cur);
        }
    }
    result.final_state = DgScalarField(problem.mesh, std::move(cur));
    if (record) {
        result.trajectory = std::move(traj);
    }
    return result;
}

} // namespace dgreg
