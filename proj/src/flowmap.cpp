#include "dgreg/flowmap.hpp"

#include "dgreg/assembly.hpp"
#include "dgreg/errors.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <sstream>

namespace dgreg {

const char* to_string(FlowDirection d) { return d == FlowDirection::forward ? "forward" : "inverse"; }

const char* to_string(FlowBackend b) { return b == FlowBackend::trace ? "trace" : "cg-transport"; }

FlowBackend parse_backend(const std::string& name) {
    if (name == "trace") {
        return FlowBackend::trace;
    }
    if (name == "cg-transport") {
        return FlowBackend::cg_transport;
    }
    throw InvalidArgument("unknown flow backend '" + name + "'");
}

namespace {

struct Leg {
    const CgVectorField* field;
    double sign;
};

void check_fields(std::span<const CgVectorField> velocities, const FlowOptions& options) {
    if (velocities.empty()) {
        throw InvalidArgument("flow map needs at least one velocity field");
    }
    if (options.steps_per_field < 1 || !(options.final_time > 0.0)) {
        throw InvalidArgument("flow map: steps_per_field >= 1 and final_time > 0 required");
    }
    for (const CgVectorField& v : velocities) {
        require_same_mesh(v.mesh, velocities[0].mesh, "flow map");
        for (double x : v.values) {
            if (!std::isfinite(x)) {
                throw InvalidArgument("flow map: velocity has non-finite entries");
            }
        }
    }
}

/// Point-trajectory order: forward follows +v_1 .. +v_N, inverse -v_N .. -v_1.
std::vector<Leg> trace_legs(std::span<const CgVectorField> v, FlowDirection dir) {
    std::vector<Leg> legs;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (dir == FlowDirection::forward) {
            legs.push_back({&v[i], 1.0});
        } else {
            legs.push_back({&v[v.size() - 1 - i], -1.0});
        }
    }
    return legs;
}

std::string provenance(std::span<const CgVectorField> v, const FlowOptions& o) {
    std::ostringstream s;
    s << to_string(o.direction) << ' ' << to_string(o.backend) << " steps=" << o.steps_per_field
      << " T=" << o.final_time << " path=";
    const auto legs = trace_legs(v, o.direction);
    for (std::size_t i = 0; i < legs.size(); ++i) {
        const std::size_t idx = static_cast<std::size_t>(legs[i].field - v.data()) + 1;
        s << (i ? "," : "") << (legs[i].sign > 0 ? "+v" : "-v") << idx;
    }
    return s.str();
}

Vec3 velocity_at(const CgVectorField& v, Vec3 p, double sign) {
    v.mesh->clamp_to_box(p);
    Vec3 w = evaluate(v, p);
    for (double& x : w) {
        x *= sign;
    }
    return w;
}

Vec3 axpy(const Vec3& x, double a, const Vec3& y) { return {x[0] + a * y[0], x[1] + a * y[1], x[2] + a * y[2]}; }

/// Mass-consistent CG1 transport of the coordinate functions.
class CoordinateTransport {
public:
    explicit CoordinateTransport(const MeshPtr& mesh) : mesh_(mesh) {
        const CgOperators ops = assemble_cg_operators(*mesh);
        Eigen::SparseMatrix<double> m = ops.mass;
        chol_.compute(m);
        if (chol_.info() != Eigen::Success) {
            throw AssemblyError("CG1 mass matrix factorization failed");
        }
    }

    /// Advances X_t + (w . grad) X = 0 over `time` with w = sign * v.
    void advance(std::vector<Eigen::VectorXd>& coords, const CgVectorField& v, double sign, int steps,
                 double time) const {
        const SparseMatrix conv = convection(v, sign);
        const double dt = time / steps;
        Eigen::VectorXd mid;
        for (int k = 0; k < steps; ++k) {
            for (Eigen::VectorXd& x : coords) {
                mid = x - 0.5 * dt * chol_.solve(conv * x);
                x -= dt * chol_.solve(conv * mid);
                if (!x.allFinite()) {
                    throw NumericBlowup("coordinate transport", static_cast<std::size_t>(k), x.cwiseAbs().maxCoeff());
                }
            }
        }
    }

private:
    /// C_ij = int phi_i (w . grad phi_j), integrated exactly.
    SparseMatrix convection(const CgVectorField& v, double sign) const {
        const GridMesh& m = *mesh_;
        const int d = m.dim();
        const int nl = d + 1;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(m.num_cells() * nl * nl));
        for (Index c = 0; c < m.num_cells(); ++c) {
            const auto vs = m.cell(c);
            const double vol = m.cell_volume(c);
            double wg[4][4];
            for (int k = 0; k < nl; ++k) {
                const Vec3 wk = v.at_vertex(vs[static_cast<std::size_t>(k)]);
                for (int j = 0; j < nl; ++j) {
                    const Vec3& g = m.barycentric_gradient(c, j);
                    double s = 0.0;
                    for (int a = 0; a < d; ++a) {
                        s += wk[static_cast<std::size_t>(a)] * g[static_cast<std::size_t>(a)];
                    }
                    wg[k][j] = sign * s;
                }
            }
            for (int i = 0; i < nl; ++i) {
                for (int j = 0; j < nl; ++j) {
                    double s = 0.0;
                    for (int k = 0; k < nl; ++k) {
                        s += dg_local_mass(d, vol, i, k) * wg[k][j];
                    }
                    trip.emplace_back(vs[static_cast<std::size_t>(i)], vs[static_cast<std::size_t>(j)], s);
                }
            }
        }
        SparseMatrix out(m.num_vertices(), m.num_vertices());
        out.setFromTriplets(trip.begin(), trip.end());
        return out;
    }

    MeshPtr mesh_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol_;
};

} // namespace

TracedPoints trace_points(std::span<const CgVectorField> velocities, std::span<const Vec3> points,
                          const FlowOptions& options) {
    check_fields(velocities, options);
    const GridMesh& mesh = *velocities[0].mesh;
    const auto legs = trace_legs(velocities, options.direction);
    const double dt = options.final_time / options.steps_per_field;
    TracedPoints out;
    out.points.assign(points.begin(), points.end());
    out.clamped.assign(points.size(), 0);
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        Vec3& p = out.points[i];
        if (mesh.clamp_to_box(p)) {
            out.clamped[i] = 1;
        }
        for (const Leg& leg : legs) {
            for (int k = 0; k < options.steps_per_field; ++k) {
                const Vec3 k1 = velocity_at(*leg.field, p, leg.sign);
                const Vec3 k2 = velocity_at(*leg.field, axpy(p, 0.5 * dt, k1), leg.sign);
                const Vec3 k3 = velocity_at(*leg.field, axpy(p, 0.5 * dt, k2), leg.sign);
                const Vec3 k4 = velocity_at(*leg.field, axpy(p, dt, k3), leg.sign);
                for (std::size_t a = 0; a < 3; ++a) {
                    p[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
                }
                if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
                    throw NumericBlowup("point tracing", static_cast<std::size_t>(k), INFINITY);
                }
                if (mesh.clamp_to_box(p)) {
                    out.clamped[i] = 1;
                }
            }
        }
    }
    return out;
}

DeformationMap flow_map(std::span<const CgVectorField> velocities, const FlowOptions& options) {
    check_fields(velocities, options);
    const MeshPtr& mesh = velocities[0].mesh;
    const int d = mesh->dim();
    const auto nv = static_cast<std::size_t>(mesh->num_vertices());
    DeformationMap map;
    map.mesh = mesh;
    map.options = options;
    map.provenance = provenance(velocities, options);
    map.coordinates = CgVectorField(mesh, false);

    if (options.backend == FlowBackend::trace) {
        std::vector<Vec3> start(nv);
        for (std::size_t v = 0; v < nv; ++v) {
            start[v] = mesh->vertex(static_cast<Index>(v));
        }
        const TracedPoints tp = trace_points(velocities, start, options);
        for (std::size_t v = 0; v < nv; ++v) {
            for (int a = 0; a < d; ++a) {
                map.coordinates.values[v * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] =
                    tp.points[v][static_cast<std::size_t>(a)];
            }
            if (tp.clamped[v]) {
                map.clamped.push_back(static_cast<Index>(v));
            }
        }
        return map;
    }

    // Eulerian transport composes on the right, so the fields run in the
    // reverse of the point-trajectory order with the opposite sign.
    std::vector<Eigen::VectorXd> coords(static_cast<std::size_t>(d), Eigen::VectorXd(static_cast<Index>(nv)));
    for (std::size_t v = 0; v < nv; ++v) {
        for (int a = 0; a < d; ++a) {
            coords[static_cast<std::size_t>(a)][static_cast<Index>(v)] = mesh->vertex(static_cast<Index>(v))[static_cast<std::size_t>(a)];
        }
    }
    const CoordinateTransport transport(mesh);
    const auto legs = trace_legs(velocities, options.direction);
    for (std::size_t i = legs.size(); i-- > 0;) {
        transport.advance(coords, *legs[i].field, -legs[i].sign, options.steps_per_field, options.final_time);
    }
    for (std::size_t v = 0; v < nv; ++v) {
        Vec3 p{0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) {
            p[static_cast<std::size_t>(a)] = coords[static_cast<std::size_t>(a)][static_cast<Index>(v)];
        }
        if (mesh->clamp_to_box(p)) {
            map.clamped.push_back(static_cast<Index>(v));
        }
        for (int a = 0; a < d; ++a) {
            map.coordinates.values[v * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = p[static_cast<std::size_t>(a)];
        }
    }
    return map;
}

TracedPoints apply_map(const DeformationMap& map, std::span<const Vec3> points) {
    TracedPoints out;
    out.points.reserve(points.size());
    out.clamped.assign(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        Vec3 p = points[i];
        if (map.mesh->clamp_to_box(p)) {
            out.clamped[i] = 1;
        }
        out.points.push_back(evaluate(map.coordinates, p));
    }
    return out;
}

} // namespace dgreg
