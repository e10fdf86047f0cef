#include "dgreg/errors.hpp"
#include "dgreg/flowmap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace dgreg {

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const Vec3& a) { return std::sqrt(dot3(a, a)); }

/// Unit normal of a boundary facet, not yet oriented.
Vec3 facet_normal(int dim, const std::vector<Vec3>& x, const std::array<Index, 3>& f) {
    Vec3 n;
    if (dim == 2) {
        const Vec3 e = sub(x[static_cast<std::size_t>(f[1])], x[static_cast<std::size_t>(f[0])]);
        n = {e[1], -e[0], 0.0};
    } else {
        n = cross(sub(x[static_cast<std::size_t>(f[1])], x[static_cast<std::size_t>(f[0])]),
                  sub(x[static_cast<std::size_t>(f[2])], x[static_cast<std::size_t>(f[0])]));
    }
    const double l = norm(n);
    if (l > 0.0) {
        for (double& v : n) {
            v /= l;
        }
    }
    return n;
}

} // namespace

void SimplicialMesh::validate() const {
    if (dim != 2 && dim != 3) {
        throw InvalidArgument("simplicial mesh dimension must be 2 or 3");
    }
    const auto nv = static_cast<Index>(vertices.size());
    for (const auto& c : cells) {
        for (int k = 0; k <= dim; ++k) {
            const Index v = c[static_cast<std::size_t>(k)];
            if (v < 0 || v >= nv) {
                throw InvalidArgument("simplicial mesh: cell references a missing vertex");
            }
        }
    }
    for (const auto& f : boundary) {
        for (int k = 0; k < dim; ++k) {
            if (f[static_cast<std::size_t>(k)] < 0 || f[static_cast<std::size_t>(k)] >= nv) {
                throw InvalidArgument("simplicial mesh: boundary facet references a missing vertex");
            }
        }
    }
    for (const Vec3& p : vertices) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
            throw InvalidArgument("simplicial mesh: non-finite vertex");
        }
    }
}

double signed_volume(const SimplicialMesh& mesh, std::size_t cell) {
    const auto& c = mesh.cells[cell];
    const Vec3& p0 = mesh.vertices[static_cast<std::size_t>(c[0])];
    const Vec3 a = sub(mesh.vertices[static_cast<std::size_t>(c[1])], p0);
    const Vec3 b = sub(mesh.vertices[static_cast<std::size_t>(c[2])], p0);
    if (mesh.dim == 2) {
        return 0.5 * (a[0] * b[1] - a[1] * b[0]);
    }
    const Vec3 e = sub(mesh.vertices[static_cast<std::size_t>(c[3])], p0);
    return dot3(a, cross(b, e)) / 6.0;
}

double radius_ratio(int dim, std::span<const Vec3> p) {
    double longest = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            longest = std::max(longest, norm(sub(p[i], p[j])));
        }
    }
    if (!(longest > 0.0)) {
        return 0.0;
    }
    if (dim == 2) {
        const double a = norm(sub(p[1], p[2]));
        const double b = norm(sub(p[0], p[2]));
        const double c = norm(sub(p[0], p[1]));
        const Vec3 u = sub(p[1], p[0]);
        const Vec3 w = sub(p[2], p[0]);
        const double area = 0.5 * std::abs(u[0] * w[1] - u[1] * w[0]);
        if (area <= 1e-14 * longest * longest) {
            return 0.0;
        }
        const double inr = area / (0.5 * (a + b + c));
        const double circ = a * b * c / (4.0 * area);
        return std::min(1.0, 2.0 * inr / circ);
    }
    const Vec3 a = sub(p[1], p[0]);
    const Vec3 b = sub(p[2], p[0]);
    const Vec3 c = sub(p[3], p[0]);
    const double det = dot3(a, cross(b, c));
    const double vol = std::abs(det) / 6.0;
    if (vol <= 1e-14 * longest * longest * longest) {
        return 0.0;
    }
    double faces = 0.0;
    const int omit[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
    for (const auto& f : omit) {
        faces += 0.5 * norm(cross(sub(p[static_cast<std::size_t>(f[1])], p[static_cast<std::size_t>(f[0])]),
                                  sub(p[static_cast<std::size_t>(f[2])], p[static_cast<std::size_t>(f[0])])));
    }
    const double inr = 3.0 * vol / faces;
    // Circumcentre offset x solves 2 [a b c]^T x = (|a|^2, |b|^2, |c|^2).
    const Vec3 rhs{dot3(a, a), dot3(b, b), dot3(c, c)};
    const Vec3 bc = cross(b, c);
    const Vec3 ca = cross(c, a);
    const Vec3 ab = cross(a, b);
    Vec3 x;
    for (std::size_t i = 0; i < 3; ++i) {
        x[i] = (rhs[0] * bc[i] + rhs[1] * ca[i] + rhs[2] * ab[i]) / (2.0 * det);
    }
    return std::min(1.0, 3.0 * inr / norm(x));
}

std::vector<std::array<Index, 3>> boundary_facets(const SimplicialMesh& mesh) {
    const int d = mesh.dim;
    std::map<std::array<Index, 3>, std::pair<int, std::array<Index, 4>>> count;
    for (const auto& c : mesh.cells) {
        for (int omit = 0; omit <= d; ++omit) {
            std::array<Index, 3> key{-1, -1, -1};
            int k = 0;
            for (int m = 0; m <= d; ++m) {
                if (m != omit) {
                    key[static_cast<std::size_t>(k++)] = c[static_cast<std::size_t>(m)];
                }
            }
            std::array<Index, 3> sorted = key;
            std::sort(sorted.begin(), sorted.begin() + d);
            auto& entry = count[sorted];
            ++entry.first;
            entry.second = {key[0], key[1], key[2], c[static_cast<std::size_t>(omit)]};
        }
    }
    std::vector<std::array<Index, 3>> out;
    for (const auto& [key, entry] : count) {
        if (entry.first != 1) {
            continue;
        }
        std::array<Index, 3> f{entry.second[0], entry.second[1], entry.second[2]};
        const Vec3 n = facet_normal(d, mesh.vertices, f);
        const Vec3 toward = sub(mesh.vertices[static_cast<std::size_t>(entry.second[3])],
                                mesh.vertices[static_cast<std::size_t>(f[0])]);
        if (dot3(n, toward) > 0.0) {
            std::swap(f[0], f[1]);
        }
        out.push_back(f);
    }
    return out;
}

QualityReport mesh_quality(const SimplicialMesh& mesh) {
    mesh.validate();
    const int d = mesh.dim;
    QualityReport q;
    q.radius_ratio.resize(mesh.num_cells());
    q.signed_volume.resize(mesh.num_cells());
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        std::array<Vec3, 4> p{};
        for (int k = 0; k <= d; ++k) {
            p[static_cast<std::size_t>(k)] = mesh.vertices[static_cast<std::size_t>(mesh.cells[c][static_cast<std::size_t>(k)])];
        }
        q.radius_ratio[c] = radius_ratio(d, std::span<const Vec3>(p.data(), static_cast<std::size_t>(d + 1)));
        q.signed_volume[c] = signed_volume(mesh, c);
        if (!(q.signed_volume[c] > 0.0)) {
            q.inverted.push_back(static_cast<Index>(c));
        }
    }
    if (!q.radius_ratio.empty()) {
        q.min_ratio = *std::min_element(q.radius_ratio.begin(), q.radius_ratio.end());
        q.mean_ratio = std::accumulate(q.radius_ratio.begin(), q.radius_ratio.end(), 0.0) /
                       static_cast<double>(q.radius_ratio.size());
    }

    // Neighbouring boundary facets share a vertex (2D) or an edge (3D).
    const auto facets = boundary_facets(mesh);
    std::vector<Vec3> normals;
    normals.reserve(facets.size());
    std::map<std::array<Index, 2>, std::vector<std::size_t>> shared;
    for (std::size_t f = 0; f < facets.size(); ++f) {
        normals.push_back(facet_normal(d, mesh.vertices, facets[f]));
        if (d == 2) {
            shared[{facets[f][0], -1}].push_back(f);
            shared[{facets[f][1], -1}].push_back(f);
        } else {
            for (int e = 0; e < 3; ++e) {
                Index a = facets[f][static_cast<std::size_t>(e)];
                Index b = facets[f][static_cast<std::size_t>((e + 1) % 3)];
                shared[{std::min(a, b), std::max(a, b)}].push_back(f);
            }
        }
    }
    double total = 0.0;
    std::size_t pairs = 0;
    for (const auto& [key, list] : shared) {
        if (list.size() != 2) {
            continue;
        }
        const double c = std::clamp(dot3(normals[list[0]], normals[list[1]]), -1.0, 1.0);
        total += std::acos(c);
        ++pairs;
    }
    q.roughness = pairs ? total / static_cast<double>(pairs) : 0.0;
    return q;
}

TransformResult transform_mesh(const SimplicialMesh& mesh, const AffineMap& to_input, const AffineMap& registration,
                               std::span<const CgVectorField> velocities, const AffineMap& to_target,
                               const FlowOptions& options) {
    mesh.validate();
    if (to_input.dim != mesh.dim || registration.dim != mesh.dim || to_target.dim != mesh.dim) {
        throw InvalidArgument("transform_mesh: affine dimensions must match the mesh");
    }
    const AffineMap reg_inv = registration.inverse();
    const AffineMap target_inv = to_target.inverse();
    std::vector<Vec3> r;
    r.reserve(mesh.vertices.size());
    for (const Vec3& x : mesh.vertices) {
        r.push_back(reg_inv.apply(to_input.apply(x)));
    }

    TracedPoints e;
    if (options.backend == FlowBackend::trace) {
        e = trace_points(velocities, r, options);
    } else {
        e = apply_map(flow_map(velocities, options), r);
    }

    TransformResult out;
    out.mesh = mesh;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        Vec3 y = target_inv.apply(e.points[v]);
        if (mesh.dim == 2) {
            y[2] = mesh.vertices[v][2];
        }
        out.mesh.vertices[v] = y;
        if (e.clamped[v]) {
            out.clamped.push_back(static_cast<Index>(v));
        }
    }
    out.before = mesh_quality(mesh);
    out.after = mesh_quality(out.mesh);
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const double b = out.before.signed_volume[c];
        const double a = out.after.signed_volume[c];
        if (a == 0.0 || (a > 0.0) != (b > 0.0)) {
            out.inverted.push_back(static_cast<Index>(c));
        }
    }
    return out;
}

SimplicialMesh make_ball_mesh(int dim, const Vec3& centre, double radius, int cells_per_axis) {
    if (dim != 2 && dim != 3) {
        throw InvalidArgument("ball mesh dimension must be 2 or 3");
    }
    if (cells_per_axis < 2 || cells_per_axis % 2 != 0 || !(radius > 0.0)) {
        throw InvalidArgument("ball mesh needs an even cells_per_axis >= 2 and radius > 0");
    }
    const int half = cells_per_axis / 2;
    const int side = cells_per_axis + 1;
    const int nz = dim == 3 ? side : 1;
    auto vid = [&](int i, int j, int k) {
        return static_cast<Index>((i + half) + side * ((j + half) + side * (dim == 3 ? k + half : 0)));
    };
    SimplicialMesh m;
    m.dim = dim;
    m.vertices.resize(static_cast<std::size_t>(side) * static_cast<std::size_t>(side) * static_cast<std::size_t>(nz));
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < side; ++j) {
            for (int i = 0; i < side; ++i) {
                Vec3 p{static_cast<double>(i - half) / half, static_cast<double>(j - half) / half,
                       dim == 3 ? static_cast<double>(k - half) / half : 0.0};
                const double l2 = norm(p);
                const double linf = std::max({std::abs(p[0]), std::abs(p[1]), std::abs(p[2])});
                Vec3 x = centre;
                if (dim == 2) {
                    x[2] = 0.0;
                }
                if (l2 > 0.0) {
                    for (std::size_t a = 0; a < static_cast<std::size_t>(dim); ++a) {
                        x[a] += radius * p[a] * linf / l2;
                    }
                }
                m.vertices[static_cast<std::size_t>(vid(i - half, j - half, dim == 3 ? k - half : 0))] = x;
            }
        }
    }
    std::array<int, 3> perm{0, 1, 2};
    std::vector<std::array<int, 3>> perms;
    do {
        perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.begin() + dim));
    const int lo = -half;
    const int kz_lo = dim == 3 ? lo : 0;
    const int kz_hi = dim == 3 ? half : 1;
    for (int k = kz_lo; k < kz_hi; ++k) {
        for (int j = lo; j < half; ++j) {
            for (int i = lo; i < half; ++i) {
                const std::array<int, 3> low{i, j, k};
                std::array<int, 3> base{};
                std::array<int, 3> sign{};
                for (int a = 0; a < 3; ++a) {
                    const auto ua = static_cast<std::size_t>(a);
                    sign[ua] = low[ua] >= 0 ? 1 : -1;
                    base[ua] = sign[ua] > 0 ? low[ua] : low[ua] + 1;
                }
                if (dim == 2) {
                    base[2] = 0;
                }
                for (const auto& p : perms) {
                    std::array<Index, 4> cell{-1, -1, -1, -1};
                    std::array<int, 3> cur = base;
                    cell[0] = vid(cur[0], cur[1], cur[2]);
                    for (int s = 0; s < dim; ++s) {
                        const auto ax = static_cast<std::size_t>(p[static_cast<std::size_t>(s)]);
                        cur[ax] += sign[ax];
                        cell[static_cast<std::size_t>(s + 1)] = vid(cur[0], cur[1], cur[2]);
                    }
                    m.cells.push_back(cell);
                    if (signed_volume(m, m.cells.size() - 1) < 0.0) {
                        std::swap(m.cells.back()[0], m.cells.back()[1]);
                    }
                }
            }
        }
    }
    m.boundary = boundary_facets(m);
    return m;
}

} // namespace dgreg
