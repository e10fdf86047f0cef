#include "dgreg/mesh.hpp"

#include "dgreg/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace dgreg {

namespace {

const std::array<std::array<int, 3>, 6> kPerms3 = {{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
}};
const std::array<std::array<int, 3>, 2> kPerms2 = {{{0, 1, 0}, {1, 0, 0}}};

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

struct FacetRecord {
    std::array<Index, 3> key;
    Index cell;
    int opposite;
};

} // namespace

Index GridMesh::num_voxels() const {
    Index n = 1;
    for (int a = 0; a < dim_; ++a) {
        n *= dims_[static_cast<std::size_t>(a)];
    }
    return n;
}

Index GridMesh::vertex_index(int i, int j, int k) const {
    const Index nx = dims_[0] + 1;
    const Index ny = dims_[1] + 1;
    return i + nx * (j + ny * k);
}

double GridMesh::cell_indiameter(Index c) const {
    const auto cu = static_cast<std::size_t>(c);
    return 2.0 * dim_ * cell_volume_[cu] / cell_facet_measure_sum_[cu];
}

double GridMesh::total_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) {
        v *= dims_[static_cast<std::size_t>(a)];
    }
    return v;
}

std::span<const Index> GridMesh::cell_facets(Index c) const {
    const auto b = cell_facet_offsets_[static_cast<std::size_t>(c)];
    const auto e = cell_facet_offsets_[static_cast<std::size_t>(c + 1)];
    return {cell_facet_list_.data() + b, static_cast<std::size_t>(e - b)};
}

std::shared_ptr<const GridMesh> GridMesh::build(std::span<const int> dims) {
    if (dims.size() != 2 && dims.size() != 3) {
        throw InvalidArgument("build_box_mesh: dimension must be 2 or 3");
    }
    for (int n : dims) {
        if (n < 1) {
            throw InvalidArgument("build_box_mesh: extents must be >= 1, got " + std::to_string(n));
        }
    }
    std::shared_ptr<GridMesh> mesh(new GridMesh());
    GridMesh& m = *mesh;
    m.dim_ = static_cast<int>(dims.size());
    m.dims_ = {dims[0], dims[1], m.dim_ == 3 ? dims[2] : 1};
    m.cells_per_voxel_ = m.dim_ == 3 ? 6 : 2;
    const int d = m.dim_;
    const int nv = d + 1;
    const int n1 = m.dims_[0];
    const int n2 = m.dims_[1];
    const int n3 = d == 3 ? m.dims_[2] : 0;

    for (int k = 0; k <= n3; ++k) {
        for (int j = 0; j <= n2; ++j) {
            for (int i = 0; i <= n1; ++i) {
                m.vertices_.push_back({double(i), double(j), double(k)});
                const bool b = i == 0 || i == n1 || j == 0 || j == n2 ||
                               (d == 3 && (k == 0 || k == n3));
                m.on_boundary_.push_back(b ? 1 : 0);
            }
        }
    }

    const Index nvox = m.num_voxels();
    m.cells_.reserve(static_cast<std::size_t>(nvox * m.cells_per_voxel_ * nv));
    for (int k = 0; k < std::max(1, n3); ++k) {
        for (int j = 0; j < n2; ++j) {
            for (int i = 0; i < n1; ++i) {
                for (int p = 0; p < m.cells_per_voxel_; ++p) {
                    const auto& perm = d == 3 ? kPerms3[static_cast<std::size_t>(p)]
                                              : kPerms2[static_cast<std::size_t>(p)];
                    std::array<int, 3> ijk{i, j, k};
                    m.cells_.push_back(m.vertex_index(ijk[0], ijk[1], ijk[2]));
                    for (int s = 0; s < d; ++s) {
                        ++ijk[static_cast<std::size_t>(perm[static_cast<std::size_t>(s)])];
                        m.cells_.push_back(m.vertex_index(ijk[0], ijk[1], ijk[2]));
                    }
                }
            }
        }
    }

    const Index nc = static_cast<Index>(m.cells_.size()) / nv;
    m.cell_volume_.resize(static_cast<std::size_t>(nc));
    m.grads_.resize(static_cast<std::size_t>(nc * nv));
    m.cell_facet_measure_sum_.assign(static_cast<std::size_t>(nc), 0.0);
    const double fact = d == 3 ? 6.0 : 2.0;
    for (Index c = 0; c < nc; ++c) {
        const auto vs = m.cell(c);
        Eigen::MatrixXd J(d, d);
        const Vec3& x0 = m.vertex(vs[0]);
        for (int s = 0; s < d; ++s) {
            const Vec3 e = sub(m.vertex(vs[static_cast<std::size_t>(s + 1)]), x0);
            for (int r = 0; r < d; ++r) {
                J(r, s) = e[static_cast<std::size_t>(r)];
            }
        }
        const double det = J.determinant();
        const double vol = std::abs(det) / fact;
        if (!(vol > 1e-14)) {
            throw AssemblyError("build_box_mesh: degenerate cell " + std::to_string(c));
        }
        m.cell_volume_[static_cast<std::size_t>(c)] = vol;
        const Eigen::MatrixXd Jinv = J.inverse();
        Vec3 g0{0.0, 0.0, 0.0};
        for (int s = 0; s < d; ++s) {
            Vec3 g{0.0, 0.0, 0.0};
            for (int r = 0; r < d; ++r) {
                g[static_cast<std::size_t>(r)] = Jinv(s, r);
                g0[static_cast<std::size_t>(r)] -= Jinv(s, r);
            }
            m.grads_[static_cast<std::size_t>(c * nv + s + 1)] = g;
        }
        m.grads_[static_cast<std::size_t>(c * nv)] = g0;
    }

    // Facets: pair up the sorted vertex tuples of all cell faces.
    std::vector<FacetRecord> recs;
    recs.reserve(static_cast<std::size_t>(nc * nv));
    for (Index c = 0; c < nc; ++c) {
        const auto vs = m.cell(c);
        for (int o = 0; o < nv; ++o) {
            FacetRecord r{{-1, -1, -1}, c, o};
            int t = 0;
            for (int l = 0; l < nv; ++l) {
                if (l != o) {
                    r.key[static_cast<std::size_t>(t++)] = vs[static_cast<std::size_t>(l)];
                }
            }
            std::sort(r.key.begin(), r.key.begin() + d);
            recs.push_back(r);
        }
    }
    std::sort(recs.begin(), recs.end(), [](const FacetRecord& a, const FacetRecord& b) {
        if (a.key != b.key) {
            return a.key < b.key;
        }
        return a.cell < b.cell;
    });

    auto facet_geometry = [&](const std::array<Index, 3>& key, const Vec3& opposite, Vec3& normal,
                              double& measure) {
        const Vec3& a = m.vertex(key[0]);
        const Vec3& b = m.vertex(key[1]);
        Vec3 n;
        if (d == 2) {
            const Vec3 t = sub(b, a);
            measure = std::sqrt(dot(t, t));
            n = {t[1] / measure, -t[0] / measure, 0.0};
        } else {
            const Vec3 cr = cross(sub(b, a), sub(m.vertex(key[2]), a));
            const double len = std::sqrt(dot(cr, cr));
            measure = 0.5 * len;
            n = {cr[0] / len, cr[1] / len, cr[2] / len};
        }
        if (dot(n, sub(opposite, a)) > 0.0) {
            n = {-n[0], -n[1], -n[2]};
        }
        normal = n;
    };
    auto local_of = [&](Index c, Index v) {
        const auto vs = m.cell(c);
        for (int l = 0; l < nv; ++l) {
            if (vs[static_cast<std::size_t>(l)] == v) {
                return l;
            }
        }
        throw AssemblyError("build_box_mesh: inconsistent facet connectivity");
    };

    std::size_t r = 0;
    while (r < recs.size()) {
        const FacetRecord& a = recs[r];
        const Vec3& opp = m.vertex(m.cell(a.cell)[static_cast<std::size_t>(a.opposite)]);
        if (r + 1 < recs.size() && recs[r + 1].key == a.key) {
            const FacetRecord& b = recs[r + 1];
            InteriorFacet f;
            f.cells = {a.cell, b.cell};
            f.vertices = a.key;
            facet_geometry(a.key, opp, f.normal, f.measure);
            for (int s = 0; s < d; ++s) {
                f.local[0][static_cast<std::size_t>(s)] = local_of(a.cell, a.key[static_cast<std::size_t>(s)]);
                f.local[1][static_cast<std::size_t>(s)] = local_of(b.cell, a.key[static_cast<std::size_t>(s)]);
            }
            m.cell_facet_measure_sum_[static_cast<std::size_t>(a.cell)] += f.measure;
            m.cell_facet_measure_sum_[static_cast<std::size_t>(b.cell)] += f.measure;
            m.facets_.push_back(f);
            r += 2;
        } else {
            BoundaryFacet f;
            f.cell = a.cell;
            f.vertices = a.key;
            facet_geometry(a.key, opp, f.normal, f.measure);
            for (int s = 0; s < d; ++s) {
                f.local[static_cast<std::size_t>(s)] = local_of(a.cell, a.key[static_cast<std::size_t>(s)]);
            }
            m.cell_facet_measure_sum_[static_cast<std::size_t>(a.cell)] += f.measure;
            m.boundary_.push_back(f);
            r += 1;
        }
    }

    m.cell_facet_offsets_.assign(static_cast<std::size_t>(nc + 1), 0);
    for (const auto& f : m.facets_) {
        ++m.cell_facet_offsets_[static_cast<std::size_t>(f.cells[0] + 1)];
        ++m.cell_facet_offsets_[static_cast<std::size_t>(f.cells[1] + 1)];
    }
    std::partial_sum(m.cell_facet_offsets_.begin(), m.cell_facet_offsets_.end(),
                     m.cell_facet_offsets_.begin());
    m.cell_facet_list_.resize(static_cast<std::size_t>(m.cell_facet_offsets_.back()));
    std::vector<Index> fill(m.cell_facet_offsets_.begin(), m.cell_facet_offsets_.end() - 1);
    for (Index f = 0; f < static_cast<Index>(m.facets_.size()); ++f) {
        for (Index c : m.facets_[static_cast<std::size_t>(f)].cells) {
            m.cell_facet_list_[static_cast<std::size_t>(fill[static_cast<std::size_t>(c)]++)] = f;
        }
    }

    m.min_indiameter_ = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < nc; ++c) {
        m.min_indiameter_ = std::min(m.min_indiameter_, m.cell_indiameter(c));
    }
    return mesh;
}

std::optional<CellLocation> GridMesh::locate(const Vec3& p, double tol) const {
    const int d = dim_;
    std::array<int, 3> base{0, 0, 0};
    std::array<double, 3> f{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) {
        const auto au = static_cast<std::size_t>(a);
        const double x = p[au];
        if (!(x >= -tol && x <= dims_[au] + tol)) {
            return std::nullopt;
        }
        const double xc = std::clamp(x, 0.0, double(dims_[au]));
        int i = static_cast<int>(std::floor(xc));
        i = std::clamp(i, 0, dims_[au] - 1);
        base[au] = i;
        f[au] = std::clamp(xc - i, 0.0, 1.0);
    }
    // Kuhn simplex: axes sorted by decreasing fractional part.
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.begin() + d,
                     [&](int a, int b) { return f[static_cast<std::size_t>(a)] > f[static_cast<std::size_t>(b)]; });
    int p_index = 0;
    if (d == 2) {
        p_index = order[0] == 0 ? 0 : 1;
    } else {
        for (int q = 0; q < 6; ++q) {
            if (kPerms3[static_cast<std::size_t>(q)] == order) {
                p_index = q;
                break;
            }
        }
    }
    CellLocation loc;
    const Index voxel = base[0] + Index(dims_[0]) * (base[1] + Index(dims_[1]) * base[2]);
    loc.cell = voxel * cells_per_voxel_ + p_index;
    loc.barycentric = {0.0, 0.0, 0.0, 0.0};
    loc.barycentric[0] = 1.0 - f[static_cast<std::size_t>(order[0])];
    for (int s = 1; s < d; ++s) {
        loc.barycentric[static_cast<std::size_t>(s)] =
            f[static_cast<std::size_t>(order[static_cast<std::size_t>(s - 1)])] -
            f[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])];
    }
    loc.barycentric[static_cast<std::size_t>(d)] = f[static_cast<std::size_t>(order[static_cast<std::size_t>(d - 1)])];
    return loc;
}

CellLocation GridMesh::locate_or_throw(const Vec3& p) const {
    auto loc = locate(p);
    if (!loc) {
        throw OutOfDomain("point (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) + ", " +
                          std::to_string(p[2]) + ") lies outside the mesh box");
    }
    return *loc;
}

std::array<double, 4> GridMesh::barycentric(Index c, const Vec3& p) const {
    const auto vs = cell(c);
    const Vec3& x0 = vertex(vs[0]);
    const Vec3 dx = sub(p, x0);
    std::array<double, 4> lam{0.0, 0.0, 0.0, 0.0};
    double rest = 1.0;
    for (int m = 1; m <= dim_; ++m) {
        const double l = dot(barycentric_gradient(c, m), dx);
        lam[static_cast<std::size_t>(m)] = l;
        rest -= l;
    }
    lam[0] = rest;
    return lam;
}

bool GridMesh::clamp_to_box(Vec3& p) const {
    bool moved = false;
    for (int a = 0; a < dim_; ++a) {
        const auto au = static_cast<std::size_t>(a);
        const double c = std::clamp(p[au], 0.0, double(dims_[au]));
        if (c != p[au] || std::isnan(p[au])) {
            p[au] = std::isnan(p[au]) ? 0.0 : c;
            moved = true;
        }
    }
    return moved;
}

} // namespace dgreg
