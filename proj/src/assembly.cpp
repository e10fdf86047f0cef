#include "dgreg/assembly.hpp"

#include "dgreg/errors.hpp"

#include <string>

namespace dgreg {

namespace {

void check_cells(const GridMesh& mesh) {
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        if (!(mesh.cell_volume(c) > 0.0)) {
            throw AssemblyError("degenerate cell " + std::to_string(c));
        }
    }
}

} // namespace

DgMass::DgMass(MeshPtr mesh) : mesh_(std::move(mesh)) {
    if (!mesh_) {
        throw InvalidArgument("DgMass: null mesh");
    }
    check_cells(*mesh_);
}

Eigen::MatrixXd DgMass::block(Index c) const {
    const int n = mesh_->vertices_per_cell();
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            b(i, j) = dg_local_mass(mesh_->dim(), mesh_->cell_volume(c), i, j);
        }
    }
    return b;
}

Eigen::MatrixXd DgMass::inverse_block(Index c) const {
    const int n = mesh_->vertices_per_cell();
    const double scale = (n * (n + 1.0)) / mesh_->cell_volume(c);
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            b(i, j) = scale * ((i == j ? 1.0 : 0.0) - 1.0 / (n + 1.0));
        }
    }
    return b;
}

void DgMass::apply(std::span<const double> x, std::span<double> y) const {
    const int n = mesh_->vertices_per_cell();
    const double denom = n * (n + 1.0);
    for (Index c = 0; c < mesh_->num_cells(); ++c) {
        const auto o = static_cast<std::size_t>(c * n);
        double sum = 0.0;
        for (int m = 0; m < n; ++m) {
            sum += x[o + static_cast<std::size_t>(m)];
        }
        const double s = mesh_->cell_volume(c) / denom;
        for (int m = 0; m < n; ++m) {
            y[o + static_cast<std::size_t>(m)] = s * (x[o + static_cast<std::size_t>(m)] + sum);
        }
    }
}

void DgMass::apply_inverse(std::span<const double> x, std::span<double> y) const {
    const int n = mesh_->vertices_per_cell();
    for (Index c = 0; c < mesh_->num_cells(); ++c) {
        const auto o = static_cast<std::size_t>(c * n);
        double sum = 0.0;
        for (int m = 0; m < n; ++m) {
            sum += x[o + static_cast<std::size_t>(m)];
        }
        const double s = (n * (n + 1.0)) / mesh_->cell_volume(c);
        for (int m = 0; m < n; ++m) {
            y[o + static_cast<std::size_t>(m)] = s * (x[o + static_cast<std::size_t>(m)] - sum / (n + 1.0));
        }
    }
}

SparseMatrix DgMass::inverse_matrix() const {
    const int n = mesh_->vertices_per_cell();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh_->num_cells() * n * n));
    for (Index c = 0; c < mesh_->num_cells(); ++c) {
        const Eigen::MatrixXd b = inverse_block(c);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                trip.emplace_back(c * n + i, c * n + j, b(i, j));
            }
        }
    }
    const Index size = mesh_->num_cells() * n;
    SparseMatrix m(size, size);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

DgMass assemble_dg_mass(MeshPtr mesh) { return DgMass(std::move(mesh)); }

CgOperators assemble_cg_operators(const GridMesh& mesh) {
    check_cells(mesh);
    const int d = mesh.dim();
    const int n = d + 1;
    std::vector<Eigen::Triplet<double>> mt;
    std::vector<Eigen::Triplet<double>> kt;
    mt.reserve(static_cast<std::size_t>(mesh.num_cells() * n * n));
    kt.reserve(static_cast<std::size_t>(mesh.num_cells() * n * n));
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const auto vs = mesh.cell(c);
        const double vol = mesh.cell_volume(c);
        for (int i = 0; i < n; ++i) {
            const Vec3& gi = mesh.barycentric_gradient(c, i);
            for (int j = 0; j < n; ++j) {
                const Vec3& gj = mesh.barycentric_gradient(c, j);
                const auto vi = vs[static_cast<std::size_t>(i)];
                const auto vj = vs[static_cast<std::size_t>(j)];
                mt.emplace_back(vi, vj, dg_local_mass(d, vol, i, j));
                kt.emplace_back(vi, vj, vol * (gi[0] * gj[0] + gi[1] * gj[1] + gi[2] * gj[2]));
            }
        }
    }
    CgOperators ops;
    const Index nv = mesh.num_vertices();
    ops.mass.resize(nv, nv);
    ops.stiffness.resize(nv, nv);
    ops.mass.setFromTriplets(mt.begin(), mt.end());
    ops.stiffness.setFromTriplets(kt.begin(), kt.end());
    ops.lumped_mass.assign(static_cast<std::size_t>(nv), 0.0);
    for (Index r = 0; r < nv; ++r) {
        double s = 0.0;
        for (SparseMatrix::InnerIterator it(ops.mass, r); it; ++it) {
            s += it.value();
        }
        if (!(s > 0.0)) {
            throw AssemblyError("lumped mass is not positive at vertex " + std::to_string(r));
        }
        ops.lumped_mass[static_cast<std::size_t>(r)] = s;
    }
    return ops;
}

std::vector<double> apply_componentwise(const SparseMatrix& op, std::span<const double> x, int dim) {
    std::vector<double> y(x.size(), 0.0);
    for (Index r = 0; r < op.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(op, r); it; ++it) {
            for (int a = 0; a < dim; ++a) {
                y[static_cast<std::size_t>(r * dim + a)] += it.value() * x[static_cast<std::size_t>(it.col() * dim + a)];
            }
        }
    }
    return y;
}

} // namespace dgreg
