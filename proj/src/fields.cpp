#include "dgreg/fields.hpp"

#include "dgreg/errors.hpp"

#include <cmath>
#include <string>

namespace dgreg {

DgScalarField::DgScalarField(MeshPtr m, double value) : mesh(std::move(m)) {
    if (!mesh) {
        throw InvalidArgument("DgScalarField: null mesh");
    }
    coefficients.assign(static_cast<std::size_t>(mesh->num_cells() * mesh->vertices_per_cell()), value);
}

DgScalarField::DgScalarField(MeshPtr m, std::vector<double> coeffs)
    : mesh(std::move(m)), coefficients(std::move(coeffs)) {
    if (!mesh) {
        throw InvalidArgument("DgScalarField: null mesh");
    }
    if (coefficients.size() != static_cast<std::size_t>(mesh->num_cells() * mesh->vertices_per_cell())) {
        throw InvalidArgument("DgScalarField: coefficient count must be cells x (d+1)");
    }
}

std::span<const double> DgScalarField::cell_coefficients(Index c) const {
    const int nv = mesh->vertices_per_cell();
    return {coefficients.data() + c * nv, static_cast<std::size_t>(nv)};
}

CgVectorField::CgVectorField(MeshPtr m, bool zero_on_boundary)
    : mesh(std::move(m)), dirichlet_zero(zero_on_boundary) {
    if (!mesh) {
        throw InvalidArgument("CgVectorField: null mesh");
    }
    values.assign(static_cast<std::size_t>(mesh->num_vertices() * mesh->dim()), 0.0);
}

CgVectorField::CgVectorField(MeshPtr m, std::vector<double> nodal, bool zero_on_boundary)
    : mesh(std::move(m)), values(std::move(nodal)), dirichlet_zero(zero_on_boundary) {
    if (!mesh) {
        throw InvalidArgument("CgVectorField: null mesh");
    }
    if (values.size() != static_cast<std::size_t>(mesh->num_vertices() * mesh->dim())) {
        throw InvalidArgument("CgVectorField: value count must be vertices x d");
    }
    if (dirichlet_zero) {
        check_boundary();
    }
}

Vec3 CgVectorField::at_vertex(Index v) const {
    const int d = mesh->dim();
    Vec3 r{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) {
        r[static_cast<std::size_t>(a)] = values[static_cast<std::size_t>(v * d + a)];
    }
    return r;
}

double CgVectorField::max_norm() const {
    double m = 0.0;
    for (Index v = 0; v < mesh->num_vertices(); ++v) {
        const Vec3 x = at_vertex(v);
        m = std::max(m, std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    }
    return m;
}

void CgVectorField::check_boundary() const {
    const int d = mesh->dim();
    for (Index v = 0; v < mesh->num_vertices(); ++v) {
        if (!mesh->is_boundary_vertex(v)) {
            continue;
        }
        for (int a = 0; a < d; ++a) {
            if (values[static_cast<std::size_t>(v * d + a)] != 0.0) {
                throw InvalidArgument("CgVectorField: nonzero value at boundary vertex " + std::to_string(v));
            }
        }
    }
}

void CgVectorField::enforce_dirichlet() {
    const int d = mesh->dim();
    for (Index v = 0; v < mesh->num_vertices(); ++v) {
        if (mesh->is_boundary_vertex(v)) {
            for (int a = 0; a < d; ++a) {
                values[static_cast<std::size_t>(v * d + a)] = 0.0;
            }
        }
    }
    dirichlet_zero = true;
}

void require_same_mesh(const MeshPtr& a, const MeshPtr& b, const char* where) {
    if (!a || !b || a.get() != b.get()) {
        throw InvalidArgument(std::string(where) + ": fields live on different meshes");
    }
}

double evaluate_in_cell(const DgScalarField& f, Index cell, const std::array<double, 4>& bary) {
    const auto c = f.cell_coefficients(cell);
    double s = 0.0;
    for (std::size_t m = 0; m < c.size(); ++m) {
        s += bary[m] * c[m];
    }
    return s;
}

namespace {

CellLocation locate_with_hint(const GridMesh& mesh, const Vec3& p, std::optional<Index> hint) {
    if (hint) {
        if (*hint < 0 || *hint >= mesh.num_cells()) {
            throw InvalidArgument("evaluate: cell hint out of range");
        }
        const auto lam = mesh.barycentric(*hint, p);
        bool inside = true;
        for (int m = 0; m <= mesh.dim(); ++m) {
            inside = inside && lam[static_cast<std::size_t>(m)] >= -1e-12;
        }
        if (inside) {
            return {*hint, lam};
        }
    }
    return mesh.locate_or_throw(p);
}

} // namespace

double evaluate(const DgScalarField& f, const Vec3& p, std::optional<Index> cell_hint) {
    const auto loc = locate_with_hint(*f.mesh, p, cell_hint);
    return evaluate_in_cell(f, loc.cell, loc.barycentric);
}

double evaluate_trace(const DgScalarField& f, const InteriorFacet& facet, int side, const Vec3& p) {
    if (side != 0 && side != 1) {
        throw InvalidArgument("evaluate_trace: side must be 0 (E1) or 1 (E2)");
    }
    const Index c = facet.cells[static_cast<std::size_t>(side)];
    return evaluate_in_cell(f, c, f.mesh->barycentric(c, p));
}

Vec3 evaluate_in_cell(const CgVectorField& f, Index cell, const std::array<double, 4>& bary) {
    const auto vs = f.mesh->cell(cell);
    const int d = f.mesh->dim();
    Vec3 r{0.0, 0.0, 0.0};
    for (std::size_t m = 0; m < vs.size(); ++m) {
        for (int a = 0; a < d; ++a) {
            r[static_cast<std::size_t>(a)] += bary[m] * f.values[static_cast<std::size_t>(vs[m] * d + a)];
        }
    }
    return r;
}

Vec3 evaluate(const CgVectorField& f, const Vec3& p, std::optional<Index> cell_hint) {
    const auto loc = locate_with_hint(*f.mesh, p, cell_hint);
    return evaluate_in_cell(f, loc.cell, loc.barycentric);
}

DgScalarField interpolate_dg(MeshPtr mesh, const std::function<double(const Vec3&)>& fn) {
    DgScalarField f(mesh);
    const int nv = mesh->vertices_per_cell();
    for (Index c = 0; c < mesh->num_cells(); ++c) {
        const auto vs = mesh->cell(c);
        for (int m = 0; m < nv; ++m) {
            f.coefficients[static_cast<std::size_t>(c * nv + m)] = fn(mesh->vertex(vs[static_cast<std::size_t>(m)]));
        }
    }
    return f;
}

CgVectorField interpolate_cg(MeshPtr mesh, const std::function<Vec3(const Vec3&)>& fn,
                             bool zero_on_boundary) {
    CgVectorField f(mesh, false);
    const int d = mesh->dim();
    for (Index v = 0; v < mesh->num_vertices(); ++v) {
        const Vec3 x = fn(mesh->vertex(v));
        for (int a = 0; a < d; ++a) {
            f.values[static_cast<std::size_t>(v * d + a)] = x[static_cast<std::size_t>(a)];
        }
    }
    if (zero_on_boundary) {
        f.enforce_dirichlet();
    }
    return f;
}

DgScalarField voxel_image_to_dg(const ImageVolume& image, MeshPtr mesh) {
    if (image.dim != mesh->dim()) {
        throw InvalidArgument("voxel_image_to_dg: image and mesh dimension differ");
    }
    for (int a = 0; a < image.dim; ++a) {
        if (image.dims[static_cast<std::size_t>(a)] != mesh->dims()[static_cast<std::size_t>(a)]) {
            throw InvalidArgument("voxel_image_to_dg: image extents do not match the mesh");
        }
    }
    if (image.values.size() != static_cast<std::size_t>(mesh->num_voxels())) {
        throw InvalidArgument("voxel_image_to_dg: image value count does not match the mesh");
    }
    DgScalarField f(mesh);
    const int nv = mesh->vertices_per_cell();
    for (Index c = 0; c < mesh->num_cells(); ++c) {
        const double val = image.values[static_cast<std::size_t>(mesh->voxel_of_cell(c))];
        for (int m = 0; m < nv; ++m) {
            f.coefficients[static_cast<std::size_t>(c * nv + m)] = val;
        }
    }
    return f;
}

ImageVolume dg_to_voxel_image(const DgScalarField& field) {
    const GridMesh& mesh = *field.mesh;
    std::vector<int> ext(mesh.dims().begin(), mesh.dims().begin() + mesh.dim());
    ImageVolume img(ext);
    const int nv = mesh.vertices_per_cell();
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        double mean = 0.0;
        for (int m = 0; m < nv; ++m) {
            mean += field.coefficients[static_cast<std::size_t>(c * nv + m)];
        }
        img.values[static_cast<std::size_t>(mesh.voxel_of_cell(c))] += mean / nv / mesh.cells_per_voxel();
    }
    return img;
}

double integrate(const DgScalarField& f) {
    const GridMesh& mesh = *f.mesh;
    const int nv = mesh.vertices_per_cell();
    double total = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        double s = 0.0;
        for (int m = 0; m < nv; ++m) {
            s += f.coefficients[static_cast<std::size_t>(c * nv + m)];
        }
        total += mesh.cell_volume(c) * s / nv;
    }
    return total;
}

} // namespace dgreg
