#pragma once

#include "dgreg/image.hpp"
#include "dgreg/mesh.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace dgreg {

/// Discontinuous piecewise-linear scalar field. Coefficients are cell-major:
/// entry `c*(d+1) + m` is the value at local vertex m of cell c.
struct DgScalarField {
    MeshPtr mesh;
    std::vector<double> coefficients;

    DgScalarField() = default;
    explicit DgScalarField(MeshPtr m, double value = 0.0);
    DgScalarField(MeshPtr m, std::vector<double> coeffs);

    std::size_t size() const { return coefficients.size(); }
    std::span<const double> cell_coefficients(Index c) const;
};

/// Continuous piecewise-linear vector field, vertex-major with interleaved
/// components: entry `v*d + a` is component a at vertex v.
struct CgVectorField {
    MeshPtr mesh;
    std::vector<double> values;
    bool dirichlet_zero = false;

    CgVectorField() = default;
    explicit CgVectorField(MeshPtr m, bool zero_on_boundary = false);
    CgVectorField(MeshPtr m, std::vector<double> nodal, bool zero_on_boundary);

    Vec3 at_vertex(Index v) const;
    /// Largest Euclidean norm over the nodal vectors.
    double max_norm() const;
    /// Throws InvalidArgument when the boundary invariant is violated.
    void check_boundary() const;
    /// Sets all boundary vertex vectors to zero and marks the field.
    void enforce_dirichlet();
};

void require_same_mesh(const MeshPtr& a, const MeshPtr& b, const char* where);

double evaluate_in_cell(const DgScalarField& f, Index cell, const std::array<double, 4>& bary);
/// Value of `f` at `p`; `cell_hint` selects the side on shared facets.
double evaluate(const DgScalarField& f, const Vec3& p, std::optional<Index> cell_hint = std::nullopt);
/// Trace of `f` on an interior facet from side 0 (E1) or 1 (E2).
double evaluate_trace(const DgScalarField& f, const InteriorFacet& facet, int side, const Vec3& p);

Vec3 evaluate_in_cell(const CgVectorField& f, Index cell, const std::array<double, 4>& bary);
Vec3 evaluate(const CgVectorField& f, const Vec3& p, std::optional<Index> cell_hint = std::nullopt);

/// Nodal DG1 interpolation of a scalar function.
DgScalarField interpolate_dg(MeshPtr mesh, const std::function<double(const Vec3&)>& fn);
/// Nodal CG1 interpolation of a vector function.
CgVectorField interpolate_cg(MeshPtr mesh, const std::function<Vec3(const Vec3&)>& fn,
                             bool zero_on_boundary);

/// Piecewise-constant embedding: every cell of voxel v takes intensity v.
DgScalarField voxel_image_to_dg(const ImageVolume& image, MeshPtr mesh);
/// Voxel averages of a DG field (inverse of voxel_image_to_dg on its range).
ImageVolume dg_to_voxel_image(const DgScalarField& field);

/// Exact integral of a DG1 field over the mesh.
double integrate(const DgScalarField& f);

} // namespace dgreg
