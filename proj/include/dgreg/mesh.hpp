#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace dgreg {

using Index = std::int64_t;
/// Point or vector in voxel units; unused trailing components are zero in 2D.
using Vec3 = std::array<double, 3>;

/// Interior facet shared by cells E1 < E2. `normal` is the unit normal
/// pointing from E1 into E2. `local[s][m]` is the local vertex index inside
/// cell `cells[s]` of the facet's m-th vertex.
struct InteriorFacet {
    std::array<Index, 2> cells{};
    std::array<std::array<int, 3>, 2> local{};
    std::array<Index, 3> vertices{};
    Vec3 normal{};
    double measure = 0.0;
};

/// Facet on the box boundary with its outward unit normal.
struct BoundaryFacet {
    Index cell = 0;
    std::array<int, 3> local{};
    std::array<Index, 3> vertices{};
    Vec3 normal{};
    double measure = 0.0;
};

/// Location of a point: containing cell and barycentric coordinates in the
/// cell's local vertex order.
struct CellLocation {
    Index cell = 0;
    std::array<double, 4> barycentric{};
};

/// Structured simplicial mesh of the voxel box [0,n1] x [0,n2] (x [0,n3]).
///
/// Pixels are split into 2 triangles along the (0,0)-(1,1) diagonal, voxels
/// into the 6 Kuhn tetrahedra. Vertex (i,j,k) sits at the integer lattice
/// point, vertices are numbered x-fastest. Cell `6*voxel + p` (3D) or
/// `2*pixel + p` (2D) follows the Kuhn path of the p-th axis permutation in
/// lexicographic order; its local vertices are ordered along that path.
class GridMesh {
public:
    /// Builds the box mesh; throws InvalidArgument on bad extents.
    static std::shared_ptr<const GridMesh> build(std::span<const int> dims);

    int dim() const { return dim_; }
    const std::array<int, 3>& dims() const { return dims_; }
    int vertices_per_cell() const { return dim_ + 1; }

    Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
    Index num_cells() const { return static_cast<Index>(cell_volume_.size()); }
    Index num_voxels() const;

    const Vec3& vertex(Index v) const { return vertices_[static_cast<std::size_t>(v)]; }
    std::span<const Index> cell(Index c) const {
        return {cells_.data() + c * (dim_ + 1), static_cast<std::size_t>(dim_ + 1)};
    }
    double cell_volume(Index c) const { return cell_volume_[static_cast<std::size_t>(c)]; }
    /// Gradient of the barycentric coordinate of local vertex `m` of cell `c`.
    const Vec3& barycentric_gradient(Index c, int m) const {
        return grads_[static_cast<std::size_t>(c * (dim_ + 1) + m)];
    }
    /// Diameter of the inscribed sphere of cell `c`.
    double cell_indiameter(Index c) const;
    /// Smallest in-diameter over all cells.
    double min_indiameter() const { return min_indiameter_; }
    double total_volume() const;

    const std::vector<InteriorFacet>& interior_facets() const { return facets_; }
    const std::vector<BoundaryFacet>& boundary_facets() const { return boundary_; }
    /// Interior facets touching each cell (indices into interior_facets()).
    std::span<const Index> cell_facets(Index c) const;

    bool is_boundary_vertex(Index v) const { return on_boundary_[static_cast<std::size_t>(v)] != 0; }
    Index vertex_index(int i, int j, int k = 0) const;
    /// Voxel containing cell `c` in x-fastest order.
    Index voxel_of_cell(Index c) const { return c / cells_per_voxel_; }
    int cells_per_voxel() const { return cells_per_voxel_; }

    /// Point location with a tolerance of `tol` voxels outside the box.
    std::optional<CellLocation> locate(const Vec3& p, double tol = 1e-12) const;
    /// Like locate() but throws OutOfDomain.
    CellLocation locate_or_throw(const Vec3& p) const;
    /// Barycentric coordinates of `p` with respect to cell `c` (may be outside).
    std::array<double, 4> barycentric(Index c, const Vec3& p) const;
    /// Clamps `p` into the box; returns true if it had to move.
    bool clamp_to_box(Vec3& p) const;

private:
    GridMesh() = default;

    int dim_ = 2;
    std::array<int, 3> dims_{1, 1, 1};
    int cells_per_voxel_ = 2;
    std::vector<Vec3> vertices_;
    std::vector<Index> cells_;
    std::vector<double> cell_volume_;
    std::vector<double> cell_facet_measure_sum_;
    std::vector<Vec3> grads_;
    std::vector<InteriorFacet> facets_;
    std::vector<BoundaryFacet> boundary_;
    std::vector<Index> cell_facet_offsets_;
    std::vector<Index> cell_facet_list_;
    std::vector<char> on_boundary_;
    double min_indiameter_ = 0.0;
};

using MeshPtr = std::shared_ptr<const GridMesh>;

} // namespace dgreg
