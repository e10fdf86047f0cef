#pragma once

#include "dgreg/fields.hpp"
#include "dgreg/image.hpp"
#include "dgreg/mesh.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace dgreg {

/// x -> A x + b in voxel units (2D maps leave the third component alone).
struct AffineMap {
    int dim = 3;
    std::array<std::array<double, 3>, 3> matrix{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    Vec3 translation{0.0, 0.0, 0.0};

    static AffineMap identity(int dim);
    /// Row-major (d+1) x (d+1) homogeneous matrix with last row (0 .. 0 1).
    static AffineMap from_homogeneous(int dim, std::span<const double> rows);
    std::vector<double> to_homogeneous() const;

    Vec3 apply(const Vec3& x) const;
    double determinant() const;
    /// Throws InvalidArgument when the matrix is singular.
    AffineMap inverse() const;
    /// (this o other)(x) = this(other(x)).
    AffineMap compose(const AffineMap& other) const;
};

/// Samples `image` at A(r) for every voxel centre r of an image with the same
/// extents (multilinear, zero outside). A maps output to input voxel frames.
ImageVolume resample_image(const ImageVolume& image, const AffineMap& output_to_input);

enum class FlowDirection { forward, inverse };
enum class FlowBackend { trace, cg_transport };

const char* to_string(FlowDirection d);
const char* to_string(FlowBackend b);
FlowBackend parse_backend(const std::string& name);

struct FlowOptions {
    FlowDirection direction = FlowDirection::forward;
    FlowBackend backend = FlowBackend::trace;
    int steps_per_field = 100;
    /// Flow time per velocity field.
    double final_time = 1.0;
};

/// Nodal map eta on the registration mesh.
///   forward: eta = P_N o ... o P_1 where P_i follows +v_i for final_time;
///   inverse: eta = Q_1 o ... o Q_N where Q_i follows -v_i.
struct DeformationMap {
    MeshPtr mesh;
    CgVectorField coordinates;
    FlowOptions options;
    std::string provenance;
    /// Vertices whose trajectory had to be clamped into the box.
    std::vector<Index> clamped;
};

struct TracedPoints {
    std::vector<Vec3> points;
    /// 1 where the point left the box at some stage and was clamped.
    std::vector<char> clamped;
};

/// Classical RK4 integration of x' = +-v(x) through all fields in the order
/// implied by `direction`, with CG1 interpolation of each field.
TracedPoints trace_points(std::span<const CgVectorField> velocities, std::span<const Vec3> points,
                          const FlowOptions& options);

/// Builds the nodal map with the selected backend.
DeformationMap flow_map(std::span<const CgVectorField> velocities, const FlowOptions& options);

/// CG1 interpolation of the map at arbitrary points (clamped into the box).
TracedPoints apply_map(const DeformationMap& map, std::span<const Vec3> points);
std::vector<Vec3> apply_map(const AffineMap& map, std::span<const Vec3> points);

/// Unstructured simplicial mesh in physical coordinates.
struct SimplicialMesh {
    int dim = 3;
    std::vector<Vec3> vertices;
    /// d+1 vertex indices per cell (unused trailing entries are -1).
    std::vector<std::array<Index, 4>> cells;
    /// Optional boundary facets (d vertex indices each); derived when empty.
    std::vector<std::array<Index, 3>> boundary;

    std::size_t num_cells() const { return cells.size(); }
    void validate() const;
};

/// Facets that belong to exactly one cell, oriented outward.
std::vector<std::array<Index, 3>> boundary_facets(const SimplicialMesh& mesh);

struct QualityReport {
    /// d * inradius / circumradius per cell; 0 for degenerate cells.
    std::vector<double> radius_ratio;
    std::vector<double> signed_volume;
    double min_ratio = 0.0;
    double mean_ratio = 0.0;
    /// Cells with non-positive signed volume.
    std::vector<Index> inverted;
    /// Mean angle (radians) between normals of neighbouring boundary facets.
    double roughness = 0.0;
};

double signed_volume(const SimplicialMesh& mesh, std::size_t cell);
double radius_ratio(int dim, std::span<const Vec3> corners);
QualityReport mesh_quality(const SimplicialMesh& mesh);

struct TransformResult {
    SimplicialMesh mesh;
    QualityReport before;
    QualityReport after;
    /// Cells whose orientation flipped.
    std::vector<Index> inverted;
    /// Vertices that left the registration box and were clamped.
    std::vector<Index> clamped;
};

/// Vertex pipeline: a = A_a x (input voxel frame), r = A^{-1} a (registration
/// frame; A maps registration to input voxel coordinates), e = push of r
/// through the velocities, y = A_e^{-1} e. Connectivity is copied unchanged.
TransformResult transform_mesh(const SimplicialMesh& mesh, const AffineMap& to_input, const AffineMap& registration,
                               std::span<const CgVectorField> velocities, const AffineMap& to_target,
                               const FlowOptions& options);

/// Ball (disc) mesh: a [-1,1]^d grid with `cells_per_axis` (even) cells per
/// axis, Kuhn-split with every diagonal pointing away from the centre, then
/// mapped radially onto the ball.
SimplicialMesh make_ball_mesh(int dim, const Vec3& centre, double radius, int cells_per_axis);

} // namespace dgreg
