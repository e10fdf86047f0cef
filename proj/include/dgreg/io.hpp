#pragma once

#include "dgreg/fields.hpp"
#include "dgreg/flowmap.hpp"
#include "dgreg/image.hpp"
#include "dgreg/optimize.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dgreg {

namespace fs = std::filesystem;

/// Images: JSON header at `header` plus little-endian float64 samples in the
/// sibling file named by its "data" entry (header stem + ".raw").
void write_image(const fs::path& header, const ImageVolume& image);
ImageVolume read_image(const fs::path& header);

/// 16-bit binary PGM (P5, big-endian samples). Intensities in [lo, hi] map
/// linearly onto 0..65535 with clamping; row r holds y = r.
void write_pgm(const fs::path& path, const ImageVolume& image, double lo = 0.0, double hi = 1.0);
/// Samples are scaled to [0, 1] by the file's maxval.
ImageVolume read_pgm(const fs::path& path);

/// Field files share the image header layout with a "kind" entry:
/// "dg-scalar" (cell-major, d+1 per cell) or "cg-vector" (vertex-major,
/// components interleaved).
void write_field(const fs::path& header, const DgScalarField& field);
void write_field(const fs::path& header, const CgVectorField& field);
DgScalarField read_dg_field(const fs::path& header, const MeshPtr& mesh);
CgVectorField read_cg_field(const fs::path& header, const MeshPtr& mesh);
/// Extents stored in a field header (for building the matching mesh).
std::vector<int> read_field_dims(const fs::path& header);

/// ASCII mesh: "dgreg-mesh 1", "dim d", "counts nv nc nb", then the vertex,
/// cell and boundary blocks. Numbers use shortest round-trip formatting.
void write_mesh(const fs::path& path, const SimplicialMesh& mesh);
SimplicialMesh read_mesh(const fs::path& path);
/// Legacy ASCII VTK unstructured grid with optional per-cell scalars.
void write_vtk(const fs::path& path, const SimplicialMesh& mesh, const std::vector<double>& cell_scalars = {},
               const std::string& scalar_name = "radius_ratio");

/// Homogeneous (d+1) x (d+1) matrix as a JSON array of rows.
void write_affine(const fs::path& path, const AffineMap& map);
AffineMap read_affine(const fs::path& path);

/// One CSV row per optimizer iterate.
void write_trace_csv(const fs::path& path, const std::vector<TraceRow>& rows);
std::string trace_csv(const std::vector<TraceRow>& rows);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

void write_quality_json(const fs::path& path, const TransformResult& result);

} // namespace dgreg
