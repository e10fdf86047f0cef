#pragma once

#include "dgreg/image.hpp"
#include "dgreg/mesh.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dgreg {

struct SyntheticParams {
    /// Integer voxel shift for translate-blob.
    std::array<int, 3> shift{3, 0, 0};
    /// Rotation angle in radians for rotate-blob (about the box centre, x-y plane).
    double angle = 0.3;
    /// Blob radius in voxels; non-positive selects 0.18 x the smallest extent.
    double radius = 0.0;
    /// Width of the smooth blob edge in voxels.
    double edge = 1.5;
    /// Checker cell size in voxels for checker-detail.
    int checker = 4;
};

struct SyntheticPair {
    ImageVolume input;
    ImageVolume target;
    /// Known translation for translate-blob (voxel units).
    std::optional<Vec3> translation;
};

/// Names accepted by make_synthetic.
std::vector<std::string> synthetic_cases();

/// Deterministic synthetic image pairs; the seed jitters blob centres,
/// intensities and checker phase. Throws InvalidArgument for unknown cases.
SyntheticPair make_synthetic(const std::string& name, std::span<const int> dims, const SyntheticParams& params,
                             std::uint64_t seed);

/// Smooth disc/ball profile used by the generators: ~1 inside, 0 outside.
double blob_profile(double distance, double radius, double edge);

} // namespace dgreg
