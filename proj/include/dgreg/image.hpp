#pragma once

#include <array>
#include <span>
#include <vector>

namespace dgreg {

/// Scalar voxel image with unit spacing. Intensities are stored x-fastest.
struct ImageVolume {
    int dim = 2;
    std::array<int, 3> dims{1, 1, 1};
    std::vector<double> values;
    /// Position of voxel (0,0,0) in the frame the image was cropped from.
    std::array<int, 3> offset{0, 0, 0};

    ImageVolume() = default;
    ImageVolume(std::span<const int> extents, double fill = 0.0);

    std::size_t size() const { return values.size(); }
    std::size_t index(int i, int j, int k = 0) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
    }
    double& at(int i, int j, int k = 0) { return values[index(i, j, k)]; }
    double at(int i, int j, int k = 0) const { return values[index(i, j, k)]; }
    std::vector<int> extents() const;
    bool same_shape(const ImageVolume& other) const;
    /// Throws InvalidArgument unless dims > 0, size matches and values are finite.
    void validate() const;
};

/// Joint bounding box of nonzero voxels of both images, padded by `pad`
/// zero voxels per side and clamped to the image. Cropped images carry the
/// box corner in `offset`. Throws InvalidArgument for all-zero inputs.
std::pair<ImageVolume, ImageVolume> crop_and_pad(const ImageVolume& input, const ImageVolume& target,
                                                 int pad = 2);

/// Linear-interpolated percentile (same convention as numpy's default).
double percentile(std::span<const double> values, double pct);

/// Rescales [P_lo, P_hi] to [0, 1] with clamping; constant images map to 0.
ImageVolume normalize_percentile(const ImageVolume& image, double lo_pct, double hi_pct);

} // namespace dgreg
