#include "dgreg/image.hpp"

#include "dgreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dgreg {

ImageVolume::ImageVolume(std::span<const int> extents, double fill) {
    if (extents.size() != 2 && extents.size() != 3) {
        throw InvalidArgument("ImageVolume: dimension must be 2 or 3");
    }
    dim = static_cast<int>(extents.size());
    dims = {extents[0], extents[1], dim == 3 ? extents[2] : 1};
    for (int n : extents) {
        if (n < 1) {
            throw InvalidArgument("ImageVolume: extents must be positive");
        }
    }
    values.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], fill);
}

std::vector<int> ImageVolume::extents() const {
    std::vector<int> e(dims.begin(), dims.begin() + dim);
    return e;
}

bool ImageVolume::same_shape(const ImageVolume& other) const {
    return dim == other.dim && dims == other.dims;
}

void ImageVolume::validate() const {
    for (int a = 0; a < dim; ++a) {
        if (dims[static_cast<std::size_t>(a)] < 1) {
            throw InvalidArgument("image extents must be positive");
        }
    }
    if (dim == 2 && dims[2] != 1) {
        throw InvalidArgument("2D image must have unit third extent");
    }
    if (values.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]) {
        throw InvalidArgument("image value count does not match its extents");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("image contains non-finite intensities");
        }
    }
}

std::pair<ImageVolume, ImageVolume> crop_and_pad(const ImageVolume& input, const ImageVolume& target,
                                                 int pad) {
    if (!input.same_shape(target)) {
        throw InvalidArgument("crop_and_pad: images must have the same extents");
    }
    std::array<int, 3> lo{input.dims[0], input.dims[1], input.dims[2]};
    std::array<int, 3> hi{-1, -1, -1};
    bool any = false;
    for (int k = 0; k < input.dims[2]; ++k) {
        for (int j = 0; j < input.dims[1]; ++j) {
            for (int i = 0; i < input.dims[0]; ++i) {
                const auto idx = input.index(i, j, k);
                if (input.values[idx] != 0.0 || target.values[idx] != 0.0) {
                    any = true;
                    const std::array<int, 3> ijk{i, j, k};
                    for (std::size_t a = 0; a < 3; ++a) {
                        lo[a] = std::min(lo[a], ijk[a]);
                        hi[a] = std::max(hi[a], ijk[a]);
                    }
                }
            }
        }
    }
    if (!any) {
        throw InvalidArgument("crop_and_pad: both images are zero, bounding box is empty");
    }
    std::array<int, 3> b{0, 0, 0};
    std::array<int, 3> e{1, 1, 1};
    for (int a = 0; a < input.dim; ++a) {
        const auto au = static_cast<std::size_t>(a);
        b[au] = std::max(0, lo[au] - pad);
        e[au] = std::min(input.dims[au], hi[au] + pad + 1);
    }
    std::vector<int> ext;
    for (int a = 0; a < input.dim; ++a) {
        ext.push_back(e[static_cast<std::size_t>(a)] - b[static_cast<std::size_t>(a)]);
    }
    ImageVolume ci(ext);
    ImageVolume ct(ext);
    for (int k = 0; k < ci.dims[2]; ++k) {
        for (int j = 0; j < ci.dims[1]; ++j) {
            for (int i = 0; i < ci.dims[0]; ++i) {
                const auto src = input.index(i + b[0], j + b[1], k + b[2]);
                ci.at(i, j, k) = input.values[src];
                ct.at(i, j, k) = target.values[src];
            }
        }
    }
    for (std::size_t a = 0; a < 3; ++a) {
        ci.offset[a] = input.offset[a] + b[a];
        ct.offset[a] = target.offset[a] + b[a];
    }
    return {std::move(ci), std::move(ct)};
}

double percentile(std::span<const double> values, double pct) {
    if (values.empty()) {
        throw InvalidArgument("percentile of empty data");
    }
    if (!(pct >= 0.0 && pct <= 100.0)) {
        throw InvalidArgument("percentile must be in [0, 100]");
    }
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double pos = pct / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return v[lo] + t * (v[hi] - v[lo]);
}

ImageVolume normalize_percentile(const ImageVolume& image, double lo_pct, double hi_pct) {
    if (!(lo_pct < hi_pct)) {
        throw InvalidArgument("normalize_percentile: need lo < hi");
    }
    ImageVolume out = image;
    const double plo = percentile(image.values, lo_pct);
    const double phi = percentile(image.values, hi_pct);
    if (!(phi > plo)) {
        std::fill(out.values.begin(), out.values.end(), 0.0);
        return out;
    }
    for (double& v : out.values) {
        v = std::clamp((v - plo) / (phi - plo), 0.0, 1.0);
    }
    return out;
}

} // namespace dgreg
