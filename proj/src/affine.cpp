#include "dgreg/errors.hpp"
#include "dgreg/flowmap.hpp"

#include <cmath>

namespace dgreg {

namespace {

void check_dim(int dim) {
    if (dim != 2 && dim != 3) {
        throw InvalidArgument("affine map dimension must be 2 or 3");
    }
}

} // namespace

AffineMap AffineMap::identity(int dim) {
    check_dim(dim);
    AffineMap m;
    m.dim = dim;
    return m;
}

AffineMap AffineMap::from_homogeneous(int dim, std::span<const double> rows) {
    check_dim(dim);
    const std::size_t n = static_cast<std::size_t>(dim) + 1;
    if (rows.size() != n * n) {
        throw InvalidArgument("homogeneous matrix must have (d+1)^2 entries");
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double expect = j + 1 == n ? 1.0 : 0.0;
        if (rows[(n - 1) * n + j] != expect) {
            throw InvalidArgument("homogeneous matrix must end with the row (0 ... 0 1)");
        }
    }
    AffineMap m = identity(dim);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = 0; j + 1 < n; ++j) {
            m.matrix[i][j] = rows[i * n + j];
        }
        m.translation[i] = rows[i * n + n - 1];
    }
    return m;
}

std::vector<double> AffineMap::to_homogeneous() const {
    const std::size_t n = static_cast<std::size_t>(dim) + 1;
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = 0; j + 1 < n; ++j) {
            out[i * n + j] = matrix[i][j];
        }
        out[i * n + n - 1] = translation[i];
    }
    out[n * n - 1] = 1.0;
    return out;
}

Vec3 AffineMap::apply(const Vec3& x) const {
    Vec3 y = x;
    const auto d = static_cast<std::size_t>(dim);
    for (std::size_t i = 0; i < d; ++i) {
        double s = translation[i];
        for (std::size_t j = 0; j < d; ++j) {
            s += matrix[i][j] * x[j];
        }
        y[i] = s;
    }
    return y;
}

double AffineMap::determinant() const {
    const auto& a = matrix;
    if (dim == 2) {
        return a[0][0] * a[1][1] - a[0][1] * a[1][0];
    }
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

AffineMap AffineMap::inverse() const {
    const double det = determinant();
    double scale = 0.0;
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            scale = std::max(scale, std::abs(matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
        }
    }
    if (!(std::abs(det) > 1e-14 * std::pow(scale, dim))) {
        throw InvalidArgument("affine map is singular");
    }
    AffineMap inv = identity(dim);
    const auto& a = matrix;
    auto& r = inv.matrix;
    if (dim == 2) {
        r[0][0] = a[1][1] / det;
        r[0][1] = -a[0][1] / det;
        r[1][0] = -a[1][0] / det;
        r[1][1] = a[0][0] / det;
    } else {
        r[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
        r[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
        r[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
        r[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
        r[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
        r[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
        r[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
        r[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
        r[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
    }
    const auto d = static_cast<std::size_t>(dim);
    for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            s -= r[i][j] * translation[j];
        }
        inv.translation[i] = s;
    }
    return inv;
}

AffineMap AffineMap::compose(const AffineMap& other) const {
    if (other.dim != dim) {
        throw InvalidArgument("cannot compose affine maps of different dimension");
    }
    AffineMap out = identity(dim);
    const auto d = static_cast<std::size_t>(dim);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                s += matrix[i][k] * other.matrix[k][j];
            }
            out.matrix[i][j] = s;
        }
        double t = translation[i];
        for (std::size_t k = 0; k < d; ++k) {
            t += matrix[i][k] * other.translation[k];
        }
        out.translation[i] = t;
    }
    return out;
}

std::vector<Vec3> apply_map(const AffineMap& map, std::span<const Vec3> points) {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const Vec3& p : points) {
        out.push_back(map.apply(p));
    }
    return out;
}

} // namespace dgreg

namespace dgreg {

ImageVolume resample_image(const ImageVolume& image, const AffineMap& output_to_input) {
    image.validate();
    if (output_to_input.dim != image.dim) {
        throw InvalidArgument("resample_image: affine dimension does not match the image");
    }
    ImageVolume out(image.extents());
    const int d = image.dim;
    const int nz = d == 3 ? image.dims[2] : 1;
    auto sample = [&](const Vec3& q) {
        // Index-space position of q (voxel centres sit at i + 0.5).
        int base[3] = {0, 0, 0};
        double frac[3] = {0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) {
            const double s = q[static_cast<std::size_t>(a)] - 0.5;
            base[a] = static_cast<int>(std::floor(s));
            frac[a] = s - base[a];
        }
        double v = 0.0;
        const int corners = 1 << d;
        for (int c = 0; c < corners; ++c) {
            double w = 1.0;
            int idx[3] = {0, 0, 0};
            bool inside = true;
            for (int a = 0; a < d; ++a) {
                const int bit = (c >> a) & 1;
                idx[a] = base[a] + bit;
                w *= bit ? frac[a] : 1.0 - frac[a];
                inside = inside && idx[a] >= 0 && idx[a] < image.dims[static_cast<std::size_t>(a)];
            }
            if (inside && w != 0.0) {
                v += w * image.at(idx[0], idx[1], idx[2]);
            }
        }
        return v;
    };
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < image.dims[1]; ++j) {
            for (int i = 0; i < image.dims[0]; ++i) {
                const Vec3 r{i + 0.5, j + 0.5, d == 3 ? k + 0.5 : 0.0};
                out.at(i, j, k) = sample(output_to_input.apply(r));
            }
        }
    }
    out.offset = image.offset;
    return out;
}

} // namespace dgreg
