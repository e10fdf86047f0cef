#include "dgreg/synthetic.hpp"

#include "dgreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace dgreg {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ImageVolume sample(std::span<const int> dims, const std::function<double(const Vec3&)>& fn) {
    ImageVolume img(dims);
    const int nz = img.dim == 3 ? img.dims[2] : 1;
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < img.dims[1]; ++j) {
            for (int i = 0; i < img.dims[0]; ++i) {
                img.at(i, j, k) = fn({i + 0.5, j + 0.5, img.dim == 3 ? k + 0.5 : 0.0});
            }
        }
    }
    return img;
}

double distance(const Vec3& a, const Vec3& b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
        s += d * d;
    }
    return std::sqrt(s);
}

struct Frame {
    int dim;
    Vec3 centre;
    double radius;
};

Frame frame(const ImageVolume& like, const SyntheticParams& p, std::mt19937_64& rng) {
    Frame f;
    f.dim = like.dim;
    int smallest = like.dims[0];
    for (int a = 1; a < like.dim; ++a) {
        smallest = std::min(smallest, like.dims[static_cast<std::size_t>(a)]);
    }
    f.radius = p.radius > 0.0 ? p.radius : 0.18 * smallest;
    f.centre = {0.0, 0.0, 0.0};
    for (int a = 0; a < like.dim; ++a) {
        f.centre[static_cast<std::size_t>(a)] = 0.5 * like.dims[static_cast<std::size_t>(a)] + (uniform01(rng) - 0.5);
    }
    return f;
}

ImageVolume shifted(const ImageVolume& in, const std::array<int, 3>& s) {
    ImageVolume out(in.extents());
    const int nz = in.dim == 3 ? in.dims[2] : 1;
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < in.dims[1]; ++j) {
            for (int i = 0; i < in.dims[0]; ++i) {
                const int si = i - s[0];
                const int sj = j - s[1];
                const int sk = in.dim == 3 ? k - s[2] : 0;
                if (si >= 0 && si < in.dims[0] && sj >= 0 && sj < in.dims[1] && sk >= 0 && sk < nz) {
                    out.at(i, j, k) = in.at(si, sj, sk);
                }
            }
        }
    }
    return out;
}

} // namespace

double blob_profile(double distance, double radius, double edge) {
    return 0.5 * (1.0 - std::tanh((distance - radius) / edge));
}

std::vector<std::string> synthetic_cases() { return {"translate-blob", "rotate-blob", "two-blobs", "checker-detail"}; }

SyntheticPair make_synthetic(const std::string& name, std::span<const int> dims, const SyntheticParams& params,
                             std::uint64_t seed) {
    const auto cases = synthetic_cases();
    if (std::find(cases.begin(), cases.end(), name) == cases.end()) {
        throw InvalidArgument("unknown synthetic case '" + name + "'");
    }
    const ImageVolume shape(dims);
    shape.validate();
    if (!(params.edge > 0.0) || params.checker < 1) {
        throw InvalidArgument("synthetic: edge must be > 0 and checker >= 1");
    }
    std::mt19937_64 rng(seed);
    const Frame fr = frame(shape, params, rng);
    const double level = 0.8 + 0.2 * uniform01(rng);
    const int d = shape.dim;

    SyntheticPair out;
    if (name == "translate-blob") {
        out.input = sample(dims, [&](const Vec3& x) {
            return level * blob_profile(distance(x, fr.centre, d), fr.radius, params.edge);
        });
        std::array<int, 3> s = params.shift;
        if (d == 2) {
            s[2] = 0;
        }
        out.target = shifted(out.input, s);
        out.translation = Vec3{static_cast<double>(s[0]), static_cast<double>(s[1]), static_cast<double>(s[2])};
    } else if (name == "rotate-blob") {
        // Ellipsoid with semi-axes (1.4 r, 0.7 r) so the rotation is visible.
        Vec3 mid{0.5 * shape.dims[0], 0.5 * shape.dims[1], d == 3 ? 0.5 * shape.dims[2] : 0.0};
        auto ellipse = [&](const Vec3& x) {
            const double ex = (x[0] - fr.centre[0]) / 1.4;
            const double ey = (x[1] - fr.centre[1]) / 0.7;
            const double ez = d == 3 ? x[2] - fr.centre[2] : 0.0;
            return level * blob_profile(std::sqrt(ex * ex + ey * ey + ez * ez), fr.radius, params.edge);
        };
        const double c = std::cos(params.angle);
        const double s = std::sin(params.angle);
        out.input = sample(dims, ellipse);
        out.target = sample(dims, [&](const Vec3& x) {
            // Pull back through the rotation about the box centre.
            const double dx = x[0] - mid[0];
            const double dy = x[1] - mid[1];
            return ellipse({mid[0] + c * dx + s * dy, mid[1] - s * dx + c * dy, x[2]});
        });
    } else if (name == "two-blobs") {
        Vec3 a = fr.centre;
        Vec3 b = fr.centre;
        const double sep = 0.9 * fr.radius;
        a[0] -= sep;
        b[0] += sep;
        const double r = 0.6 * fr.radius;
        Vec3 da{0.0, 0.0, 0.0};
        Vec3 db{0.0, 0.0, 0.0};
        for (int i = 0; i < d; ++i) {
            da[static_cast<std::size_t>(i)] = (uniform01(rng) - 0.5) * 0.4 * r;
            db[static_cast<std::size_t>(i)] = (uniform01(rng) - 0.5) * 0.4 * r;
        }
        da[1] += 0.25 * r;
        db[1] -= 0.25 * r;
        auto pair = [&](const Vec3& ca, const Vec3& cb) {
            return [=, &params](const Vec3& x) {
                return level * std::max(blob_profile(distance(x, ca, d), r, params.edge),
                                        0.7 * blob_profile(distance(x, cb, d), r, params.edge));
            };
        };
        Vec3 ta = a;
        Vec3 tb = b;
        for (std::size_t i = 0; i < 3; ++i) {
            ta[i] += da[i];
            tb[i] += db[i];
        }
        out.input = sample(dims, pair(a, b));
        out.target = sample(dims, pair(ta, tb));
    } else {
        // Blob with a checkerboard texture; the target is the same texture
        // pushed through a smooth sinusoidal displacement.
        const double phase = uniform01(rng) * params.checker;
        const double amp = 0.12 * fr.radius;
        auto textured = [&](const Vec3& x) {
            double parity = 0.0;
            for (int i = 0; i < d; ++i) {
                parity += std::floor((x[static_cast<std::size_t>(i)] + phase) / params.checker);
            }
            const double tex = std::fmod(std::abs(parity), 2.0) < 0.5 ? 1.0 : 0.55;
            return level * tex * blob_profile(distance(x, fr.centre, d), 1.3 * fr.radius, params.edge);
        };
        out.input = sample(dims, textured);
        const double two_pi = 6.283185307179586;
        const double wave = 2.6 * fr.radius;
        out.target = sample(dims, [&](const Vec3& x) {
            Vec3 y = x;
            y[0] -= amp * std::sin(two_pi * (x[1] - fr.centre[1]) / wave);
            y[1] -= amp * std::sin(two_pi * (x[0] - fr.centre[0]) / wave);
            return textured(y);
        });
    }
    return out;
}

} // namespace dgreg
