#pragma once

#include "dgreg/fields.hpp"
#include "dgreg/mesh.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace testutil {

using namespace dgreg;

inline MeshPtr square(int n) {
    const int d[2] = {n, n};
    return GridMesh::build(d);
}

inline MeshPtr cube(int n) {
    const int d[3] = {n, n, n};
    return GridMesh::build(d);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> x(n);
    for (double& v : x) {
        v = uniform(rng, -scale, scale);
    }
    return x;
}

/// Sum of a few sine modes times a bump; vanishes on the box boundary.
inline CgVectorField smooth_velocity(const MeshPtr& mesh, std::mt19937_64& rng, double max_norm) {
    const int d = mesh->dim();
    const auto& n = mesh->dims();
    double coef[3][2][2][2];
    for (auto& a : coef) {
        for (auto& b : a) {
            for (auto& c : b) {
                for (double& e : c) {
                    e = uniform(rng, -1.0, 1.0);
                }
            }
        }
    }
    auto fn = [&](const Vec3& p) {
        Vec3 v{0.0, 0.0, 0.0};
        double s[3];
        for (int a = 0; a < 3; ++a) {
            s[a] = a < d ? p[static_cast<std::size_t>(a)] / n[static_cast<std::size_t>(a)] : 0.5;
        }
        const double pi = std::numbers::pi;
        for (int a = 0; a < d; ++a) {
            double val = 0.0;
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    for (int k = 0; k < (d == 3 ? 2 : 1); ++k) {
                        val += coef[a][i][j][k] * std::sin((i + 1) * pi * s[0]) * std::sin((j + 1) * pi * s[1]) *
                               (d == 3 ? std::sin((k + 1) * pi * s[2]) : 1.0);
                    }
                }
            }
            v[static_cast<std::size_t>(a)] = val;
        }
        return v;
    };
    CgVectorField f = interpolate_cg(mesh, fn, true);
    const double m = f.max_norm();
    if (m > 0.0) {
        for (double& x : f.values) {
            x *= max_norm / m;
        }
    }
    return f;
}

inline DgScalarField gaussian(const MeshPtr& mesh, Vec3 center, double width) {
    return interpolate_dg(mesh, [=](const Vec3& p) {
        double r2 = 0.0;
        for (std::size_t a = 0; a < 3; ++a) {
            r2 += (p[a] - center[a]) * (p[a] - center[a]);
        }
        return std::exp(-r2 / (2.0 * width * width));
    });
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

} // namespace testutil
