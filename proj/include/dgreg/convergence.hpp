#pragma once

#include "dgreg/fields.hpp"

#include <string>
#include <vector>

namespace dgreg {

struct ConvergenceRow {
    int n = 0;
    int steps = 0;
    double dt = 0.0;
    double cfl = 0.0;
    /// L2 error in unit-square units.
    double l2_error = 0.0;
    /// log2 of the error ratio to the previous (coarser) level; 0 for the first.
    double order = 0.0;
};

struct ConvergenceOptions {
    int base = 16;
    int levels = 4;
    double cfl = 0.2;
    double epsilon = 0.0;
};

/// Rotating Gaussian under a compactly supported, divergence-free swirl on
/// the unit square, rescaled to an n x n voxel grid per level; errors are
/// measured against the exact rotated solution.
std::vector<ConvergenceRow> convergence_study(const std::string& name, const ConvergenceOptions& options);

/// Swirl velocity in unit-square coordinates.
Vec3 swirl_velocity(const Vec3& x);
/// Initial Gaussian in unit-square coordinates.
double swirl_initial(const Vec3& x);
/// Exact solution at time t in unit-square coordinates.
double swirl_exact(const Vec3& x, double t);

} // namespace dgreg
