#pragma once

#include "dgreg/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <span>
#include <vector>

namespace dgreg {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Exact DG1 element mass entry: |E| (1 + delta_ij) / ((d+1)(d+2)).
inline double dg_local_mass(int dim, double volume, int i, int j) {
    return volume * (i == j ? 2.0 : 1.0) / ((dim + 1.0) * (dim + 2.0));
}

/// Block-diagonal DG1 mass matrix with its element-wise inverse.
class DgMass {
public:
    explicit DgMass(MeshPtr mesh);

    const MeshPtr& mesh() const { return mesh_; }
    Eigen::MatrixXd block(Index c) const;
    Eigen::MatrixXd inverse_block(Index c) const;
    void apply(std::span<const double> x, std::span<double> y) const;
    void apply_inverse(std::span<const double> x, std::span<double> y) const;
    SparseMatrix inverse_matrix() const;

private:
    MeshPtr mesh_;
};

/// Throws AssemblyError if any cell has vanishing volume.
DgMass assemble_dg_mass(MeshPtr mesh);

/// Scalar CG1 operators; vector fields use them componentwise.
struct CgOperators {
    SparseMatrix mass;
    SparseMatrix stiffness;
    std::vector<double> lumped_mass;
};

CgOperators assemble_cg_operators(const GridMesh& mesh);

/// y = (op (x) I_d) x for interleaved vertex-major vectors.
std::vector<double> apply_componentwise(const SparseMatrix& op, std::span<const double> x, int dim);

} // namespace dgreg
