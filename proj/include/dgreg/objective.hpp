#pragma once

#include "dgreg/assembly.hpp"
#include "dgreg/fields.hpp"

#include <span>
#include <vector>

namespace dgreg {

struct ObjectiveConfig {
    /// Huber threshold (intensity units).
    double delta = 0.1;
    /// Regularization weight.
    double gamma = 1e-2;
    /// Tukey biweight threshold, used for reporting only.
    double tukey_c = 0.5;

    void validate() const;
};

double huber(double x, double delta);
double huber_derivative(double x, double delta);

/// Tukey's biweight rho(x) = c^2/2 (1 - (1 - x^2/c^2)^3) for |x| <= c, else c^2/2.
double tukey_biweight(double x, double c);
/// Mean of rho over elementwise differences.
double tukey_metric(std::span<const double> a, std::span<const double> b, double c);

/// int_Omega huber(phi_T - phi_e) dx with a degree-4 element rule.
double mismatch(const DgScalarField& phi_t, const DgScalarField& phi_e, double delta);
/// Exact gradient of mismatch() with respect to phi_T's coefficients.
std::vector<double> mismatch_gradient(const DgScalarField& phi_t, const DgScalarField& phi_e, double delta);

/// R = int |v~|^2 dx using the consistent CG1 mass matrix.
double regularizer(const CgVectorField& tilde_v, const CgOperators& ops);
std::vector<double> regularizer_gradient(const CgVectorField& tilde_v, const CgOperators& ops);

/// ||phi_T - phi_e||_{L2}, integrated exactly.
double l2_discrepancy(const DgScalarField& phi_t, const DgScalarField& phi_e);

/// 0.1 x (P99 - P1) of the target intensities; 0.1 if that range is empty.
double default_huber_delta(std::span<const double> target_intensities);

} // namespace dgreg
