#pragma once

#include <Eigen/Dense>

#include "pvar/algebra.hpp"

namespace pvar {

/// Driven-dissipative Jaynes-Cummings parameters, all in units of a common rate.
/// kappa is the cavity field decay (appears as -kappa<a> in the mean-field
/// equation), gamma the atomic decay.
struct JcParams {
    double delta_c = 0;
    double delta_a = 0;
    double g = 0;
    double p = 0;
    double kappa = 0;  // cavity
    double gamma = 0;  // atom
};

/// Effective three-boson model of Rydberg polaritons in a cavity.
struct RydbergParams {
    double delta_c = 0, delta_e = 0, delta_r = 0;
    double g = 0, omega = 0, p = 0;
    double kappa_r = 0, kappa_i = 0;
    double gamma_c = 0, gamma_e = 0, gamma_r = 0;
    double n_atoms = 1;
};

/// Unitary mapping lab modes (a, b, c) to polaritons (Psi+, Psi0, Psi-),
/// columns ordered (+, 0, -); the dark polariton has vanishing b overlap.
struct PolaritonBasis {
    Eigen::Matrix3cd u;
    Eigen::Vector3d eigenvalues;  // per output mode, same ordering
    bool degenerate = false;
};

ModelSpec jaynes_cummings(const JcParams& params);
ModelSpec rydberg_three_boson(const RydbergParams& params);

/// Diagonalizes the quadratic three-mode part and rewrites drive, interaction
/// and jumps in the polariton basis.
std::pair<ModelSpec, PolaritonBasis> polariton_transform(const RydbergParams& params);

/// Rewrites an operator under the substitution a_j -> sum_q U_{jq} Psi_q.
OperatorPolynomial substitute_modes(const OperatorPolynomial& op, const Eigen::Matrix3cd& u);

}  // namespace pvar
