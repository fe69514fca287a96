#include "pvar/models.hpp"

#include <cmath>

namespace pvar {

namespace {

OperatorPolynomial number_op(int mode) {
    return OperatorPolynomial::term({BosonMonomial::single(mode, 1, 1), {}}, 1.0);
}

}  // namespace

ModelSpec jaynes_cummings(const JcParams& params) {
    if (params.gamma < 0 || params.kappa < 0)
        throw std::invalid_argument("decay rates must be >= 0");

    auto a = OperatorPolynomial::annihilation(0);
    auto ad = OperatorPolynomial::creation(0);
    auto sp = OperatorPolynomial::spin(0, SpinOp::Plus);
    auto sm = OperatorPolynomial::spin(0, SpinOp::Minus);

    OperatorPolynomial h = params.delta_c * number_op(0) +
                           params.delta_a * multiply(sp, sm) +
                           params.g * (multiply(a, sp) + multiply(ad, sm)) +
                           params.p * (ad + a);

    ModelSpec model;
    model.n_modes = 1;
    model.n_spins = 1;
    model.hamiltonian = h;
    // Rate convention fixed by the mean-field equations: the cavity decay
    // enters d<a>/dt as -kappa<a>, the atomic decay as -gamma/2 <sigma->.
    if (params.kappa > 0) model.jumps.push_back(std::sqrt(2.0 * params.kappa) * a);
    if (params.gamma > 0) model.jumps.push_back(std::sqrt(params.gamma) * sm);
    return model;
}

ModelSpec rydberg_three_boson(const RydbergParams& params) {
    if (params.gamma_c < 0 || params.gamma_e < 0 || params.gamma_r < 0 || params.kappa_i < 0)
        throw std::invalid_argument("decay rates must be >= 0");
    if (params.n_atoms < 1) throw std::invalid_argument("atom count must be >= 1");

    auto a = OperatorPolynomial::annihilation(0);
    auto ad = OperatorPolynomial::creation(0);
    auto b = OperatorPolynomial::annihilation(1);
    auto bd = OperatorPolynomial::creation(1);
    auto c = OperatorPolynomial::annihilation(2);
    auto cd = OperatorPolynomial::creation(2);

    double g_eff = params.g * std::sqrt(params.n_atoms);

    OperatorPolynomial h = -params.delta_c * number_op(0) +
                           params.p * (a + ad) -
                           params.delta_e * number_op(1) -
                           params.delta_r * number_op(2) +
                           g_eff * (multiply(a, bd) + multiply(ad, b)) +
                           0.5 * params.omega * (multiply(b, cd) + multiply(bd, c)) +
                           0.5 * params.kappa_r * multiply(multiply(cd, cd), multiply(c, c));

    ModelSpec model;
    model.n_modes = 3;
    model.n_spins = 0;
    model.hamiltonian = h;
    if (params.gamma_c > 0) model.jumps.push_back(std::sqrt(params.gamma_c) * a);
    if (params.gamma_e > 0) model.jumps.push_back(std::sqrt(params.gamma_e) * b);
    if (params.gamma_r > 0) model.jumps.push_back(std::sqrt(params.gamma_r) * c);
    if (params.kappa_i > 0) model.jumps.push_back(std::sqrt(params.kappa_i) * multiply(c, c));
    return model;
}

OperatorPolynomial substitute_modes(const OperatorPolynomial& op, const Eigen::Matrix3cd& u) {
    std::vector<OperatorPolynomial> ann(3), cre(3);
    for (int j = 0; j < 3; ++j) {
        for (int q = 0; q < 3; ++q) {
            ann[j] += u(j, q) * OperatorPolynomial::annihilation(q);
            cre[j] += std::conj(u(j, q)) * OperatorPolynomial::creation(q);
        }
    }
    OperatorPolynomial result;
    for (const auto& [m, coeff] : op.terms()) {
        OperatorPolynomial term = OperatorPolynomial::term({{}, m.spin}, coeff);
        for (const auto& f : m.boson.factors)
            for (int i = 0; i < f.p; ++i) term = multiply(term, cre[f.mode]);
        for (const auto& f : m.boson.factors)
            for (int i = 0; i < f.q; ++i) term = multiply(term, ann[f.mode]);
        result += term;
    }
    return result;
}

std::pair<ModelSpec, PolaritonBasis> polariton_transform(const RydbergParams& params) {
    double g_eff = params.g * std::sqrt(params.n_atoms);
    Eigen::Matrix3d h;
    h << -params.delta_c, g_eff, 0.0,
         g_eff, -params.delta_e, 0.5 * params.omega,
         0.0, 0.5 * params.omega, -params.delta_r;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(h);
    Eigen::Matrix3d vecs = solver.eigenvectors();
    Eigen::Vector3d vals = solver.eigenvalues();

    // Dark polariton = minimal overlap with the intermediate mode b; the
    // bright polaritons are ordered by descending eigenvalue.
    int dark = 0;
    for (int q = 1; q < 3; ++q)
        if (std::abs(vecs(1, q)) < std::abs(vecs(1, dark))) dark = q;
    std::vector<int> bright;
    for (int q = 0; q < 3; ++q)
        if (q != dark) bright.push_back(q);
    if (vals(bright[0]) < vals(bright[1])) std::swap(bright[0], bright[1]);

    PolaritonBasis basis;
    std::array<int, 3> order{bright[0], dark, bright[1]};
    for (int col = 0; col < 3; ++col) {
        basis.u.col(col) = vecs.col(order[col]).cast<cplx>();
        basis.eigenvalues(col) = vals(order[col]);
    }
    double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
    basis.degenerate = std::abs(vals(0) - vals(1)) < 1e-10 * scale ||
                       std::abs(vals(1) - vals(2)) < 1e-10 * scale ||
                       std::abs(vals(0) - vals(2)) < 1e-10 * scale;

    ModelSpec lab = rydberg_three_boson(params);
    ModelSpec transformed;
    transformed.n_modes = 3;
    transformed.n_spins = 0;
    transformed.hamiltonian = substitute_modes(lab.hamiltonian, basis.u);
    for (const auto& j : lab.jumps) transformed.jumps.push_back(substitute_modes(j, basis.u));
    return {transformed, basis};
}

}  // namespace pvar
