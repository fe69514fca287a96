#include <doctest.h>

#include <random>

#include "pvar/algebra.hpp"
#include "pvar/oracle.hpp"

using namespace pvar;

namespace {

OperatorPolynomial a() { return OperatorPolynomial::annihilation(0); }
OperatorPolynomial ad() { return OperatorPolynomial::creation(0); }
OperatorPolynomial sp() { return OperatorPolynomial::spin(0, SpinOp::Plus); }
OperatorPolynomial sm() { return OperatorPolynomial::spin(0, SpinOp::Minus); }
OperatorPolynomial sz() { return OperatorPolynomial::spin(0, SpinOp::Z); }

double poly_distance(const OperatorPolynomial& x, const OperatorPolynomial& y) {
    OperatorPolynomial d = x;
    d -= y;
    return d.max_abs_coeff();
}

// Random polynomial over n_modes modes and n_spins spins with low-order terms.
OperatorPolynomial random_poly(std::mt19937& rng, int n_modes, int n_spins, int n_terms,
                               int max_exp = 2) {
    std::uniform_int_distribution<int> expd(0, max_exp);
    std::uniform_int_distribution<int> opd(0, 2);
    std::uniform_real_distribution<double> coeffd(-1.0, 1.0);
    OperatorPolynomial poly;
    for (int t = 0; t < n_terms; ++t) {
        Monomial m;
        for (int mode = 0; mode < n_modes; ++mode) {
            int p = expd(rng), q = expd(rng);
            if (p + q > 0) m.boson.factors.push_back({mode, p, q});
        }
        for (int s = 0; s < n_spins; ++s) {
            if (expd(rng) == 0) continue;
            m.spin.factors.emplace_back(s, SpinOp(opd(rng)));
        }
        poly.add_term(m, {coeffd(rng), coeffd(rng)});
    }
    return poly;
}

}  // namespace

TEST_CASE("single-mode commutator") {
    auto prod = multiply(a(), ad());
    OperatorPolynomial expected = multiply(ad(), a()) + OperatorPolynomial::identity();
    CHECK(poly_distance(prod, expected) < 1e-14);

    // cross-check against truncated matrices
    FockSpace space({{6}, 0});
    Eigen::MatrixXcd lhs = Eigen::MatrixXcd(space.matrix(a())) * Eigen::MatrixXcd(space.matrix(ad()));
    Eigen::MatrixXcd rhs = Eigen::MatrixXcd(space.matrix(prod));
    // top Fock row is corrupted by truncation; compare the interior block
    CHECK((lhs.topLeftCorner(4, 4) - rhs.topLeftCorner(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("normal-ordered product stays put") {
    auto n = multiply(ad(), a());
    CHECK(n.terms().size() == 1);
    CHECK(n.coeff({BosonMonomial::single(0, 1, 1), {}}) == cplx{1.0});
}

TEST_CASE("pauli products") {
    auto prod = multiply(sp(), sm());
    OperatorPolynomial expected = 0.5 * OperatorPolynomial::identity() + 0.5 * sz();
    CHECK(poly_distance(prod, expected) < 1e-14);

    // full 2x2 table against Pauli matrices
    Eigen::Matrix2cd msp, msm, msz, mid;
    msp << 0, 1, 0, 0;
    msm << 0, 0, 1, 0;
    msz << 1, 0, 0, -1;
    mid.setIdentity();
    auto mat_of = [&](SpinOp op) { return op == SpinOp::Plus ? msp : op == SpinOp::Minus ? msm : msz; };
    auto poly_to_mat = [&](const OperatorPolynomial& poly) {
        Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
        for (const auto& [mono, c] : poly.terms()) {
            Eigen::Matrix2cd t = mid;
            for (const auto& [site, op] : mono.spin.factors) t = (t * mat_of(op)).eval();
            m += c * t;
        }
        return m;
    };
    for (SpinOp x : {SpinOp::Plus, SpinOp::Minus, SpinOp::Z}) {
        for (SpinOp y : {SpinOp::Plus, SpinOp::Minus, SpinOp::Z}) {
            auto p = multiply(OperatorPolynomial::spin(0, x), OperatorPolynomial::spin(0, y));
            Eigen::Matrix2cd expect = mat_of(x) * mat_of(y);
            CHECK((poly_to_mat(p) - expect).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
}

TEST_CASE("adjoint") {
    CHECK(poly_distance(adjoint(multiply(ad(), a())), multiply(ad(), a())) < 1e-14);
    CHECK(poly_distance(adjoint(a()), ad()) < 1e-14);

    OperatorPolynomial op = cplx{0, 1} * multiply(ad(), sm());
    OperatorPolynomial expected = cplx{0, -1} * multiply(a(), sp());
    CHECK(poly_distance(adjoint(op), expected) < 1e-14);

    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto poly = random_poly(rng, 2, 1, 4);
        CHECK(poly_distance(adjoint(adjoint(poly)), poly) < 1e-14);
    }
}

TEST_CASE("multiplying by identity is exact") {
    std::mt19937 rng(3);
    auto poly = random_poly(rng, 2, 1, 5);
    auto same = multiply(poly, OperatorPolynomial::identity());
    CHECK(same.terms() == poly.terms());
}

TEST_CASE("adjoint lindblad on simple models") {
    double gamma = 0.7;
    ModelSpec decay;
    decay.n_modes = 1;
    decay.jumps.push_back(std::sqrt(gamma) * a());

    CHECK(poly_distance(adjoint_lindblad(decay, a()), -0.5 * gamma * a()) < 1e-14);
    CHECK(poly_distance(adjoint_lindblad(decay, multiply(ad(), a())),
                        -gamma * multiply(ad(), a())) < 1e-14);

    double delta = 1.3;
    ModelSpec rot;
    rot.n_modes = 1;
    rot.hamiltonian = delta * multiply(ad(), a());
    CHECK(poly_distance(adjoint_lindblad(rot, a()), cplx{0, -delta} * a()) < 1e-14);
}

TEST_CASE("trace preservation dual: identity maps to zero") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        ModelSpec model;
        model.n_modes = 2;
        model.n_spins = 1;
        auto h = random_poly(rng, 2, 1, 3);
        model.hamiltonian = h + adjoint(h);
        model.jumps.push_back(random_poly(rng, 2, 1, 2));
        CHECK(adjoint_lindblad(model, OperatorPolynomial::identity()).max_abs_coeff() < 1e-11);
    }
}

TEST_CASE("hermiticity preservation") {
    std::mt19937 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        ModelSpec model;
        model.n_modes = 1;
        model.n_spins = 1;
        auto h = random_poly(rng, 1, 1, 3);
        model.hamiltonian = h + adjoint(h);
        model.jumps.push_back(random_poly(rng, 1, 1, 2));

        auto obs = random_poly(rng, 1, 1, 3);
        auto herm = obs + adjoint(obs);
        CHECK(adjoint_lindblad(model, herm).is_hermitian(1e-11));
    }
}

TEST_CASE("duality with the Schroedinger-picture generator") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> coeffd(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        int n_modes = 1 + trial % 2;
        int n_spins = trial % 3 == 0 ? 1 : 0;
        ModelSpec model;
        model.n_modes = n_modes;
        model.n_spins = n_spins;
        auto h = random_poly(rng, n_modes, n_spins, 3, 1);
        model.hamiltonian = h + adjoint(h);
        int n_jumps = 1 + trial % 3;
        for (int j = 0; j < n_jumps; ++j) model.jumps.push_back(random_poly(rng, n_modes, n_spins, 2, 1));

        // Random rho supported on Fock levels < 4; evaluated in a larger space
        // (cutoff 8) so neither route suffers truncation artifacts.
        long small_dim = 1;
        for (int m = 0; m < n_modes; ++m) small_dim *= 4;
        for (int s = 0; s < n_spins; ++s) small_dim *= 2;

        TruncationSpec trunc;
        trunc.cutoffs.assign(n_modes, 8);
        trunc.n_spins = n_spins;
        FockSpace space(trunc);
        long d = space.dim();

        long spin_dim = 1;
        for (int s = 0; s < n_spins; ++s) spin_dim *= 2;
        std::vector<long> embed;
        for (long idx = 0; idx < small_dim; ++idx) {
            long rem = idx / spin_dim;
            long sidx = idx % spin_dim;
            std::vector<long> levels(n_modes);
            for (int m = n_modes - 1; m >= 0; --m) {
                levels[m] = rem % 4;
                rem /= 4;
            }
            long big_idx = 0;
            for (int m = 0; m < n_modes; ++m) big_idx = big_idx * 8 + levels[m];
            embed.push_back(big_idx * spin_dim + sidx);
        }

        Eigen::MatrixXcd small = Eigen::MatrixXcd::Random(small_dim, small_dim);
        small = (small * small.adjoint()).eval();
        small /= small.trace().real();
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
        for (long r = 0; r < small_dim; ++r)
            for (long col = 0; col < small_dim; ++col) rho(embed[r], embed[col]) = small(r, col);

        Eigen::MatrixXcd hmat = Eigen::MatrixXcd(space.matrix(model.hamiltonian));
        const cplx i{0, 1};
        Eigen::MatrixXcd lrho = -i * (hmat * rho - rho * hmat);
        for (const auto& jump : model.jumps) {
            Eigen::MatrixXcd c = Eigen::MatrixXcd(space.matrix(jump));
            Eigen::MatrixXcd cdc = c.adjoint() * c;
            lrho += c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
        }

        auto obs_poly = random_poly(rng, n_modes, n_spins, 2, 1);
        Eigen::MatrixXcd obs = Eigen::MatrixXcd(space.matrix(obs_poly));
        Eigen::MatrixXcd ldag_obs = Eigen::MatrixXcd(space.matrix(adjoint_lindblad(model, obs_poly)));

        cplx lhs = (lrho * obs).trace();
        cplx rhs = (rho * ldag_obs).trace();
        CHECK(std::abs(lhs - rhs) < 1e-10);
    }
}
