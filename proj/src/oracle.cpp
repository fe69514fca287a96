#include "pvar/oracle.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

namespace pvar {

namespace {

SparseOp sparse_identity(long n) {
    SparseOp id(n, n);
    id.setIdentity();
    return id;
}

SparseOp kron(const SparseOp& a, const SparseOp& b) {
    SparseOp out = Eigen::kroneckerProduct(a, b).eval();
    out.makeCompressed();
    return out;
}

}  // namespace

long TruncationSpec::dimension() const {
    long d = 1;
    for (int c : cutoffs) d *= c;
    for (int s = 0; s < n_spins; ++s) d *= 2;
    return d;
}

void TruncationSpec::validate() const {
    for (int c : cutoffs)
        if (c < 1) throw std::invalid_argument("Fock cutoff must be >= 1");
    if (n_spins < 0) throw std::invalid_argument("negative spin count");
    if (dimension() > dimension_cap)
        throw std::invalid_argument("Hilbert dimension " + std::to_string(dimension()) +
                                    " exceeds the cap " + std::to_string(dimension_cap));
}

FockSpace::FockSpace(TruncationSpec trunc) : trunc_(std::move(trunc)) {
    trunc_.validate();
    dim_ = trunc_.dimension();

    const int n_modes = int(trunc_.cutoffs.size());
    auto factor_op = [&](int target_factor, const SparseOp& local) {
        SparseOp full(1, 1);
        full.insert(0, 0) = 1.0;
        int factor = 0;
        for (int m = 0; m < n_modes; ++m, ++factor) {
            long d = trunc_.cutoffs[m];
            full = kron(full, factor == target_factor ? local : sparse_identity(d));
        }
        for (int s = 0; s < trunc_.n_spins; ++s, ++factor)
            full = kron(full, factor == target_factor ? local : sparse_identity(2));
        return full;
    };

    for (int m = 0; m < n_modes; ++m) {
        int d = trunc_.cutoffs[m];
        SparseOp a(d, d);
        for (int n = 1; n < d; ++n) a.insert(n - 1, n) = std::sqrt(double(n));
        mode_ann_.push_back(factor_op(m, a));
    }
    for (int s = 0; s < trunc_.n_spins; ++s) {
        // basis order |e> = 0, |g> = 1 so that sigma_z = diag(1, -1)
        SparseOp sp(2, 2), sm(2, 2), sz(2, 2);
        sp.insert(0, 1) = 1.0;
        sm.insert(1, 0) = 1.0;
        sz.insert(0, 0) = 1.0;
        sz.insert(1, 1) = -1.0;
        spins_.push_back({factor_op(n_modes + s, sp), factor_op(n_modes + s, sm),
                          factor_op(n_modes + s, sz)});
    }
}

SparseOp FockSpace::annihilation(int mode) const { return mode_ann_.at(mode); }
SparseOp FockSpace::creation(int mode) const { return SparseOp(mode_ann_.at(mode).adjoint()); }
SparseOp FockSpace::identity() const { return sparse_identity(dim_); }

SparseOp FockSpace::spin(int site, SpinOp op) const {
    const auto& s = spins_.at(site);
    switch (op) {
        case SpinOp::Plus: return s[0];
        case SpinOp::Minus: return s[1];
        case SpinOp::Z: return s[2];
    }
    return identity();
}

SparseOp FockSpace::matrix(const OperatorPolynomial& op) const {
    SparseOp total(dim_, dim_);
    for (const auto& [m, coeff] : op.terms()) {
        SparseOp term = identity();
        for (const auto& f : m.boson.factors) {
            for (int i = 0; i < f.p; ++i) term = SparseOp(term * creation(f.mode));
            for (int i = 0; i < f.q; ++i) term = SparseOp(term * annihilation(f.mode));
        }
        for (const auto& [site, sop] : m.spin.factors) term = SparseOp(term * spin(site, sop));
        total += coeff * term;
    }
    total.makeCompressed();
    return total;
}

SparseOp build_liouvillian(const ModelSpec& model, const FockSpace& space) {
    model.validate();
    if (model.n_modes != int(space.trunc().cutoffs.size()) || model.n_spins != space.trunc().n_spins)
        throw std::invalid_argument("model and truncation index spaces differ");

    const long d = space.dim();
    SparseOp id = space.identity();
    SparseOp h = space.matrix(model.hamiltonian);
    const cplx i{0.0, 1.0};

    SparseOp liou = SparseOp(-i * (kron(id, h) - kron(SparseOp(h.transpose()), id)));
    for (const auto& jump : model.jumps) {
        SparseOp c = space.matrix(jump);
        SparseOp cdc = SparseOp(SparseOp(c.adjoint()) * c);
        liou += kron(SparseOp(c.conjugate()), c);
        liou -= 0.5 * kron(id, cdc);
        liou -= 0.5 * kron(SparseOp(cdc.transpose()), id);
    }
    liou.makeCompressed();
    (void)d;
    return liou;
}

SteadyStateResult steady_state(const SparseOp& liouvillian, const FockSpace& space,
                               const SteadyStateOptions& options) {
    const long d = space.dim();
    const long n = d * d;
    if (liouvillian.rows() != n) throw std::invalid_argument("liouvillian dimension mismatch");

    // Bordered system: replace row 0 by the trace functional.
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(liouvillian.nonZeros() + d);
    for (int k = 0; k < liouvillian.outerSize(); ++k)
        for (SparseOp::InnerIterator it(liouvillian, k); it; ++it)
            if (it.row() != 0) trip.emplace_back(int(it.row()), int(it.col()), it.value());
    for (long i = 0; i < d; ++i) trip.emplace_back(0, int(i * d + i), cplx{1.0});

    SparseOp bordered(n, n);
    bordered.setFromTriplets(trip.begin(), trip.end());
    bordered.makeCompressed();

    Eigen::SparseLU<SparseOp> lu;
    lu.compute(bordered);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("bordered steady-state system is singular (degenerate steady states?)");

    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    rhs(0) = 1.0;
    Eigen::VectorXcd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw std::runtime_error("steady-state solve failed");

    Eigen::MatrixXcd rho = Eigen::Map<Eigen::MatrixXcd>(x.data(), d, d);
    rho = 0.5 * (rho + rho.adjoint().eval());
    rho /= rho.trace().real();

    SteadyStateResult result;
    result.rho = rho;
    Eigen::VectorXcd vec = Eigen::Map<Eigen::VectorXcd>(rho.data(), n);
    result.residual = (liouvillian * vec).norm();

    // Weight on the top Fock level of each mode.
    const auto& cutoffs = space.trunc().cutoffs;
    const int n_modes = int(cutoffs.size());
    long spin_dim = 1;
    for (int s = 0; s < space.trunc().n_spins; ++s) spin_dim *= 2;
    result.boundary_population.assign(n_modes, 0.0);
    for (long idx = 0; idx < d; ++idx) {
        long rem = idx / spin_dim;
        for (int m = n_modes - 1; m >= 0; --m) {
            long level = rem % cutoffs[m];
            rem /= cutoffs[m];
            if (level == cutoffs[m] - 1)
                result.boundary_population[m] += rho(idx, idx).real();
        }
    }
    for (double pop : result.boundary_population) {
        if (options.strict && pop > options.boundary_tolerance)
            throw std::runtime_error("boundary population " + std::to_string(pop) +
                                     " exceeds tolerance; increase the Fock cutoff");
    }
    return result;
}

SteadyStateResult steady_state(const ModelSpec& model, const FockSpace& space,
                               const SteadyStateOptions& options) {
    return steady_state(build_liouvillian(model, space), space, options);
}

cplx exact_moment(const SteadyStateResult& result, const FockSpace& space, const MomentKey& key) {
    if (key.is_identity()) return 1.0;
    SparseOp op = space.matrix(OperatorPolynomial::term(key, 1.0));
    return (result.rho * op).trace();
}

}  // namespace pvar
