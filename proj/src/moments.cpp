#include "pvar/moments.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace pvar {

namespace {

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 0; i < k; ++i) r = r * double(n - i) / double(i + 1);
    return r;
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

double falling_factorial(int l, int p) {  // l!/(l-p)!
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= double(l - i);
    return r;
}

cplx ipow(cplx z, int n) {
    cplx r = 1.0;
    for (int i = 0; i < n; ++i) r *= z;
    return r;
}

double canonical_angle(double phi) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    phi = std::fmod(phi, two_pi);
    if (phi < 0) phi += two_pi;
    return phi;
}

// Wick sum for a zero-mean Gaussian state with normal-ordered pair moments
// nu = <a†a>, mu = <aa>: nd creation and na annihilation operators.
cplx wick(int nd, int na, cplx nu, cplx mu) {
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(nd + 1, na + 1);
    w(0, 0) = 1.0;
    for (int i = 0; i <= nd; ++i)
        for (int j = 0; j <= na; ++j) {
            if ((i == 0 && j == 0) || (i + j) % 2 != 0) continue;
            if (i > 0) {
                cplx r = 0.0;
                if (i >= 2) r += double(i - 1) * std::conj(mu) * w(i - 2, j);
                if (j >= 1) r += double(j) * nu * w(i - 1, j - 1);
                w(i, j) = r;
            } else {
                w(0, j) = double(j - 1) * mu * w(0, j - 2);
            }
        }
    return w(nd, na);
}

cplx coherent_overlap(cplx beta, cplx alpha) {  // <beta|alpha>
    return std::exp(-0.5 * std::norm(beta) - 0.5 * std::norm(alpha) + std::conj(beta) * alpha);
}

}  // namespace

ComponentState::ComponentState(Variant v) : value_(std::move(v)) {
    std::visit(
        [](auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Thermal>) {
                if (s.n0 < 0) throw std::invalid_argument("thermal occupation must be >= 0");
            } else if constexpr (std::is_same_v<T, Fock>) {
                if (s.l < 0) throw std::invalid_argument("Fock index must be >= 0");
            } else if constexpr (std::is_same_v<T, Squeezed>) {
                if (s.r < 0) throw std::invalid_argument("squeezing must be >= 0");
                s.phi = canonical_angle(s.phi);
            } else if constexpr (std::is_same_v<T, SqueezedThermal>) {
                if (s.n0 < 0 || s.r < 0) throw std::invalid_argument("invalid squeezed-thermal parameters");
                s.phi = canonical_angle(s.phi);
            } else if constexpr (std::is_same_v<T, SqueezedFock>) {
                if (s.l < 0 || s.r < 0) throw std::invalid_argument("invalid squeezed-Fock parameters");
                s.phi = canonical_angle(s.phi);
            }
        },
        value_);
}

void ModeAnsatz::validate() const {
    if (components.empty()) throw std::invalid_argument("mode ansatz needs at least one component");
    int cats = 0;
    for (const auto& c : components)
        if (c.is_cat()) ++cats;
    if (cats > 1)
        throw std::invalid_argument("at most one cat component per mode is supported");
}

void SpinAnsatz::validate() const {
    if (x * x + y * y + z * z > 1.0 + 1e-12)
        throw std::invalid_argument("Bloch vector outside the unit ball");
}

cplx SpinAnsatz::expectation(SpinOp op) const {
    switch (op) {
        case SpinOp::Plus: return 0.5 * cplx{x, y};
        case SpinOp::Minus: return 0.5 * cplx{x, -y};
        case SpinOp::Z: return z;
    }
    return 0.0;
}

void Ansatz::validate() const {
    for (const auto& m : modes) m.validate();
    for (const auto& s : spins) s.validate();
    for (const auto& [key, delta] : correlations) {
        if (key.boson.factors.size() + key.spin.factors.size() < 2)
            throw std::invalid_argument(
                "correlation key must touch at least two modes or spins");
        if (!key.boson.factors.empty() && key.boson.max_mode() >= int(modes.size()))
            throw std::invalid_argument("correlation key mode out of range");
        if (!key.spin.factors.empty() && key.spin.max_site() >= int(spins.size()))
            throw std::invalid_argument("correlation key spin out of range");
    }
}

cplx component_moment(const ComponentState& state, int p, int q, int max_order) {
    if (p < 0 || q < 0) throw std::invalid_argument("negative moment exponent");
    if (p + q > max_order)
        throw std::domain_error("moment order " + std::to_string(p + q) +
                                " exceeds the configured maximum " + std::to_string(max_order));

    return std::visit(
        [&](const auto& s) -> cplx {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Coherent>) {
                return ipow(std::conj(s.alpha), p) * ipow(s.alpha, q);
            } else if constexpr (std::is_same_v<T, Thermal>) {
                return p == q ? cplx{factorial(p) * std::pow(s.n0, p)} : cplx{0.0};
            } else if constexpr (std::is_same_v<T, Fock>) {
                if (p != q) return 0.0;
                return p <= s.l ? cplx{falling_factorial(s.l, p)} : cplx{0.0};
            } else if constexpr (std::is_same_v<T, Squeezed>) {
                double sh = std::sinh(s.r), ch = std::cosh(s.r);
                cplx nu = sh * sh;
                cplx mu = -std::polar(sh * ch, s.phi);
                return wick(p, q, nu, mu);
            } else if constexpr (std::is_same_v<T, SqueezedThermal>) {
                double sh = std::sinh(s.r), ch = std::cosh(s.r);
                cplx nu = s.n0 * std::cosh(2 * s.r) + sh * sh;
                cplx mu = -std::polar(sh * ch * (2 * s.n0 + 1), s.phi);
                return wick(p, q, nu, mu);
            } else if constexpr (std::is_same_v<T, SqueezedFock>) {
                // <l| (S†a†S)^p (S†aS)^q |l>, with S†aS = a cosh r - e^{iφ} a† sinh r
                double sh = std::sinh(s.r), ch = std::cosh(s.r);
                OperatorPolynomial adag_t = ch * OperatorPolynomial::creation(0) -
                                            std::polar(sh, -s.phi) * OperatorPolynomial::annihilation(0);
                OperatorPolynomial a_t = ch * OperatorPolynomial::annihilation(0) -
                                         std::polar(sh, s.phi) * OperatorPolynomial::creation(0);
                OperatorPolynomial prod = OperatorPolynomial::identity();
                for (int i = 0; i < p; ++i) prod = multiply(prod, adag_t);
                for (int i = 0; i < q; ++i) prod = multiply(prod, a_t);
                cplx total = 0.0;
                for (const auto& [m, c] : prod.terms()) {
                    auto [jp, jq] = m.boson.exponents(0);
                    if (jp == jq && jq <= s.l) total += c * falling_factorial(s.l, jq);
                }
                return total;
            } else {  // Cat
                cplx o12 = coherent_overlap(s.alpha1, s.alpha2);
                double norm2 = 1.0 + std::norm(s.theta) + 2.0 * std::real(s.theta * o12);
                if (norm2 <= 0) throw std::invalid_argument("cat state has vanishing norm");
                cplx a1 = s.alpha1, a2 = s.alpha2;
                cplx sum = ipow(std::conj(a1), p) * ipow(a1, q) +
                           std::conj(s.theta) * ipow(std::conj(a2), p) * ipow(a1, q) * coherent_overlap(a2, a1) +
                           s.theta * ipow(std::conj(a1), p) * ipow(a2, q) * coherent_overlap(a1, a2) +
                           std::norm(s.theta) * ipow(std::conj(a2), p) * ipow(a2, q);
                return sum / norm2;
            }
        },
        state.value());
}

cplx convolve_moment(std::span<const ComponentState> components, int p, int q, int max_order) {
    if (components.empty()) throw std::invalid_argument("empty component list");
    if (p + q > max_order)
        throw std::domain_error("moment order exceeds the configured maximum");
    if (components.size() == 1) return component_moment(components[0], p, q, max_order);

    auto rest = components.subspan(1);
    cplx total = 0.0;
    for (int n = 0; n <= p; ++n) {
        for (int m = 0; m <= q; ++m) {
            cplx head = component_moment(components[0], n, m, max_order);
            if (head == cplx{0.0}) continue;
            total += binom(p, n) * binom(q, m) * head * convolve_moment(rest, p - n, q - m, max_order);
        }
    }
    return total;
}

cplx convolve_moment(const std::vector<ComponentState>& components, int p, int q, int max_order) {
    return convolve_moment(std::span<const ComponentState>(components), p, q, max_order);
}

cplx ansatz_moment(const Ansatz& ansatz, const MomentKey& key, int max_order) {
    if (key.boson.max_mode() >= int(ansatz.modes.size()) ||
        key.spin.max_site() >= int(ansatz.spins.size()))
        throw std::invalid_argument("moment key outside the ansatz index space");

    cplx product = 1.0;
    for (const auto& f : key.boson.factors)
        product *= convolve_moment(ansatz.modes[f.mode].components, f.p, f.q, max_order);
    for (const auto& [site, op] : key.spin.factors)
        product *= ansatz.spins[site].expectation(op);

    if (auto it = ansatz.correlations.find(key); it != ansatz.correlations.end())
        product += it->second;
    return product;
}

SqueezingEstimate squeezing_of(cplx mean, cplx n_moment, cplx aa_moment) {
    cplx nu = n_moment - cplx{std::norm(mean)};
    cplx mu = aa_moment - mean * mean;
    double v_min = 0.5 + nu.real() - std::abs(mu);
    if (v_min <= 0)
        throw std::domain_error("unphysical moment set: minimal quadrature variance <= 0");
    SqueezingEstimate est;
    est.v_min = v_min;
    if (v_min < 0.5) {
        est.r = -0.5 * std::log(2.0 * v_min);
        est.phi = canonical_angle(std::arg(-mu));
    }
    return est;
}

SqueezingEstimate squeezing_of(const Ansatz& ansatz, int mode) {
    cplx mean = ansatz_moment(ansatz, {BosonMonomial::single(mode, 0, 1), {}});
    cplx n = ansatz_moment(ansatz, {BosonMonomial::single(mode, 1, 1), {}});
    cplx aa = ansatz_moment(ansatz, {BosonMonomial::single(mode, 0, 2), {}});
    return squeezing_of(mean, n, aa);
}

}  // namespace pvar
