#include "pvar/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

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

// Normal ordering of a^q a†^p in a single mode:
//   a^q a†^p = sum_k k! C(p,k) C(q,k) a†^(p-k) a^(q-k)
void merge_boson_factor(std::vector<std::pair<BosonMonomial, cplx>>& acc, int mode, int p2, int q2) {
    std::vector<std::pair<BosonMonomial, cplx>> out;
    for (const auto& [mono, coeff] : acc) {
        auto [p1, q1] = mono.exponents(mode);
        // a†^p1 a^q1 · a†^p2 a^q2
        int kmax = std::min(q1, p2);
        for (int k = 0; k <= kmax; ++k) {
            double w = factorial(k) * binom(p2, k) * binom(q1, k);
            BosonMonomial m;
            for (const auto& f : mono.factors)
                if (f.mode != mode) m.factors.push_back(f);
            int p = p1 + p2 - k, q = q1 + q2 - k;
            if (p + q > 0) {
                m.factors.push_back({mode, p, q});
                std::sort(m.factors.begin(), m.factors.end(),
                          [](const auto& a, const auto& b) { return a.mode < b.mode; });
            }
            out.emplace_back(std::move(m), coeff * w);
        }
    }
    acc = std::move(out);
}

// Product table for a single spin site; results as (coeff, op-or-identity) pairs.
// SpinOp::Z squared is the identity; products with sigma± follow from the 2x2 matrices.
struct SpinTerm {
    cplx coeff;
    bool identity;
    SpinOp op;
};

std::vector<SpinTerm> spin_product(SpinOp a, SpinOp b) {
    using enum SpinOp;
    if (a == Plus && b == Plus) return {};
    if (a == Minus && b == Minus) return {};
    if (a == Plus && b == Minus)  // |e><e| = (1+z)/2
        return {{0.5, true, Z}, {0.5, false, Z}};
    if (a == Minus && b == Plus)  // |g><g| = (1-z)/2
        return {{0.5, true, Z}, {-0.5, false, Z}};
    if (a == Plus && b == Z) return {{-1.0, false, Plus}};
    if (a == Z && b == Plus) return {{1.0, false, Plus}};
    if (a == Minus && b == Z) return {{1.0, false, Minus}};
    if (a == Z && b == Minus) return {{-1.0, false, Minus}};
    // Z·Z
    return {{1.0, true, Z}};
}

}  // namespace

BosonMonomial BosonMonomial::single(int mode, int p, int q) {
    BosonMonomial m;
    if (p + q > 0) m.factors.push_back({mode, p, q});
    return m;
}

int BosonMonomial::order() const {
    int s = 0;
    for (const auto& f : factors) s += f.p + f.q;
    return s;
}

std::pair<int, int> BosonMonomial::exponents(int mode) const {
    for (const auto& f : factors)
        if (f.mode == mode) return {f.p, f.q};
    return {0, 0};
}

int BosonMonomial::max_mode() const {
    int m = -1;
    for (const auto& f : factors) m = std::max(m, f.mode);
    return m;
}

SpinMonomial SpinMonomial::single(int site, SpinOp op) {
    SpinMonomial m;
    m.factors.emplace_back(site, op);
    return m;
}

int SpinMonomial::max_site() const {
    int m = -1;
    for (const auto& f : factors) m = std::max(m, f.first);
    return m;
}

OperatorPolynomial OperatorPolynomial::term(Monomial m, cplx coeff) {
    OperatorPolynomial p;
    p.add_term(m, coeff);
    return p;
}

cplx OperatorPolynomial::coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? cplx{0.0} : it->second;
}

void OperatorPolynomial::add_term(const Monomial& m, cplx c) {
    auto it = terms_.find(m);
    if (it == terms_.end()) {
        if (std::abs(c) > kCoeffDropTol) terms_.emplace(m, c);
        return;
    }
    it->second += c;
    if (std::abs(it->second) <= kCoeffDropTol) terms_.erase(it);
}

OperatorPolynomial& OperatorPolynomial::operator+=(const OperatorPolynomial& rhs) {
    for (const auto& [m, c] : rhs.terms_) add_term(m, c);
    return *this;
}

OperatorPolynomial& OperatorPolynomial::operator-=(const OperatorPolynomial& rhs) {
    for (const auto& [m, c] : rhs.terms_) add_term(m, -c);
    return *this;
}

OperatorPolynomial& OperatorPolynomial::operator*=(cplx s) {
    if (std::abs(s) <= kCoeffDropTol) {
        terms_.clear();
        return *this;
    }
    for (auto& [m, c] : terms_) c *= s;
    return *this;
}

bool OperatorPolynomial::is_hermitian(double tol) const {
    OperatorPolynomial diff = *this;
    diff -= adjoint(*this);
    return diff.max_abs_coeff() <= tol;
}

double OperatorPolynomial::max_abs_coeff() const {
    double m = 0.0;
    for (const auto& [mono, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}

int OperatorPolynomial::max_mode() const {
    int m = -1;
    for (const auto& [mono, c] : terms_) m = std::max(m, mono.boson.max_mode());
    return m;
}

int OperatorPolynomial::max_spin() const {
    int m = -1;
    for (const auto& [mono, c] : terms_) m = std::max(m, mono.spin.max_site());
    return m;
}

void ModelSpec::validate() const {
    if (n_modes < 0 || n_spins < 0) throw std::invalid_argument("negative mode/spin count");
    auto check = [&](const OperatorPolynomial& op, const char* what) {
        if (op.max_mode() >= n_modes)
            throw std::invalid_argument(std::string(what) + ": mode index out of declared range");
        if (op.max_spin() >= n_spins)
            throw std::invalid_argument(std::string(what) + ": spin index out of declared range");
    };
    check(hamiltonian, "hamiltonian");
    for (const auto& j : jumps) check(j, "jump");
    if (!hamiltonian.is_hermitian())
        throw std::invalid_argument("hamiltonian is not Hermitian");
}

OperatorPolynomial multiply(const OperatorPolynomial& lhs, const OperatorPolynomial& rhs) {
    OperatorPolynomial result;
    for (const auto& [ma, ca] : lhs.terms()) {
        for (const auto& [mb, cb] : rhs.terms()) {
            // Boson part: fold rhs factors mode by mode into the lhs monomial.
            std::vector<std::pair<BosonMonomial, cplx>> bacc{{ma.boson, ca * cb}};
            for (const auto& f : mb.boson.factors) merge_boson_factor(bacc, f.mode, f.p, f.q);

            // Spin part: sites are independent; expand per-site products.
            std::vector<std::pair<SpinMonomial, cplx>> sacc{{SpinMonomial{}, 1.0}};
            {
                // gather sites present on either side
                std::vector<int> sites;
                for (const auto& [s, op] : ma.spin.factors) sites.push_back(s);
                for (const auto& [s, op] : mb.spin.factors) sites.push_back(s);
                std::sort(sites.begin(), sites.end());
                sites.erase(std::unique(sites.begin(), sites.end()), sites.end());

                for (int site : sites) {
                    const SpinOp* oa = nullptr;
                    const SpinOp* ob = nullptr;
                    for (const auto& [s, op] : ma.spin.factors)
                        if (s == site) oa = &op;
                    for (const auto& [s, op] : mb.spin.factors)
                        if (s == site) ob = &op;

                    std::vector<std::pair<SpinMonomial, cplx>> next;
                    for (const auto& [sm, sc] : sacc) {
                        if (oa && ob) {
                            for (const auto& t : spin_product(*oa, *ob)) {
                                SpinMonomial m2 = sm;
                                if (!t.identity) m2.factors.emplace_back(site, t.op);
                                next.emplace_back(std::move(m2), sc * t.coeff);
                            }
                        } else {
                            SpinMonomial m2 = sm;
                            m2.factors.emplace_back(site, oa ? *oa : *ob);
                            next.emplace_back(std::move(m2), sc);
                        }
                    }
                    sacc = std::move(next);
                }
                for (auto& [sm, sc] : sacc)
                    std::sort(sm.factors.begin(), sm.factors.end());
            }

            for (const auto& [bm, bc] : bacc)
                for (const auto& [sm, sc] : sacc)
                    result.add_term({bm, sm}, bc * sc);
        }
    }
    return result;
}

OperatorPolynomial adjoint(const OperatorPolynomial& op) {
    OperatorPolynomial result;
    for (const auto& [m, c] : op.terms()) {
        Monomial adj;
        for (const auto& f : m.boson.factors) adj.boson.factors.push_back({f.mode, f.q, f.p});
        for (const auto& [s, o] : m.spin.factors) {
            SpinOp oadj = o == SpinOp::Plus ? SpinOp::Minus : o == SpinOp::Minus ? SpinOp::Plus : SpinOp::Z;
            adj.spin.factors.emplace_back(s, oadj);
        }
        result.add_term(adj, std::conj(c));
    }
    return result;
}

OperatorPolynomial adjoint_lindblad(const ModelSpec& model, const OperatorPolynomial& obs) {
    const cplx i{0.0, 1.0};
    OperatorPolynomial result = i * (multiply(model.hamiltonian, obs) - multiply(obs, model.hamiltonian));
    for (const auto& c : model.jumps) {
        OperatorPolynomial cd = adjoint(c);
        OperatorPolynomial cdc = multiply(cd, c);
        result += multiply(multiply(cd, obs), c);
        result -= 0.5 * (multiply(cdc, obs) + multiply(obs, cdc));
    }
    return result;
}

std::vector<std::pair<Monomial, OperatorPolynomial>>
eom_system(const ModelSpec& model, const std::vector<Monomial>& keys) {
    std::vector<std::pair<Monomial, OperatorPolynomial>> out;
    out.reserve(keys.size());
    for (const auto& key : keys)
        out.emplace_back(key, adjoint_lindblad(model, OperatorPolynomial::term(key, 1.0)));
    return out;
}

std::string to_string(const Monomial& m) {
    if (m.is_identity()) return "1";
    std::ostringstream os;
    bool first = true;
    auto sep = [&] {
        if (!first) os << " ";
        first = false;
    };
    for (const auto& f : m.boson.factors) {
        sep();
        char name = char('a' + f.mode);
        if (f.p > 0) {
            os << name << "†";
            if (f.p > 1) os << "^" << f.p;
        }
        if (f.q > 0) {
            if (f.p > 0) os << " ";
            os << name;
            if (f.q > 1) os << "^" << f.q;
        }
    }
    for (const auto& [s, o] : m.spin.factors) {
        sep();
        os << (o == SpinOp::Plus ? "σ+" : o == SpinOp::Minus ? "σ-" : "σz");
        if (s > 0) os << "[" << s << "]";
    }
    return os.str();
}

std::string to_string(const OperatorPolynomial& op) {
    if (op.is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : op.terms()) {
        if (!first) os << " + ";
        first = false;
        os << "(" << c.real();
        if (c.imag() >= 0)
            os << "+" << c.imag() << "i)";
        else
            os << c.imag() << "i)";
        if (!m.is_identity()) os << "·" << to_string(m);
    }
    return os.str();
}

}  // namespace pvar
