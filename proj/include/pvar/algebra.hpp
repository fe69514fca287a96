#pragma once

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvar {

using cplx = std::complex<double>;

inline constexpr double kCoeffDropTol = 1e-14;

/// Normal-ordered product of ladder operators, a†^p a^q per mode.
/// Only modes with p+q > 0 are stored; factors are sorted by mode index.
struct BosonMonomial {
    struct Factor {
        int mode = 0;
        int p = 0;  // creation exponent
        int q = 0;  // annihilation exponent
        auto operator<=>(const Factor&) const = default;
    };
    std::vector<Factor> factors;

    BosonMonomial() = default;
    static BosonMonomial single(int mode, int p, int q);

    bool is_identity() const { return factors.empty(); }
    int order() const;
    // (p, q) for a given mode, (0, 0) if absent.
    std::pair<int, int> exponents(int mode) const;
    int max_mode() const;

    auto operator<=>(const BosonMonomial&) const = default;
};

enum class SpinOp { Plus, Minus, Z };

/// One spin operator per site; identity sites are omitted.
struct SpinMonomial {
    std::vector<std::pair<int, SpinOp>> factors;  // sorted by site

    SpinMonomial() = default;
    static SpinMonomial single(int site, SpinOp op);

    bool is_identity() const { return factors.empty(); }
    int max_site() const;

    auto operator<=>(const SpinMonomial&) const = default;
};

struct Monomial {
    BosonMonomial boson;
    SpinMonomial spin;

    bool is_identity() const { return boson.is_identity() && spin.is_identity(); }
    auto operator<=>(const Monomial&) const = default;
};

/// Sparse normal-ordered polynomial: map from monomial to complex coefficient.
class OperatorPolynomial {
  public:
    OperatorPolynomial() = default;
    static OperatorPolynomial zero() { return {}; }
    static OperatorPolynomial identity() { return term(Monomial{}, 1.0); }
    static OperatorPolynomial term(Monomial m, cplx coeff);
    static OperatorPolynomial creation(int mode) { return term({BosonMonomial::single(mode, 1, 0), {}}, 1.0); }
    static OperatorPolynomial annihilation(int mode) { return term({BosonMonomial::single(mode, 0, 1), {}}, 1.0); }
    static OperatorPolynomial spin(int site, SpinOp op) { return term({{}, SpinMonomial::single(site, op)}, 1.0); }

    const std::map<Monomial, cplx>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    cplx coeff(const Monomial& m) const;

    void add_term(const Monomial& m, cplx c);

    OperatorPolynomial& operator+=(const OperatorPolynomial& rhs);
    OperatorPolynomial& operator-=(const OperatorPolynomial& rhs);
    OperatorPolynomial& operator*=(cplx s);

    friend OperatorPolynomial operator+(OperatorPolynomial a, const OperatorPolynomial& b) { return a += b; }
    friend OperatorPolynomial operator-(OperatorPolynomial a, const OperatorPolynomial& b) { return a -= b; }
    friend OperatorPolynomial operator*(OperatorPolynomial a, cplx s) { return a *= s; }
    friend OperatorPolynomial operator*(cplx s, OperatorPolynomial a) { return a *= s; }

    bool is_hermitian(double tol = 1e-12) const;
    double max_abs_coeff() const;
    int max_mode() const;
    int max_spin() const;

  private:
    std::map<Monomial, cplx> terms_;
};

/// Hamiltonian plus jump operators with rates absorbed (operator is sqrt(rate)*c).
struct ModelSpec {
    int n_modes = 0;
    int n_spins = 0;
    OperatorPolynomial hamiltonian;
    std::vector<OperatorPolynomial> jumps;

    void validate() const;  // throws std::invalid_argument
};

OperatorPolynomial multiply(const OperatorPolynomial& lhs, const OperatorPolynomial& rhs);
OperatorPolynomial adjoint(const OperatorPolynomial& op);

/// Heisenberg-picture generator: dA/dt = i[H,A] + sum_i (ci† A ci - 1/2 {ci†ci, A}).
OperatorPolynomial adjoint_lindblad(const ModelSpec& model, const OperatorPolynomial& obs);

/// Symbolic moment equations of motion, one polynomial per tracked monomial.
std::vector<std::pair<Monomial, OperatorPolynomial>>
eom_system(const ModelSpec& model, const std::vector<Monomial>& keys);

std::string to_string(const Monomial& m);
std::string to_string(const OperatorPolynomial& op);

}  // namespace pvar
