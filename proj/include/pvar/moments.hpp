#pragma once

#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "pvar/algebra.hpp"

namespace pvar {

/// Address of one expectation value: a normal-ordered monomial.
using MomentKey = Monomial;

inline constexpr int kDefaultMaxMomentOrder = 16;

struct Coherent {
    cplx alpha;
};
struct Thermal {
    double n0;  // >= 0
};
struct Fock {
    int l;  // >= 0
};
struct Squeezed {
    double r;    // >= 0
    double phi;  // canonicalized to [0, 2pi)
};
struct Cat {
    cplx alpha1, alpha2, theta;  // A(|α1> + Θ|α2>), A computed on demand
};
struct SqueezedThermal {
    double n0, r, phi;
};
struct SqueezedFock {
    int l;
    double r, phi;
};

/// One P-distribution family with its parameters.
class ComponentState {
  public:
    using Variant = std::variant<Coherent, Thermal, Fock, Squeezed, Cat, SqueezedThermal, SqueezedFock>;

    ComponentState(Variant v);  // validates and canonicalizes

    const Variant& value() const { return value_; }
    bool is_cat() const { return std::holds_alternative<Cat>(value_); }

    template <typename T>
    const T* get_if() const {
        return std::get_if<T>(&value_);
    }

  private:
    Variant value_;
};

/// Convolution of component states for one mode (order-independent).
struct ModeAnsatz {
    std::vector<ComponentState> components;  // nonempty, at most one Cat

    void validate() const;
};

/// rho_spin = (1 + x σx + y σy + z σz) / 2
struct SpinAnsatz {
    double x = 0, y = 0, z = -1;

    void validate() const;  // x²+y²+z² <= 1
    cplx expectation(SpinOp op) const;
};

struct Ansatz {
    std::vector<ModeAnsatz> modes;
    std::vector<SpinAnsatz> spins;
    // Explicit correlation corrections; keys must touch >= 2 modes or spins.
    std::map<MomentKey, cplx> correlations;

    void validate() const;
};

/// Normal-ordered moment <a†^p a^q> of a single component state.
cplx component_moment(const ComponentState& state, int p, int q,
                      int max_order = kDefaultMaxMomentOrder);

/// Moment of a convolved distribution via the double binomial sum.
cplx convolve_moment(std::span<const ComponentState> components, int p, int q,
                     int max_order = kDefaultMaxMomentOrder);
cplx convolve_moment(const std::vector<ComponentState>& components, int p, int q,
                     int max_order = kDefaultMaxMomentOrder);

/// Full ansatz moment: product over modes and spins plus the stored delta correction.
cplx ansatz_moment(const Ansatz& ansatz, const MomentKey& key,
                   int max_order = kDefaultMaxMomentOrder);

struct SqueezingEstimate {
    double r = 0;
    double phi = 0;
    double v_min = 0.5;  // minimal symmetrized quadrature variance
};

/// Effective squeezing from centered second moments <a>, <a†a>, <aa>.
SqueezingEstimate squeezing_of(cplx mean, cplx n_moment, cplx aa_moment);

/// Squeezing of one mode of an ansatz.
SqueezingEstimate squeezing_of(const Ansatz& ansatz, int mode);

}  // namespace pvar
