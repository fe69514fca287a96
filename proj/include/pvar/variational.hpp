#pragma once

#include <Eigen/Dense>
#include <optional>

#include "pvar/models.hpp"
#include "pvar/moments.hpp"

namespace pvar {

using EomSystem = std::vector<std::pair<Monomial, OperatorPolynomial>>;

/// One free real parameter inside an Ansatz. The flat vector stores raw
/// values; unpack applies the transforms (n0 = u^2, r = |u|, Bloch vector
/// radially clamped to the unit ball) so every unpacked ansatz is valid.
struct ParameterSlot {
    enum class Field {
        AlphaRe, AlphaIm,       // Coherent
        N0Sqrt,                 // Thermal / SqueezedThermal (n0 = u^2)
        R, Phi,                 // any squeezed family
        Alpha1Re, Alpha1Im,     // Cat
        Alpha2Re, Alpha2Im,
        ThetaRe, ThetaIm,
        BlochX, BlochY, BlochZ, // spin
        CorrRe, CorrIm,         // correlation table entry
    };
    Field field;
    int mode = -1;       // mode index, or spin index for Bloch fields
    int component = -1;  // component within the mode (boson fields only)
    MomentKey corr_key;  // correlation fields only
};

/// A base ansatz plus the list of free parameters over it.
struct AnsatzTemplate {
    Ansatz base;
    std::vector<ParameterSlot> slots;

    /// Every parameter of every component, spin and correlation entry free.
    static AnsatzTemplate free_all(const Ansatz& base);

    int size() const { return int(slots.size()); }
    Ansatz unpack(const Eigen::VectorXd& v) const;
    Eigen::VectorXd pack(const Ansatz& a) const;
};

struct CostReport {
    double total = 0;
    std::map<MomentKey, cplx> residuals;
    long evaluations = 0;
    bool converged = false;
};

/// Default tracked monomials: all boson moments of total order 1..order,
/// plus sigma- and sigma-z for every spin.
std::vector<Monomial> default_keys(const ModelSpec& model, int order = 2);

/// d<A_n>/dt per tracked key, evaluated on the ansatz. Monomials whose
/// expectation cannot be computed produce an error naming the key.
std::map<MomentKey, cplx> residuals(const Ansatz& ansatz, const EomSystem& system,
                                    int max_order = kDefaultMaxMomentOrder);

/// D = sum_n w_n |residual_n|. Default weights 1/max(1, |<A_n>|) evaluated at
/// the ansatz; uniform weights set every w_n = 1.
CostReport cost(const Ansatz& ansatz, const EomSystem& system, bool uniform_weights = false,
                int max_order = kDefaultMaxMomentOrder);

/// Same norm with caller-supplied weights; keys absent from the map get w = 1.
CostReport cost(const Ansatz& ansatz, const EomSystem& system,
                const std::map<MomentKey, double>& weights,
                int max_order = kDefaultMaxMomentOrder);

struct MinimizeOptions {
    int key_order = 2;
    int multi_starts = 16;
    long budget = 20000;            // cost evaluations per start
    std::uint64_t seed = 0;
    double improvement_tol = 1e-12; // stop when D improves less than this ...
    int stall_iterations = 50;      // ... over this many iterations
    bool uniform_weights = false;
    double restart_window = 10.0;   // report restarts within this factor of best D
    double start_spread = 1.0;      // multi-start perturbation scale
    double simplex_scale = 0.1;     // initial simplex edge (absolute floor and relative factor)
    bool polish = true;             // Levenberg-Marquardt refinement of the best start
    std::optional<std::vector<Monomial>> keys;  // overrides default_keys
};

struct MinimizeResult {
    Ansatz best;
    CostReport report;
    struct Restart {
        int seed_index = 0;
        double total = 0;
        Eigen::VectorXd params;
    };
    std::vector<Restart> restarts;  // within restart_window of best, sorted by D then seed
};

MinimizeResult minimize(const ModelSpec& model, const AnsatzTemplate& family,
                        const MinimizeOptions& options = {});

/// One fixed point of the mean-field (Maxwell-Bloch) equations of the
/// driven Jaynes-Cummings model.
struct MeanFieldFixedPoint {
    cplx a;
    cplx sigma_minus;
    double sigma_z = -1;
    double intensity = 0;  // |<a>|^2
};

struct MeanFieldPoint {
    double p = 0;
    std::vector<MeanFieldFixedPoint> fixed_points;  // sorted by intensity
    bool bistable = false;
};

/// All real fixed points per drive value, via the cubic in |<a>|^2.
std::vector<MeanFieldPoint> maxwell_bloch_fixed_points(const JcParams& params,
                                                       const std::vector<double>& p_sweep);

struct BranchChoice {
    double p = 0;
    int chosen = 0;              // index into fixed_points
    std::vector<double> norms;   // residual norm D per fixed point
    bool tie = false;
};

struct BranchSelection {
    std::vector<BranchChoice> choices;
    std::optional<double> crossing;  // drive where the selected branch switches
};

/// Pins a coherent (x) Bloch ansatz at each fixed point and compares order-2
/// residual norms with each equation normalized by the magnitude of its own
/// terms, so branches of different amplitude compete on cancellation quality.
/// Ties go to the lower-intensity branch and are flagged.
BranchSelection branch_select(const JcParams& params, const std::vector<MeanFieldPoint>& sweep);

}  // namespace pvar
