#include "pvar/variational.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>

namespace pvar {

using Field = ParameterSlot::Field;

AnsatzTemplate AnsatzTemplate::free_all(const Ansatz& base) {
    AnsatzTemplate tmpl;
    tmpl.base = base;
    for (int m = 0; m < int(base.modes.size()); ++m) {
        for (int c = 0; c < int(base.modes[m].components.size()); ++c) {
            const auto& v = base.modes[m].components[c].value();
            auto add = [&](Field f) { tmpl.slots.push_back({f, m, c, {}}); };
            if (std::holds_alternative<Coherent>(v)) {
                add(Field::AlphaRe);
                add(Field::AlphaIm);
            } else if (std::holds_alternative<Thermal>(v)) {
                add(Field::N0Sqrt);
            } else if (std::holds_alternative<Squeezed>(v)) {
                add(Field::R);
                add(Field::Phi);
            } else if (std::holds_alternative<Cat>(v)) {
                add(Field::Alpha1Re);
                add(Field::Alpha1Im);
                add(Field::Alpha2Re);
                add(Field::Alpha2Im);
                add(Field::ThetaRe);
                add(Field::ThetaIm);
            } else if (std::holds_alternative<SqueezedThermal>(v)) {
                add(Field::N0Sqrt);
                add(Field::R);
                add(Field::Phi);
            } else if (std::holds_alternative<SqueezedFock>(v)) {
                add(Field::R);
                add(Field::Phi);
            }
            // Fock: the level is discrete, never a free parameter
        }
    }
    for (int s = 0; s < int(base.spins.size()); ++s) {
        tmpl.slots.push_back({Field::BlochX, s, -1, {}});
        tmpl.slots.push_back({Field::BlochY, s, -1, {}});
        tmpl.slots.push_back({Field::BlochZ, s, -1, {}});
    }
    for (const auto& [key, val] : base.correlations) {
        tmpl.slots.push_back({Field::CorrRe, -1, -1, key});
        tmpl.slots.push_back({Field::CorrIm, -1, -1, key});
    }
    return tmpl;
}

Ansatz AnsatzTemplate::unpack(const Eigen::VectorXd& v) const {
    if (v.size() != long(slots.size()))
        throw std::invalid_argument("parameter vector size mismatch");
    Ansatz out = base;
    for (long i = 0; i < v.size(); ++i) {
        const auto& slot = slots[i];
        double x = v(i);
        if (slot.field == Field::BlochX || slot.field == Field::BlochY ||
            slot.field == Field::BlochZ) {
            auto& spin = out.spins.at(slot.mode);
            if (slot.field == Field::BlochX) spin.x = x;
            else if (slot.field == Field::BlochY) spin.y = x;
            else spin.z = x;
            continue;
        }
        if (slot.field == Field::CorrRe || slot.field == Field::CorrIm) {
            auto it = out.correlations.find(slot.corr_key);
            if (it == out.correlations.end())
                throw std::invalid_argument("correlation slot key missing from base ansatz");
            if (slot.field == Field::CorrRe) it->second.real(x);
            else it->second.imag(x);
            continue;
        }
        auto& comp = out.modes.at(slot.mode).components.at(slot.component);
        ComponentState::Variant var = comp.value();
        std::visit(
            [&](auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Coherent>) {
                    if (slot.field == Field::AlphaRe) s.alpha.real(x);
                    else s.alpha.imag(x);
                } else if constexpr (std::is_same_v<T, Thermal>) {
                    s.n0 = x * x;
                } else if constexpr (std::is_same_v<T, Squeezed>) {
                    if (slot.field == Field::R) s.r = std::abs(x);
                    else s.phi = x;
                } else if constexpr (std::is_same_v<T, Cat>) {
                    auto set = [&](cplx& c, bool re) {
                        if (re) c.real(x);
                        else c.imag(x);
                    };
                    switch (slot.field) {
                        case Field::Alpha1Re: set(s.alpha1, true); break;
                        case Field::Alpha1Im: set(s.alpha1, false); break;
                        case Field::Alpha2Re: set(s.alpha2, true); break;
                        case Field::Alpha2Im: set(s.alpha2, false); break;
                        case Field::ThetaRe: set(s.theta, true); break;
                        default: set(s.theta, false); break;
                    }
                } else if constexpr (std::is_same_v<T, SqueezedThermal>) {
                    if (slot.field == Field::N0Sqrt) s.n0 = x * x;
                    else if (slot.field == Field::R) s.r = std::abs(x);
                    else s.phi = x;
                } else if constexpr (std::is_same_v<T, SqueezedFock>) {
                    if (slot.field == Field::R) s.r = std::abs(x);
                    else s.phi = x;
                }
            },
            var);
        comp = ComponentState(var);
    }
    // radial clamp keeps every Bloch vector physical
    for (auto& spin : out.spins) {
        double norm = std::sqrt(spin.x * spin.x + spin.y * spin.y + spin.z * spin.z);
        if (norm > 1.0) {
            spin.x /= norm;
            spin.y /= norm;
            spin.z /= norm;
        }
    }
    return out;
}

Eigen::VectorXd AnsatzTemplate::pack(const Ansatz& a) const {
    Eigen::VectorXd v(long(slots.size()));
    for (long i = 0; i < v.size(); ++i) {
        const auto& slot = slots[i];
        if (slot.field == Field::BlochX || slot.field == Field::BlochY ||
            slot.field == Field::BlochZ) {
            const auto& spin = a.spins.at(slot.mode);
            v(i) = slot.field == Field::BlochX ? spin.x
                 : slot.field == Field::BlochY ? spin.y
                                               : spin.z;
            continue;
        }
        if (slot.field == Field::CorrRe || slot.field == Field::CorrIm) {
            cplx c = a.correlations.at(slot.corr_key);
            v(i) = slot.field == Field::CorrRe ? c.real() : c.imag();
            continue;
        }
        const auto& var = a.modes.at(slot.mode).components.at(slot.component).value();
        v(i) = std::visit(
            [&](const auto& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Coherent>) {
                    return slot.field == Field::AlphaRe ? s.alpha.real() : s.alpha.imag();
                } else if constexpr (std::is_same_v<T, Thermal>) {
                    return std::sqrt(s.n0);
                } else if constexpr (std::is_same_v<T, Squeezed>) {
                    return slot.field == Field::R ? s.r : s.phi;
                } else if constexpr (std::is_same_v<T, Cat>) {
                    switch (slot.field) {
                        case Field::Alpha1Re: return s.alpha1.real();
                        case Field::Alpha1Im: return s.alpha1.imag();
                        case Field::Alpha2Re: return s.alpha2.real();
                        case Field::Alpha2Im: return s.alpha2.imag();
                        case Field::ThetaRe: return s.theta.real();
                        default: return s.theta.imag();
                    }
                } else if constexpr (std::is_same_v<T, SqueezedThermal>) {
                    return slot.field == Field::N0Sqrt ? std::sqrt(s.n0)
                         : slot.field == Field::R      ? s.r
                                                       : s.phi;
                } else if constexpr (std::is_same_v<T, SqueezedFock>) {
                    return slot.field == Field::R ? s.r : s.phi;
                } else {
                    return 0.0;
                }
            },
            var);
    }
    return v;
}

std::vector<Monomial> default_keys(const ModelSpec& model, int order) {
    // All monomials of total order 1..order: ladder operators contribute their
    // exponents, each spin operator contributes one. Mixed mode-spin keys are
    // essential: their equations are the ones a factorized mean-field fixed
    // point cannot satisfy.
    std::vector<Monomial> keys;
    std::vector<BosonMonomial::Factor> boson;
    std::vector<std::pair<int, SpinOp>> spin;
    auto total = [&]() {
        int t = int(spin.size());
        for (const auto& f : boson) t += f.p + f.q;
        return t;
    };
    std::function<void(int)> rec_spin = [&](int site) {
        if (site == model.n_spins) {
            if (total() > 0) {
                Monomial m;
                m.boson.factors = boson;
                m.spin.factors = spin;
                keys.push_back(m);
            }
            return;
        }
        rec_spin(site + 1);
        if (total() < order) {
            for (SpinOp op : {SpinOp::Plus, SpinOp::Minus, SpinOp::Z}) {
                spin.emplace_back(site, op);
                rec_spin(site + 1);
                spin.pop_back();
            }
        }
    };
    std::function<void(int)> rec_mode = [&](int mode) {
        if (mode == model.n_modes) {
            rec_spin(0);
            return;
        }
        int budget = order - total();
        for (int p = 0; p <= budget; ++p)
            for (int q = 0; p + q <= budget; ++q) {
                if (p + q > 0) boson.push_back({mode, p, q});
                rec_mode(mode + 1);
                if (p + q > 0) boson.pop_back();
            }
    };
    rec_mode(0);
    std::sort(keys.begin(), keys.end());
    return keys;
}

std::map<MomentKey, cplx> residuals(const Ansatz& ansatz, const EomSystem& system,
                                    int max_order) {
    std::map<MomentKey, cplx> out;
    for (const auto& [key, rhs] : system) {
        cplx value = 0;
        for (const auto& [mono, coeff] : rhs.terms()) {
            try {
                value += coeff * ansatz_moment(ansatz, mono, max_order);
            } catch (const std::domain_error& e) {
                throw std::runtime_error("cannot close the equation for " + to_string(key) +
                                         ": " + e.what() + " (monomial " + to_string(mono) + ")");
            }
        }
        out[key] = value;
    }
    return out;
}

CostReport cost(const Ansatz& ansatz, const EomSystem& system, bool uniform_weights,
                int max_order) {
    CostReport report;
    report.residuals = residuals(ansatz, system, max_order);
    for (const auto& [key, res] : report.residuals) {
        double w = 1.0;
        if (!uniform_weights)
            w = 1.0 / std::max(1.0, std::abs(ansatz_moment(ansatz, key, max_order)));
        report.total += w * std::abs(res);
    }
    report.evaluations = 1;
    return report;
}

CostReport cost(const Ansatz& ansatz, const EomSystem& system,
                const std::map<MomentKey, double>& weights, int max_order) {
    CostReport report;
    report.residuals = residuals(ansatz, system, max_order);
    for (const auto& [key, res] : report.residuals) {
        auto it = weights.find(key);
        report.total += (it == weights.end() ? 1.0 : it->second) * std::abs(res);
    }
    report.evaluations = 1;
    return report;
}

namespace {

struct NelderMeadResult {
    Eigen::VectorXd x;
    double f = 0;
    long evaluations = 0;
    bool converged = false;
};

template <typename F>
NelderMeadResult nelder_mead_once(F&& eval, long& evals, const Eigen::VectorXd& x0,
                                  const Eigen::VectorXd& scale, long budget,
                                  double improvement_tol, int stall_iterations) {
    const int n = int(x0.size());

    std::vector<Eigen::VectorXd> pts;
    std::vector<double> vals;
    pts.push_back(x0);
    vals.push_back(eval(x0));
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd p = x0;
        p(i) += scale(i);
        pts.push_back(p);
        vals.push_back(eval(p));
    }

    auto order = [&]() {
        std::vector<int> idx(n + 1);
        for (int i = 0; i <= n; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] < vals[b]; });
        std::vector<Eigen::VectorXd> p2(n + 1);
        std::vector<double> v2(n + 1);
        for (int i = 0; i <= n; ++i) {
            p2[i] = pts[idx[i]];
            v2[i] = vals[idx[i]];
        }
        pts = std::move(p2);
        vals = std::move(v2);
    };
    order();

    double stall_best = vals[0];
    int stall = 0;
    bool converged = false;
    while (evals < budget) {
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += pts[i];
        centroid /= double(n);

        Eigen::VectorXd xr = centroid + (centroid - pts[n]);
        double fr = eval(xr);
        if (fr < vals[0]) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[n]);
            double fe = eval(xe);
            if (fe < fr) {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if (fr < vals[n - 1]) {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            bool outside = fr < vals[n];
            Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                         : Eigen::VectorXd(centroid - 0.5 * (centroid - pts[n]));
            double fc = eval(xc);
            if (fc < std::min(fr, vals[n])) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
                    vals[i] = eval(pts[i]);
                }
            }
        }
        order();

        if (stall_best - vals[0] < improvement_tol) {
            if (++stall >= stall_iterations) {
                converged = true;
                break;
            }
        } else {
            stall = 0;
            stall_best = vals[0];
        }
    }

    return {pts[0], vals[0], evals, converged};
}

/// Repeated simplex descent: restart a fresh, shrinking simplex around the
/// best point until the budget runs out or a restart stops improving.
template <typename F>
NelderMeadResult nelder_mead(F&& objective, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& scale, long budget,
                             double improvement_tol, int stall_iterations) {
    long evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        double f = objective(x);
        return std::isfinite(f) ? f : 1e300;
    };

    NelderMeadResult best =
        nelder_mead_once(eval, evals, x0, scale, budget, improvement_tol, stall_iterations);
    double shrink = 0.3;
    while (evals < budget) {
        Eigen::VectorXd s = shrink * scale;
        NelderMeadResult next = nelder_mead_once(eval, evals, best.x, s, budget,
                                                 improvement_tol, stall_iterations);
        bool improved = next.f < best.f - improvement_tol;
        if (next.f < best.f) {
            next.converged = next.converged || best.converged;
            best = next;
        }
        if (!improved) break;
        shrink *= 0.3;
    }
    best.evaluations = evals;
    return best;
}

// Levenberg-Marquardt on the weighted residual vector (stacked re/im parts).
// The moment equations are smooth in the parameters, so a Gauss-Newton model
// converges far faster than the simplex near a root; the simplex provides the
// global search, this provides the final digits.
Eigen::VectorXd lm_refine(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& resid,
                          Eigen::VectorXd x, int max_iterations, double tol, long& evals) {
    auto safe = [&](const Eigen::VectorXd& v) -> std::optional<Eigen::VectorXd> {
        ++evals;
        Eigen::VectorXd r;
        try {
            r = resid(v);
        } catch (const std::exception&) {
            return std::nullopt;
        }
        if (!r.allFinite()) return std::nullopt;
        return r;
    };

    auto r0 = safe(x);
    if (!r0) return x;
    double f = r0->squaredNorm();
    const int n = int(x.size()), m = int(r0->size());
    double lambda = 1e-3;

    for (int iter = 0; iter < max_iterations; ++iter) {
        Eigen::MatrixXd jac(m, n);
        for (int j = 0; j < n; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
            Eigen::VectorXd xp = x;
            xp(j) += h;
            auto rp = safe(xp);
            if (!rp) return x;
            jac.col(j) = (*rp - *r0) / h;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * *r0;

        bool accepted = false;
        for (int attempt = 0; attempt < 8; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            for (int j = 0; j < n; ++j) damped(j, j) += lambda * std::max(jtj(j, j), 1e-12);
            const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
            if (!step.allFinite()) break;
            const Eigen::VectorXd xn = x + step;
            auto rn = safe(xn);
            if (rn && rn->squaredNorm() < f) {
                const double improvement = f - rn->squaredNorm();
                x = xn;
                r0 = rn;
                f = rn->squaredNorm();
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                if (improvement < tol * std::max(1.0, f)) return x;
                break;
            }
            lambda *= 10;
        }
        if (!accepted || f < tol * tol) break;
    }
    return x;
}

}  // namespace

MinimizeResult minimize(const ModelSpec& model, const AnsatzTemplate& family,
                        const MinimizeOptions& options) {
    std::vector<Monomial> keys =
        options.keys ? *options.keys : default_keys(model, options.key_order);
    EomSystem system = eom_system(model, keys);

    const Eigen::VectorXd x0 = family.pack(family.base);
    const int n = family.size();
    if (n == 0) {
        CostReport report = cost(family.base, system, options.uniform_weights);
        report.converged = true;
        return {family.base, report, {{0, report.total, x0}}};
    }

    Eigen::VectorXd scale(n);
    const double s = options.simplex_scale;
    for (int i = 0; i < n; ++i) scale(i) = std::max(s, s * std::abs(x0(i)));

    long total_evals = 0;
    auto objective = [&](const Eigen::VectorXd& v) {
        return cost(family.unpack(v), system, options.uniform_weights).total;
    };

    struct StartResult {
        NelderMeadResult nm;
        int seed_index = 0;
    };
    std::vector<StartResult> results(std::max(1, options.multi_starts));

#pragma omp parallel for schedule(dynamic)
    for (int start = 0; start < int(results.size()); ++start) {
        Eigen::VectorXd xs = x0;
        if (start > 0) {
            // deterministic per-start perturbation
            std::mt19937_64 rng(options.seed * 0x9e3779b97f4a7c15ULL + start);
            std::normal_distribution<double> gauss(0.0, 1.0);
            for (int i = 0; i < n; ++i)
                xs(i) += gauss(rng) * options.start_spread * std::max(0.5, std::abs(x0(i)));
        }
        results[start] = {nelder_mead(objective, xs, scale, options.budget,
                                      options.improvement_tol, options.stall_iterations),
                          start};
    }

    std::stable_sort(results.begin(), results.end(), [](const StartResult& a, const StartResult& b) {
        if (a.nm.f != b.nm.f) return a.nm.f < b.nm.f;
        return a.seed_index < b.seed_index;
    });

    if (options.polish) {
        // Weights frozen at the incumbent so the polish target is a fixed
        // least-squares problem consistent with the reported norm.
        const Ansatz incumbent = family.unpack(results[0].nm.x);
        std::vector<double> weights(keys.size(), 1.0);
        if (!options.uniform_weights)
            for (size_t k = 0; k < keys.size(); ++k) {
                double scale_k = 1.0;
                try {
                    scale_k = std::max(1.0, std::abs(ansatz_moment(incumbent, keys[k])));
                } catch (const std::exception&) {
                }
                weights[k] = 1.0 / scale_k;
            }
        auto stacked = [&](const Eigen::VectorXd& v) {
            const Ansatz a = family.unpack(v);
            auto res = residuals(a, system);
            Eigen::VectorXd r(2 * keys.size());
            for (size_t k = 0; k < keys.size(); ++k) {
                const cplx value = res.at(keys[k]);
                r(2 * k) = weights[k] * value.real();
                r(2 * k + 1) = weights[k] * value.imag();
            }
            return r;
        };
        long lm_evals = 0;
        const Eigen::VectorXd polished =
            lm_refine(stacked, results[0].nm.x, 80, options.improvement_tol, lm_evals);
        double f = 1e300;
        try {
            const double v = objective(polished);
            if (std::isfinite(v)) f = v;
        } catch (const std::exception&) {
        }
        results[0].nm.evaluations += lm_evals;
        if (f < results[0].nm.f) {
            results[0].nm.x = polished;
            results[0].nm.f = f;
        }
    }

    MinimizeResult out;
    out.best = family.unpack(results[0].nm.x);
    out.report = cost(out.best, system, options.uniform_weights);
    for (const auto& r : results) total_evals += r.nm.evaluations;
    out.report.evaluations = total_evals;
    out.report.converged = results[0].nm.converged;

    double window = results[0].nm.f <= 0 ? 1e-300 : options.restart_window * results[0].nm.f;
    for (const auto& r : results) {
        if (r.nm.f <= std::max(window, results[0].nm.f))
            out.restarts.push_back({r.seed_index, r.nm.f, r.nm.x});
    }
    return out;
}

std::vector<MeanFieldPoint> maxwell_bloch_fixed_points(const JcParams& params,
                                                       const std::vector<double>& p_sweep) {
    const cplx i1{0, 1};
    const cplx d{params.gamma / 2, params.delta_a};   // atomic response
    const cplx d0{params.kappa, params.delta_c};      // cavity response
    const double c_sat = 2 * params.g * params.g / std::norm(d);  // saturation scale
    const cplx b = params.g * params.g / d;
    const cplx u = d0 + b;
    const cplx v = d0 * c_sat;

    std::vector<MeanFieldPoint> sweep;
    sweep.reserve(p_sweep.size());
    for (double p : p_sweep) {
        // n |u + v n|^2 = p^2 (1 + C n)^2, expanded as a real cubic in n
        const double p2 = p * p;
        std::array<double, 4> coeff = {
            std::norm(v),
            2 * (u * std::conj(v)).real() - p2 * c_sat * c_sat,
            std::norm(u) - 2 * p2 * c_sat,
            -p2,
        };  // coeff[0] n^3 + ... + coeff[3]

        // strip vanishing leading coefficients, then companion-matrix roots
        std::vector<double> poly(coeff.begin(), coeff.end());
        double head = std::max({std::abs(coeff[0]), std::abs(coeff[1]), std::abs(coeff[2]),
                                std::abs(coeff[3]), 1e-300});
        while (poly.size() > 1 && std::abs(poly.front()) < 1e-14 * head) poly.erase(poly.begin());

        std::vector<double> roots;
        int deg = int(poly.size()) - 1;
        if (deg >= 1) {
            Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
            for (int k = 0; k < deg; ++k) companion(0, k) = -poly[k + 1] / poly[0];
            for (int k = 1; k < deg; ++k) companion(k, k - 1) = 1.0;
            Eigen::EigenSolver<Eigen::MatrixXd> solver(companion);
            for (int k = 0; k < deg; ++k) {
                cplx root = solver.eigenvalues()(k);
                double mag = std::max(1.0, std::abs(root));
                if (std::abs(root.imag()) > 1e-9 * mag) continue;
                double n = root.real();
                if (n < -1e-12) continue;
                roots.push_back(std::max(0.0, n));
            }
        } else {
            roots.push_back(0.0);
        }
        std::sort(roots.begin(), roots.end());
        roots.erase(std::unique(roots.begin(), roots.end(),
                                [](double x, double y) {
                                    return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x));
                                }),
                    roots.end());

        MeanFieldPoint point;
        point.p = p;
        for (double n : roots) {
            MeanFieldFixedPoint fp;
            fp.intensity = n;
            fp.sigma_z = -1.0 / (1.0 + c_sat * n);
            fp.a = -i1 * p / (d0 + b / (1.0 + c_sat * n));
            fp.sigma_minus = i1 * params.g * fp.a * fp.sigma_z / d;
            point.fixed_points.push_back(fp);
        }
        point.bistable = point.fixed_points.size() > 1;
        sweep.push_back(point);
    }
    return sweep;
}

BranchSelection branch_select(const JcParams& params, const std::vector<MeanFieldPoint>& sweep) {
    auto pinned = [&](const MeanFieldFixedPoint& fp) {
        Ansatz a;
        a.modes.push_back({{ComponentState(Coherent{fp.a})}});
        SpinAnsatz spin;
        // <sigma-> = (x - i y)/2, <sigma-z> = z
        spin.x = 2 * fp.sigma_minus.real();
        spin.y = -2 * fp.sigma_minus.imag();
        spin.z = fp.sigma_z;
        double norm = std::sqrt(spin.x * spin.x + spin.y * spin.y + spin.z * spin.z);
        if (norm > 1.0) {
            spin.x /= norm;
            spin.y /= norm;
            spin.z /= norm;
        }
        a.spins.push_back(spin);
        return a;
    };

    BranchSelection out;
    for (const auto& point : sweep) {
        JcParams model_params = params;
        model_params.p = point.p;
        ModelSpec model = jaynes_cummings(model_params);
        EomSystem system = eom_system(model, default_keys(model, 2));

        BranchChoice choice;
        choice.p = point.p;
        for (const auto& fp : point.fixed_points) {
            // Relative per-equation norm: each residual is divided by the
            // summed magnitude of the terms that should cancel. A fixed-scale
            // norm grows with the branch amplitude and would always favor the
            // dim branch; this normalization compares cancellation quality.
            Ansatz a = pinned(fp);
            auto res = residuals(a, system);
            double total = 0;
            for (const auto& [key, rhs] : system) {
                double term_sum = 0;
                for (const auto& [m, c] : rhs.terms())
                    term_sum += std::abs(c * ansatz_moment(a, m));
                total += std::abs(res.at(key)) / std::max(1e-12, term_sum);
            }
            choice.norms.push_back(total);
        }
        int best = 0;
        for (int k = 1; k < int(choice.norms.size()); ++k) {
            double diff = choice.norms[k] - choice.norms[best];
            double tol = 1e-12 * std::max(1.0, std::abs(choice.norms[best]));
            if (diff < -tol) best = k;
            else if (std::abs(diff) <= tol) choice.tie = true;  // lower-intensity index kept
        }
        choice.chosen = best;
        out.choices.push_back(choice);
    }

    // crossing: midpoint of the first consecutive pair where the selected
    // intensity jumps between branches inside a multi-solution window
    for (size_t k = 1; k < out.choices.size(); ++k) {
        if (sweep[k - 1].fixed_points.empty() || sweep[k].fixed_points.empty()) continue;
        double ni = sweep[k - 1].fixed_points[out.choices[k - 1].chosen].intensity;
        double nj = sweep[k].fixed_points[out.choices[k].chosen].intensity;
        bool jump = std::max(ni, nj) > 3.0 * std::min(ni, nj) + 1e-9;
        bool multi = sweep[k - 1].fixed_points.size() > 1 || sweep[k].fixed_points.size() > 1;
        if (jump && multi) {
            out.crossing = 0.5 * (out.choices[k - 1].p + out.choices[k].p);
            break;
        }
    }
    return out;
}

}  // namespace pvar
