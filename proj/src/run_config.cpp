#include "pvar/run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "pvar/oracle.hpp"

namespace pvar {

namespace {

using nlohmann::json;

std::string join_path(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

void check_allowed(const json& obj, const std::string& path,
                   std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(path, "expected an object");
    for (const auto& [key, value] : obj.items())
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError(join_path(path, key), "unknown field");
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(join_path(path, key), "expected a number");
    return v.get<double>();
}

long get_integer(const json& obj, const std::string& path, const char* key, long fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(join_path(path, key), "expected an integer");
    return v.get<long>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(join_path(path, key), "expected a boolean");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(join_path(path, key), "expected a string");
    return v.get<std::string>();
}

cplx get_complex(const json& v, const std::string& path) {
    if (v.is_number()) return cplx(v.get<double>(), 0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return cplx(v[0].get<double>(), v[1].get<double>());
    throw ConfigError(path, "expected a number or [re, im] pair");
}

cplx get_complex(const json& obj, const std::string& path, const char* key, cplx fallback) {
    if (!obj.contains(key)) return fallback;
    return get_complex(obj.at(key), join_path(path, key));
}

// ---------------------------------------------------------------------------
// model section

JcParams parse_jc(const json& p, const std::string& path) {
    check_allowed(p, path, {"delta_c", "delta_a", "g", "p", "kappa", "gamma"});
    JcParams out;
    out.delta_c = get_number(p, path, "delta_c", 0);
    out.delta_a = get_number(p, path, "delta_a", 0);
    out.g = get_number(p, path, "g", 0);
    out.p = get_number(p, path, "p", 0);
    out.kappa = get_number(p, path, "kappa", 0);
    out.gamma = get_number(p, path, "gamma", 0);
    return out;
}

RydbergParams parse_rydberg(const json& p, const std::string& path) {
    check_allowed(p, path,
                  {"delta_c", "delta_e", "delta_r", "g", "omega", "p", "kappa_r", "kappa_i",
                   "gamma_c", "gamma_e", "gamma_r", "n_atoms"});
    RydbergParams out;
    out.delta_c = get_number(p, path, "delta_c", 0);
    out.delta_e = get_number(p, path, "delta_e", 0);
    out.delta_r = get_number(p, path, "delta_r", 0);
    out.g = get_number(p, path, "g", 0);
    out.omega = get_number(p, path, "omega", 0);
    out.p = get_number(p, path, "p", 0);
    out.kappa_r = get_number(p, path, "kappa_r", 0);
    out.kappa_i = get_number(p, path, "kappa_i", 0);
    out.gamma_c = get_number(p, path, "gamma_c", 0);
    out.gamma_e = get_number(p, path, "gamma_e", 0);
    out.gamma_r = get_number(p, path, "gamma_r", 0);
    out.n_atoms = get_number(p, path, "n_atoms", 1);
    return out;
}

OperatorPolynomial parse_polynomial(const json& terms, const std::string& path) {
    if (!terms.is_array()) throw ConfigError(path, "expected an array of terms");
    OperatorPolynomial poly;
    for (size_t t = 0; t < terms.size(); ++t) {
        const std::string tpath = path + "[" + std::to_string(t) + "]";
        check_allowed(terms[t], tpath, {"coeff", "bosons", "spins"});
        const cplx coeff = get_complex(terms[t], tpath, "coeff", 1.0);
        Monomial m;
        if (terms[t].contains("bosons")) {
            const auto& bosons = terms[t].at("bosons");
            if (!bosons.is_array()) throw ConfigError(join_path(tpath, "bosons"), "expected an array");
            BosonMonomial b;
            for (const auto& f : bosons) {
                if (!f.is_array() || f.size() != 3)
                    throw ConfigError(join_path(tpath, "bosons"), "expected [mode, p, q] triples");
                BosonMonomial single = BosonMonomial::single(f[0].get<int>(), f[1].get<int>(),
                                                             f[2].get<int>());
                if (!single.factors.empty()) b.factors.push_back(single.factors[0]);
            }
            std::sort(b.factors.begin(), b.factors.end());
            m.boson = b;
        }
        if (terms[t].contains("spins")) {
            const auto& spins = terms[t].at("spins");
            if (!spins.is_array()) throw ConfigError(join_path(tpath, "spins"), "expected an array");
            SpinMonomial s;
            for (const auto& f : spins) {
                if (!f.is_array() || f.size() != 2 || !f[1].is_string())
                    throw ConfigError(join_path(tpath, "spins"), "expected [site, \"+|-|z\"] pairs");
                const std::string op = f[1].get<std::string>();
                SpinOp kind;
                if (op == "+") kind = SpinOp::Plus;
                else if (op == "-") kind = SpinOp::Minus;
                else if (op == "z") kind = SpinOp::Z;
                else throw ConfigError(join_path(tpath, "spins"), "spin operator must be +, - or z");
                s.factors.emplace_back(f[0].get<int>(), kind);
            }
            std::sort(s.factors.begin(), s.factors.end());
            m.spin = s;
        }
        poly.add_term(m, coeff);
    }
    return poly;
}

ModelSpec parse_custom(const json& p, const std::string& path) {
    check_allowed(p, path, {"n_modes", "n_spins", "hamiltonian", "jumps"});
    ModelSpec model;
    model.n_modes = int(get_integer(p, path, "n_modes", 1));
    model.n_spins = int(get_integer(p, path, "n_spins", 0));
    if (p.contains("hamiltonian"))
        model.hamiltonian = parse_polynomial(p.at("hamiltonian"), join_path(path, "hamiltonian"));
    if (p.contains("jumps")) {
        const auto& jumps = p.at("jumps");
        if (!jumps.is_array()) throw ConfigError(join_path(path, "jumps"), "expected an array");
        for (size_t i = 0; i < jumps.size(); ++i)
            model.jumps.push_back(
                parse_polynomial(jumps[i], join_path(path, "jumps") + "[" + std::to_string(i) + "]"));
    }
    try {
        model.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    return model;
}

// ---------------------------------------------------------------------------
// ansatz section

ComponentState parse_component(const json& c, const std::string& path) {
    check_allowed(c, path,
                  {"type", "alpha", "n0", "l", "r", "phi", "alpha1", "alpha2", "theta"});
    const std::string type = get_string(c, path, "type", "");
    try {
        if (type == "coherent") return ComponentState(Coherent{get_complex(c, path, "alpha", 0.0)});
        if (type == "thermal") return ComponentState(Thermal{get_number(c, path, "n0", 0)});
        if (type == "fock") return ComponentState(Fock{int(get_integer(c, path, "l", 0))});
        if (type == "squeezed")
            return ComponentState(Squeezed{get_number(c, path, "r", 0), get_number(c, path, "phi", 0)});
        if (type == "cat")
            return ComponentState(Cat{get_complex(c, path, "alpha1", 0.0),
                                      get_complex(c, path, "alpha2", 0.0),
                                      get_complex(c, path, "theta", 1.0)});
        if (type == "squeezed_thermal")
            return ComponentState(SqueezedThermal{get_number(c, path, "n0", 0),
                                                  get_number(c, path, "r", 0),
                                                  get_number(c, path, "phi", 0)});
        if (type == "squeezed_fock")
            return ComponentState(SqueezedFock{int(get_integer(c, path, "l", 0)),
                                               get_number(c, path, "r", 0),
                                               get_number(c, path, "phi", 0)});
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(join_path(path, "type"),
                      "expected one of coherent, thermal, fock, squeezed, cat, squeezed_thermal, "
                      "squeezed_fock");
}

void parse_ansatz(const json& a, const std::string& path, RunConfig& config) {
    check_allowed(a, path, {"modes", "spins", "correlation_order"});
    config.ansatz_given = true;
    if (a.contains("modes")) {
        const auto& modes = a.at("modes");
        if (!modes.is_array()) throw ConfigError(join_path(path, "modes"), "expected an array");
        for (size_t m = 0; m < modes.size(); ++m) {
            const std::string mpath = join_path(path, "modes") + "[" + std::to_string(m) + "]";
            if (!modes[m].is_array()) throw ConfigError(mpath, "expected an array of components");
            ModeAnsatz mode;
            for (size_t c = 0; c < modes[m].size(); ++c)
                mode.components.push_back(
                    parse_component(modes[m][c], mpath + "[" + std::to_string(c) + "]"));
            try {
                mode.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(mpath, e.what());
            }
            config.ansatz.modes.push_back(std::move(mode));
        }
    }
    if (a.contains("spins")) {
        const auto& spins = a.at("spins");
        if (!spins.is_array()) throw ConfigError(join_path(path, "spins"), "expected an array");
        for (size_t s = 0; s < spins.size(); ++s) {
            const std::string spath = join_path(path, "spins") + "[" + std::to_string(s) + "]";
            check_allowed(spins[s], spath, {"x", "y", "z"});
            SpinAnsatz spin;
            spin.x = get_number(spins[s], spath, "x", 0);
            spin.y = get_number(spins[s], spath, "y", 0);
            spin.z = get_number(spins[s], spath, "z", -1);
            try {
                spin.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(spath, e.what());
            }
            config.ansatz.spins.push_back(spin);
        }
    }
    config.correlation_order = int(get_integer(a, path, "correlation_order", 0));
    if (config.correlation_order < 0 || config.correlation_order == 1)
        throw ConfigError(join_path(path, "correlation_order"), "must be 0 or >= 2");
}

// ---------------------------------------------------------------------------
// serialization

json complex_json(cplx v) { return json::array({v.real(), v.imag()}); }

json component_json(const ComponentState& state) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Coherent>)
                return {{"type", "coherent"}, {"alpha", complex_json(s.alpha)}};
            else if constexpr (std::is_same_v<T, Thermal>)
                return {{"type", "thermal"}, {"n0", s.n0}};
            else if constexpr (std::is_same_v<T, Fock>)
                return {{"type", "fock"}, {"l", s.l}};
            else if constexpr (std::is_same_v<T, Squeezed>)
                return {{"type", "squeezed"}, {"r", s.r}, {"phi", s.phi}};
            else if constexpr (std::is_same_v<T, Cat>)
                return {{"type", "cat"},
                        {"alpha1", complex_json(s.alpha1)},
                        {"alpha2", complex_json(s.alpha2)},
                        {"theta", complex_json(s.theta)}};
            else if constexpr (std::is_same_v<T, SqueezedThermal>)
                return {{"type", "squeezed_thermal"}, {"n0", s.n0}, {"r", s.r}, {"phi", s.phi}};
            else
                return {{"type", "squeezed_fock"}, {"l", s.l}, {"r", s.r}, {"phi", s.phi}};
        },
        state.value());
}

json ansatz_json(const Ansatz& ansatz) {
    json modes = json::array();
    for (const auto& mode : ansatz.modes) {
        json components = json::array();
        for (const auto& c : mode.components) components.push_back(component_json(c));
        modes.push_back(components);
    }
    json spins = json::array();
    for (const auto& spin : ansatz.spins)
        spins.push_back({{"x", spin.x}, {"y", spin.y}, {"z", spin.z}});
    json correlations = json::object();
    for (const auto& [key, value] : ansatz.correlations)
        correlations[to_string(key)] = complex_json(value);
    return {{"modes", modes}, {"spins", spins}, {"correlations", correlations}};
}

// ---------------------------------------------------------------------------
// commands

struct CommandContext {
    RunConfig config;
    std::filesystem::path out_dir;
    std::ostream& out;
    std::ostream& err;
};

std::vector<Monomial> tracked_keys(const RunConfig& config, const ModelSpec& model) {
    if (config.solver.keys) return *config.solver.keys;
    return default_keys(model, config.solver.key_order);
}

void write_lines(const std::filesystem::path& file, const std::string& hash,
                 const std::vector<json>& records) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out << json{{"config_hash", hash}}.dump() << "\n";
    for (const auto& record : records) out << record.dump() << "\n";
}

json solve_record(const RunConfig& config, const ModelSpec& model, const MinimizeResult& result,
                  double drive) {
    json moments = json::object();
    for (const auto& key : tracked_keys(config, model))
        moments[to_string(key)] = complex_json(ansatz_moment(result.best, key));
    json record{{"parameter", config.sweep.parameter},
                {"value", drive},
                {"D", result.report.total},
                {"converged", result.report.converged},
                {"evaluations", result.report.evaluations},
                {"ansatz", ansatz_json(result.best)},
                {"moments", moments}};
    json intensities = json::array(), squeezings = json::array();
    for (int m = 0; m < model.n_modes; ++m) {
        const Monomial number{BosonMonomial::single(m, 1, 1), {}};
        intensities.push_back(ansatz_moment(result.best, number).real());
        squeezings.push_back(squeezing_of(result.best, m).r);
    }
    record["intensity"] = intensities;
    record["squeezing_r"] = squeezings;
    return record;
}

std::string csv_row(const json& record, const ModelSpec& model) {
    std::ostringstream row;
    row.precision(17);
    row << record.at("value").get<double>();
    for (int m = 0; m < model.n_modes; ++m)
        row << "," << record.at("intensity")[m].get<double>();
    for (int m = 0; m < model.n_modes; ++m)
        row << "," << record.at("squeezing_r")[m].get<double>();
    row << "," << record.at("D").get<double>() << ","
        << (record.at("converged").get<bool>() ? 1 : 0);
    return row.str();
}

void write_summary_csv(const std::filesystem::path& file, const std::string& hash,
                       const ModelSpec& model, const std::vector<json>& records) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out << "# config_hash " << hash << "\n";
    out << "p";
    for (int m = 0; m < model.n_modes; ++m) out << ",intensity_" << m;
    for (int m = 0; m < model.n_modes; ++m) out << ",squeezing_r_" << m;
    out << ",D,converged\n";
    for (const auto& record : records) out << csv_row(record, model) << "\n";
}

int cmd_derive_eom(CommandContext& ctx) {
    const ModelSpec model = build_model(ctx.config);
    const auto keys = tracked_keys(ctx.config, model);
    const auto system = eom_system(model, keys);

    json listing = json::array();
    for (const auto& [key, rhs] : system) {
        ctx.out << "d<" << to_string(key) << ">/dt = " << to_string(rhs) << "\n";
        json terms = json::array();
        for (const auto& [m, c] : rhs.terms())
            terms.push_back({{"monomial", to_string(m)}, {"coeff", complex_json(c)}});
        listing.push_back({{"key", to_string(key)}, {"terms", terms}});
    }
    write_lines(ctx.out_dir / "eom.jsonl", ctx.config.hash, {json{{"equations", listing}}});
    return kExitOk;
}

MinimizeResult run_minimize(const RunConfig& config, const ModelSpec& model,
                            const AnsatzTemplate& family) {
    MinimizeOptions options = config.solver;
    if (!options.keys) options.keys = default_keys(model, options.key_order);
    return minimize(model, family, options);
}

int cmd_solve(CommandContext& ctx) {
    const ModelSpec model = build_model(ctx.config);
    const auto family = build_template(ctx.config, model);
    const auto result = run_minimize(ctx.config, model, family);
    const double drive = ctx.config.model_type == "jc"        ? ctx.config.jc.p
                         : ctx.config.model_type == "rydberg" ? ctx.config.rydberg.p
                                                              : 0.0;
    const json record = solve_record(ctx.config, model, result, drive);
    write_lines(ctx.out_dir / "solve.jsonl", ctx.config.hash, {record});
    write_summary_csv(ctx.out_dir / "solve.csv", ctx.config.hash, model, {record});
    ctx.out << "D = " << result.report.total
            << (result.report.converged ? "" : "  (not converged)") << "\n";
    return kExitOk;
}

int cmd_sweep(CommandContext& ctx) {
    if (ctx.config.sweep.values.empty())
        throw ConfigError("sweep.values", "sweep requires at least one value");
    if (ctx.config.model_type == "custom")
        throw ConfigError("sweep.parameter", "sweeps are only supported for jc and rydberg models");

    std::vector<json> records;
    std::optional<Ansatz> previous;
    int failures = 0;
    for (const double drive : ctx.config.sweep.values) {
        const ModelSpec model = build_model(ctx.config, drive);
        AnsatzTemplate family = build_template(ctx.config, model);
        if (previous && ctx.config.sweep.warm_start) family.base = *previous;
        const auto result = run_minimize(ctx.config, model, family);
        if (!result.report.converged) ++failures;
        previous = result.best;
        records.push_back(solve_record(ctx.config, model, result, drive));
    }
    const ModelSpec model = build_model(ctx.config, ctx.config.sweep.values.front());
    write_lines(ctx.out_dir / "sweep.jsonl", ctx.config.hash, records);
    write_summary_csv(ctx.out_dir / "sweep.csv", ctx.config.hash, model, records);
    ctx.out << records.size() << " sweep points, " << failures << " not converged\n";
    return kExitOk;
}

TruncationSpec oracle_truncation(const RunConfig& config, const ModelSpec& model) {
    TruncationSpec trunc;
    trunc.cutoffs = config.oracle.cutoffs.empty()
                        ? std::vector<int>(size_t(model.n_modes), 10)
                        : config.oracle.cutoffs;
    if (int(trunc.cutoffs.size()) != model.n_modes)
        throw ConfigError("oracle.cutoffs", "need one cutoff per mode");
    trunc.n_spins = model.n_spins;
    trunc.dimension_cap = config.oracle.dimension_cap;
    const long dim = trunc.dimension();
    if (dim * dim > trunc.dimension_cap * trunc.dimension_cap || dim > trunc.dimension_cap)
        throw CapacityError("oracle Hilbert dimension " + std::to_string(dim) +
                            " exceeds the cap " + std::to_string(trunc.dimension_cap));
    return trunc;
}

json oracle_moments(const RunConfig& config, const ModelSpec& model,
                    const std::vector<Monomial>& keys, std::vector<double>* boundary) {
    const TruncationSpec trunc = oracle_truncation(config, model);
    FockSpace space(trunc);
    SteadyStateOptions options;
    options.strict = config.oracle.strict;
    const auto state = steady_state(model, space, options);
    if (boundary) *boundary = state.boundary_population;
    json moments = json::object();
    for (const auto& key : keys) moments[to_string(key)] = complex_json(exact_moment(state, space, key));
    return moments;
}

int cmd_oracle(CommandContext& ctx) {
    const ModelSpec model = build_model(ctx.config);
    const auto keys = tracked_keys(ctx.config, model);
    std::vector<double> boundary;
    const json moments = oracle_moments(ctx.config, model, keys, &boundary);
    json record{{"moments", moments}, {"boundary_population", boundary}};
    write_lines(ctx.out_dir / "oracle.jsonl", ctx.config.hash, {record});
    for (const auto& [key, value] : moments.items())
        ctx.out << "<" << key << "> = (" << value[0].get<double>() << ", "
                << value[1].get<double>() << ")\n";
    return kExitOk;
}

int cmd_compare(CommandContext& ctx) {
    const ModelSpec model = build_model(ctx.config);
    const auto keys = tracked_keys(ctx.config, model);
    const auto family = build_template(ctx.config, model);
    const auto result = run_minimize(ctx.config, model, family);
    std::vector<double> boundary;
    const json exact = oracle_moments(ctx.config, model, keys, &boundary);

    json rows = json::array();
    ctx.out << std::left << std::setw(24) << "moment" << std::setw(26) << "variational"
            << std::setw(26) << "oracle" << std::setw(14) << "abs_dev" << "rel_dev\n";
    for (const auto& key : keys) {
        const cplx ours = ansatz_moment(result.best, key);
        const auto& pair = exact.at(to_string(key));
        const cplx ref(pair[0].get<double>(), pair[1].get<double>());
        const double abs_dev = std::abs(ours - ref);
        const double rel_dev = abs_dev / std::max(1e-300, std::abs(ref));
        std::ostringstream a, b;
        a.precision(6);
        b.precision(6);
        a << "(" << ours.real() << "," << ours.imag() << ")";
        b << "(" << ref.real() << "," << ref.imag() << ")";
        ctx.out << std::left << std::setw(24) << to_string(key) << std::setw(26) << a.str()
                << std::setw(26) << b.str() << std::setw(14) << abs_dev << rel_dev << "\n";
        rows.push_back({{"key", to_string(key)},
                        {"variational", complex_json(ours)},
                        {"oracle", complex_json(ref)},
                        {"abs_dev", abs_dev},
                        {"rel_dev", rel_dev}});
    }
    ctx.out << "oracle boundary population:";
    for (double b : boundary) ctx.out << " " << b;
    ctx.out << "\nD = " << result.report.total << "\n";
    write_lines(ctx.out_dir / "compare.jsonl", ctx.config.hash,
                {json{{"rows", rows},
                      {"D", result.report.total},
                      {"boundary_population", boundary}}});
    return kExitOk;
}

int cmd_phase_space(CommandContext& ctx) {
    if (ctx.config.ansatz.modes.empty())
        throw ConfigError("ansatz.modes", "phase-space export needs an analytic state spec");
    const auto& components = ctx.config.ansatz.modes[0].components;
    const auto& ps = ctx.config.phase_space;
    const int m = ps.truncation >= 0 ? ps.truncation : 16;
    const double sigma = ps.sigma_reg >= 0 ? ps.sigma_reg : default_sigma(components);
    const auto table = moment_table(components, m);

    auto p = p_grid(table, m, ps.grid, sigma);
    p.label = ps.label;
    auto w = wigner_grid(table, m, ps.grid, 0);
    w.label = ps.label;
    const auto p_path = write_grid(p, ctx.out_dir, ctx.config.hash);
    const auto w_path = write_grid(w, ctx.out_dir, ctx.config.hash);
    ctx.out << p_path.string() << "\n" << w_path.string() << "\n";
    return kExitOk;
}

int cmd_gallery(CommandContext& ctx) {
    const auto& ps = ctx.config.phase_space;
    const int m = ps.truncation >= 0 ? ps.truncation : 12;
    for (auto& grid : gallery(ps.grid, m)) {
        const auto path = write_grid(grid, ctx.out_dir, ctx.config.hash);
        ctx.out << path.string() << "\n";
    }
    return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string config_hash(const json& j) {
    // FNV-1a over the canonical dump
    const std::string dump = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

RunConfig load_config(const json& j) {
    check_allowed(j, "", {"model", "ansatz", "solver", "oracle", "sweep", "phase_space", "output"});
    RunConfig config;
    config.raw = j;
    config.hash = config_hash(j);

    if (!j.contains("model")) throw ConfigError("model", "missing required section");
    const auto& model = j.at("model");
    check_allowed(model, "model", {"type", "params", "polariton_basis"});
    config.model_type = get_string(model, "model", "type", "");
    const json params = model.contains("params") ? model.at("params") : json::object();
    if (config.model_type == "jc") {
        config.jc = parse_jc(params, "model.params");
    } else if (config.model_type == "rydberg") {
        config.rydberg = parse_rydberg(params, "model.params");
        config.polariton_basis = get_bool(model, "model", "polariton_basis", false);
    } else if (config.model_type == "custom") {
        config.custom_model = parse_custom(params, "model.params");
    } else {
        throw ConfigError("model.type", "expected jc, rydberg or custom");
    }
    if (config.model_type != "rydberg" && model.contains("polariton_basis"))
        throw ConfigError("model.polariton_basis", "only valid for the rydberg model");

    if (j.contains("ansatz")) parse_ansatz(j.at("ansatz"), "ansatz", config);

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        check_allowed(s, "solver",
                      {"key_order", "multi_starts", "budget", "seed", "uniform_weights",
                       "start_spread", "stall_iterations"});
        config.solver.key_order = int(get_integer(s, "solver", "key_order", 2));
        config.solver.multi_starts = int(get_integer(s, "solver", "multi_starts", 16));
        config.solver.budget = get_integer(s, "solver", "budget", 20000);
        config.solver.seed = std::uint64_t(get_integer(s, "solver", "seed", 0));
        config.solver.uniform_weights = get_bool(s, "solver", "uniform_weights", false);
        config.solver.start_spread = get_number(s, "solver", "start_spread", 1.0);
        config.solver.stall_iterations = int(get_integer(s, "solver", "stall_iterations", 50));
        if (config.solver.key_order < 1) throw ConfigError("solver.key_order", "must be >= 1");
        if (config.solver.multi_starts < 1) throw ConfigError("solver.multi_starts", "must be >= 1");
        if (config.solver.budget < 1) throw ConfigError("solver.budget", "must be >= 1");
    }

    if (j.contains("oracle")) {
        const auto& o = j.at("oracle");
        check_allowed(o, "oracle", {"cutoffs", "dimension_cap", "strict"});
        if (o.contains("cutoffs")) {
            if (!o.at("cutoffs").is_array()) throw ConfigError("oracle.cutoffs", "expected an array");
            for (const auto& c : o.at("cutoffs")) {
                if (!c.is_number_integer() || c.get<int>() < 1)
                    throw ConfigError("oracle.cutoffs", "cutoffs must be positive integers");
                config.oracle.cutoffs.push_back(c.get<int>());
            }
        }
        config.oracle.dimension_cap = get_integer(o, "oracle", "dimension_cap", 4096);
        config.oracle.strict = get_bool(o, "oracle", "strict", false);
        if (config.oracle.dimension_cap < 1) throw ConfigError("oracle.dimension_cap", "must be >= 1");
    }

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        check_allowed(s, "sweep", {"parameter", "values", "warm_start"});
        config.sweep.parameter = get_string(s, "sweep", "parameter", "p");
        if (config.sweep.parameter != "p")
            throw ConfigError("sweep.parameter", "only the drive amplitude p can be swept");
        if (s.contains("values")) {
            if (!s.at("values").is_array()) throw ConfigError("sweep.values", "expected an array");
            for (const auto& v : s.at("values")) {
                if (!v.is_number()) throw ConfigError("sweep.values", "expected numbers");
                config.sweep.values.push_back(v.get<double>());
            }
        }
        config.sweep.warm_start = get_bool(s, "sweep", "warm_start", true);
    }

    if (j.contains("phase_space")) {
        const auto& p = j.at("phase_space");
        check_allowed(p, "phase_space",
                      {"extent", "points", "z_max", "z_points", "z_max_x", "z_max_y",
                       "truncation", "sigma_reg", "label"});
        config.phase_space.grid.extent = get_number(p, "phase_space", "extent", 3.0);
        config.phase_space.grid.points = int(get_integer(p, "phase_space", "points", 101));
        config.phase_space.grid.z_max = get_number(p, "phase_space", "z_max", 0);
        config.phase_space.grid.z_points = int(get_integer(p, "phase_space", "z_points", 0));
        config.phase_space.grid.z_max_x = get_number(p, "phase_space", "z_max_x", 0);
        config.phase_space.grid.z_max_y = get_number(p, "phase_space", "z_max_y", 0);
        config.phase_space.truncation = int(get_integer(p, "phase_space", "truncation", -1));
        config.phase_space.sigma_reg = get_number(p, "phase_space", "sigma_reg", -1);
        config.phase_space.label = get_string(p, "phase_space", "label", "state");
        if (config.phase_space.grid.points < 2)
            throw ConfigError("phase_space.points", "must be >= 2");
        if (config.phase_space.grid.extent <= 0)
            throw ConfigError("phase_space.extent", "must be positive");
        if (config.phase_space.truncation > 16)
            throw ConfigError("phase_space.truncation", "capped at 16; lower the order");
    }

    if (j.contains("output")) {
        const auto& o = j.at("output");
        check_allowed(o, "output", {"directory"});
        config.out_dir = get_string(o, "output", "directory", "");
    }
    return config;
}

RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    return load_config(j);
}

ModelSpec build_model(const RunConfig& config) {
    if (config.model_type == "jc") return jaynes_cummings(config.jc);
    if (config.model_type == "rydberg") {
        if (config.polariton_basis) return polariton_transform(config.rydberg).first;
        return rydberg_three_boson(config.rydberg);
    }
    return config.custom_model;
}

ModelSpec build_model(const RunConfig& config, double drive) {
    RunConfig at = config;
    at.jc.p = drive;
    at.rydberg.p = drive;
    return build_model(at);
}

AnsatzTemplate build_template(const RunConfig& config, const ModelSpec& model) {
    Ansatz base = config.ansatz;
    if (int(base.modes.size()) > model.n_modes)
        throw ConfigError("ansatz.modes", "more mode ansaetze than model modes");
    if (int(base.spins.size()) > model.n_spins)
        throw ConfigError("ansatz.spins", "more spin ansaetze than model spins");
    while (int(base.modes.size()) < model.n_modes)
        base.modes.push_back(ModeAnsatz{{ComponentState(Coherent{0.0})}});
    while (int(base.spins.size()) < model.n_spins) base.spins.push_back(SpinAnsatz{});

    if (config.correlation_order >= 2) {
        for (const auto& key : default_keys(model, config.correlation_order)) {
            int touched = int(key.spin.factors.size());
            for (const auto& f : key.boson.factors)
                if (f.p + f.q > 0) ++touched;
            if (touched >= 2 && !base.correlations.count(key)) base.correlations[key] = 0.0;
        }
    }
    base.validate();
    return AnsatzTemplate::free_all(base);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Variational steady states of driven-dissipative bosonic models"};
    app.require_subcommand(1);
    app.fallthrough();  // allow global flags after the subcommand name

    std::string config_path;
    std::string out_dir_flag;
    long seed = -1;
    int parallel = 0;
    bool strict = false;
    app.add_option("--config", config_path, "JSON configuration file")->required();
    app.add_option("--out", out_dir_flag, "output directory (overrides config and PVAR_OUT_DIR)");
    app.add_option("--seed", seed, "override the solver seed");
    app.add_option("--parallel", parallel, "worker thread count");
    app.add_flag("--strict", strict, "escalate oracle truncation warnings to errors");

    const char* names[] = {"derive-eom", "solve", "sweep", "oracle", "compare", "phase-space",
                           "gallery"};
    for (const char* name : names) app.add_subcommand(name);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        RunConfig config = load_config_file(config_path);
        if (seed >= 0) config.solver.seed = std::uint64_t(seed);
        if (strict) config.oracle.strict = true;
#ifdef _OPENMP
        if (parallel > 0) omp_set_num_threads(parallel);
#endif
        std::filesystem::path out_dir = out_dir_flag;
        if (out_dir.empty()) out_dir = config.out_dir;
        if (out_dir.empty())
            if (const char* env = std::getenv("PVAR_OUT_DIR")) out_dir = env;
        if (out_dir.empty()) out_dir = ".";
        std::filesystem::create_directories(out_dir);

        CommandContext ctx{std::move(config), out_dir, out, err};
        const std::string command = app.get_subcommands().front()->get_name();
        if (command == "derive-eom") return cmd_derive_eom(ctx);
        if (command == "solve") return cmd_solve(ctx);
        if (command == "sweep") return cmd_sweep(ctx);
        if (command == "oracle") return cmd_oracle(ctx);
        if (command == "compare") return cmd_compare(ctx);
        if (command == "phase-space") return cmd_phase_space(ctx);
        return cmd_gallery(ctx);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CapacityError& e) {
        err << "capacity error: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace pvar
