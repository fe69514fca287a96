#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pvar/run_config.hpp"

using namespace pvar;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("pvar_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

fs::path write_json(const fs::path& dir, const char* name, const json& j) {
    const fs::path file = dir / name;
    std::ofstream(file) << j.dump(2);
    return file;
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

int run(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

json jc_config() {
    return {{"model",
             {{"type", "jc"},
              {"params",
               {{"delta_c", 0.5}, {"delta_a", 0.3}, {"g", 1.2}, {"p", 0.4}, {"kappa", 0.5},
                {"gamma", 1.0}}}}},
            {"solver", {{"key_order", 1}, {"multi_starts", 2}, {"budget", 2000}, {"seed", 7}}}};
}

json cavity_config() {
    // Driven-damped cavity: H = 0.7 a†a + 0.3 (a + a†), jump sqrt(0.8) a.
    json coeff_drive = {{"coeff", json::array({0.3, 0.0})}};
    return {{"model",
             {{"type", "custom"},
              {"params",
               {{"n_modes", 1},
                {"hamiltonian",
                 json::array({{{"coeff", json::array({0.7, 0.0})},
                               {"bosons", json::array({json::array({0, 1, 1})})}},
                              {{"coeff", json::array({0.3, 0.0})},
                               {"bosons", json::array({json::array({0, 1, 0})})}},
                              {{"coeff", json::array({0.3, 0.0})},
                               {"bosons", json::array({json::array({0, 0, 1})})}}})},
                {"jumps",
                 json::array({json::array({{{"coeff", json::array({0.8944271909999159, 0.0})},
                                            {"bosons", json::array({json::array({0, 0, 1})})}}})})}}}}},
            {"solver", {{"key_order", 2}, {"multi_starts", 2}, {"budget", 4000}, {"seed", 3}}},
            {"oracle", {{"cutoffs", json::array({16})}}}};
}

}  // namespace

TEST_CASE("config loading rejects unknown fields with their path") {
    json bad = jc_config();
    bad["solver"]["budgett"] = 5;
    CHECK_THROWS_WITH_AS(load_config(bad), doctest::Contains("solver.budgett"), ConfigError);

    json bad_nested = jc_config();
    bad_nested["model"]["params"]["kapa"] = 1.0;
    CHECK_THROWS_WITH_AS(load_config(bad_nested), doctest::Contains("model.params.kapa"),
                         ConfigError);

    json bad_top = jc_config();
    bad_top["solvers"] = json::object();
    CHECK_THROWS_WITH_AS(load_config(bad_top), doctest::Contains("solvers"), ConfigError);
}

TEST_CASE("config loading re-checks physical constraints") {
    json bad = jc_config();
    bad["ansatz"] = {{"modes", json::array({json::array({{{"type", "thermal"}, {"n0", -1.0}}})})}};
    CHECK_THROWS_AS(load_config(bad), ConfigError);

    json bad_spin = jc_config();
    bad_spin["ansatz"] = {{"spins", json::array({{{"x", 2.0}, {"y", 0.0}, {"z", 0.0}}})}};
    CHECK_THROWS_AS(load_config(bad_spin), ConfigError);

    json bad_type = jc_config();
    bad_type["model"]["type"] = "ising";
    CHECK_THROWS_WITH_AS(load_config(bad_type), doctest::Contains("model.type"), ConfigError);
}

TEST_CASE("config hash is stable and key-order independent at fixed dump") {
    const json a = jc_config();
    CHECK(config_hash(a) == config_hash(a));
    json b = a;
    b["solver"]["seed"] = 8;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("template construction pads the ansatz and adds correlation slots") {
    json j = jc_config();
    j["ansatz"] = {{"correlation_order", 2}};
    const RunConfig config = load_config(j);
    const ModelSpec model = build_model(config);
    const auto family = build_template(config, model);
    // 2 coherent + 3 Bloch + 2 per cross correlation key (a sigma etc.)
    CHECK(family.base.modes.size() == 1);
    CHECK(family.base.spins.size() == 1);
    CHECK(family.base.correlations.size() > 0);
    for (const auto& [key, value] : family.base.correlations) {
        int touched = int(key.spin.factors.size());
        for (const auto& f : key.boson.factors) touched += (f.p + f.q > 0);
        CHECK(touched >= 2);
    }
    CHECK(family.size() == 5 + 2 * int(family.base.correlations.size()));
}

TEST_CASE("derive-eom reproduces the mean-field cavity equation coefficients") {
    TempDir tmp;
    const auto config = write_json(tmp.path, "jc.json", jc_config());
    std::string out;
    const int code = run({"derive-eom", "--config", config.string(), "--out", tmp.path.string()},
                         &out);
    CHECK(code == kExitOk);
    CHECK(out.find("d<a>/dt") != std::string::npos);

    std::ifstream eom(tmp.path / "eom.jsonl");
    std::string header, body;
    std::getline(eom, header);
    std::getline(eom, body);
    CHECK(header.find("config_hash") != std::string::npos);
    const json listing = json::parse(body);
    bool found = false;
    for (const auto& eq : listing.at("equations")) {
        if (eq.at("key") != "a") continue;
        found = true;
        for (const auto& term : eq.at("terms")) {
            const std::string monomial = term.at("monomial");
            const cplx c(term.at("coeff")[0].get<double>(), term.at("coeff")[1].get<double>());
            if (monomial == "a") CHECK(std::abs(c - cplx(-0.5, -0.5)) < 1e-12);   // -(kappa+i delta_c)
            else if (monomial == "σ-") CHECK(std::abs(c - cplx(0, -1.2)) < 1e-12);  // -i g
            else if (monomial == "1") CHECK(std::abs(c - cplx(0, -0.4)) < 1e-12);   // -i p
            else FAIL("unexpected monomial in d<a>/dt: ", monomial);
        }
    }
    CHECK(found);
}

TEST_CASE("solve matches the analytic cavity fixed point and the oracle") {
    TempDir tmp;
    const auto config = write_json(tmp.path, "cavity.json", cavity_config());
    std::string out;
    CHECK(run({"solve", "--config", config.string(), "--out", tmp.path.string()}, &out) == kExitOk);

    std::ifstream solve(tmp.path / "solve.jsonl");
    std::string header, body;
    std::getline(solve, header);
    std::getline(solve, body);
    const json record = json::parse(body);
    CHECK(record.at("D").get<double>() < 1e-10);
    CHECK(record.at("converged").get<bool>());
    // alpha = -i p/(kappa/2 + i delta) with p=0.3, kappa=0.8, delta=0.7
    const cplx expect = cplx(0, -0.3) / cplx(0.4, 0.7);
    const auto& a = record.at("moments").at("a");
    CHECK(std::abs(cplx(a[0].get<double>(), a[1].get<double>()) - expect) < 1e-8);

    std::string compare_out;
    CHECK(run({"compare", "--config", config.string(), "--out", tmp.path.string()},
              &compare_out) == kExitOk);
    CHECK(compare_out.find("oracle") != std::string::npos);
    std::ifstream cmp(tmp.path / "compare.jsonl");
    std::getline(cmp, header);
    std::getline(cmp, body);
    for (const auto& row : json::parse(body).at("rows"))
        CHECK(row.at("rel_dev").get<double>() < 1e-6);
}

TEST_CASE("sweep warm-starts, writes JSON-lines plus CSV, and zero drive is vacuum") {
    TempDir tmp;
    json j = {{"model",
               {{"type", "jc"},
                {"params", {{"delta_a", 20.0}, {"g", 2.0}, {"kappa", 0.5}, {"gamma", 1.0}}}}},
              {"solver", {{"key_order", 2}, {"multi_starts", 2}, {"budget", 3000}, {"seed", 1}}},
              {"sweep", {{"values", json::array({0.0, 0.3})}}}};
    const auto config = write_json(tmp.path, "sweep.json", j);
    CHECK(run({"sweep", "--config", config.string(), "--out", tmp.path.string()}) == kExitOk);

    std::ifstream sweep(tmp.path / "sweep.jsonl");
    std::string header, first, second;
    std::getline(sweep, header);
    std::getline(sweep, first);
    std::getline(sweep, second);
    const json p0 = json::parse(first);
    CHECK(p0.at("value").get<double>() == 0.0);
    CHECK(p0.at("D").get<double>() < 1e-12);
    CHECK(p0.at("intensity")[0].get<double>() < 1e-20);
    CHECK(json::parse(second).at("intensity")[0].get<double>() > 0.01);

    const std::string csv = slurp(tmp.path / "sweep.csv");
    CHECK(csv.find("# config_hash") != std::string::npos);
    CHECK(csv.find("p,intensity_0,squeezing_r_0,D,converged") != std::string::npos);
}

TEST_CASE("deterministic outputs: same config and seed give byte-identical files") {
    TempDir tmp;
    json j = jc_config();
    j["solver"]["key_order"] = 2;
    j["sweep"] = {{"values", json::array({0.0, 0.2})}};
    const auto config = write_json(tmp.path, "det.json", j);

    const fs::path run1 = tmp.path / "run1", run2 = tmp.path / "run2";
    CHECK(run({"sweep", "--config", config.string(), "--out", run1.string()}) == kExitOk);
    CHECK(run({"sweep", "--config", config.string(), "--out", run2.string()}) == kExitOk);
    CHECK(slurp(run1 / "sweep.jsonl") == slurp(run2 / "sweep.jsonl"));
    CHECK(slurp(run1 / "sweep.csv") == slurp(run2 / "sweep.csv"));

    // A different seed changes the search path but files stay self-consistent.
    const fs::path run3 = tmp.path / "run3";
    CHECK(run({"sweep", "--config", config.string(), "--out", run3.string(), "--seed", "99"}) ==
          kExitOk);
    CHECK(slurp(run3 / "sweep.csv").find("# config_hash") != std::string::npos);
}

TEST_CASE("exit codes: config, capacity and numerical failures") {
    TempDir tmp;
    json bad = jc_config();
    bad["solver"]["budgett"] = 5;
    const auto bad_path = write_json(tmp.path, "bad.json", bad);
    std::string err;
    CHECK(run({"solve", "--config", bad_path.string(), "--out", tmp.path.string()}, nullptr,
              &err) == kExitConfig);
    CHECK(err.find("solver.budgett") != std::string::npos);

    json big = jc_config();
    big["oracle"] = {{"cutoffs", json::array({5000})}};
    const auto big_path = write_json(tmp.path, "big.json", big);
    CHECK(run({"oracle", "--config", big_path.string(), "--out", tmp.path.string()}, nullptr,
              &err) == kExitCapacity);
    CHECK(err.find("cap") != std::string::npos);

    CHECK(run({"solve", "--config", (tmp.path / "missing.json").string()}, nullptr, &err) ==
          kExitConfig);

    // Strict oracle on a heavily driven cavity with a tiny cutoff: truncation error.
    json hot = cavity_config();
    hot["model"]["params"]["hamiltonian"][1]["coeff"][0] = 4.0;
    hot["model"]["params"]["hamiltonian"][2]["coeff"][0] = 4.0;
    hot["oracle"]["cutoffs"] = json::array({4});
    const auto hot_path = write_json(tmp.path, "hot.json", hot);
    CHECK(run({"oracle", "--config", hot_path.string(), "--out", tmp.path.string(), "--strict"},
              nullptr, &err) == kExitNumerical);
}

TEST_CASE("phase-space and gallery commands write grid files with sidecars") {
    TempDir tmp;
    json j = {{"model", {{"type", "custom"}, {"params", {{"n_modes", 1}}}}},
              {"ansatz",
               {{"modes", json::array({json::array({{{"type", "thermal"}, {"n0", 0.5}}})})}}},
              {"phase_space",
               {{"extent", 2.5}, {"points", 21}, {"truncation", 14}, {"label", "bath"}}}};
    const auto config = write_json(tmp.path, "ps.json", j);
    std::string out;
    CHECK(run({"phase-space", "--config", config.string(), "--out", tmp.path.string()}, &out) ==
          kExitOk);
    CHECK(fs::exists(tmp.path / "bath_p_14_0.csv"));
    CHECK(fs::exists(tmp.path / "bath_p_14_0.json"));
    CHECK(fs::exists(tmp.path / "bath_wigner_14_0.csv"));
    const std::string sidecar = slurp(tmp.path / "bath_p_14_0.json");
    CHECK(sidecar.find("config_hash") != std::string::npos);

    json g = {{"model", {{"type", "custom"}, {"params", {{"n_modes", 1}}}}},
              {"phase_space", {{"extent", 3.0}, {"points", 15}, {"truncation", 10}}}};
    const auto gallery_config = write_json(tmp.path, "gal.json", g);
    const fs::path gallery_dir = tmp.path / "gallery";
    CHECK(run({"gallery", "--config", gallery_config.string(), "--out", gallery_dir.string()}) ==
          kExitOk);
    int csvs = 0;
    for (const auto& entry : fs::directory_iterator(gallery_dir))
        csvs += entry.path().extension() == ".csv";
    CHECK(csvs == 20);
}

TEST_CASE("output directory falls back to the PVAR_OUT_DIR environment variable") {
    TempDir tmp;
    const fs::path env_dir = tmp.path / "env_out";
    setenv("PVAR_OUT_DIR", env_dir.c_str(), 1);
    const auto config = write_json(tmp.path, "jc.json", jc_config());
    CHECK(run({"derive-eom", "--config", config.string()}) == kExitOk);
    unsetenv("PVAR_OUT_DIR");
    CHECK(fs::exists(env_dir / "eom.jsonl"));
}
