#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tightkit/error.hpp"
#include "tightkit/report.hpp"
#include "tightkit/surface.hpp"

using namespace tightkit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("tightkit_" + name);
    fs::remove_all(p);
    return p.string();
}

std::string config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const CheckRow* find_check(const Manifest& m, const std::string& name) {
    for (const auto& t : m.tasks)
        for (const auto& c : t.checks)
            if (c.name == name) return &c;
    return nullptr;
}

const TaskRecord* find_task(const Manifest& m, const std::string& name) {
    for (const auto& t : m.tasks)
        if (t.name == name) return &t;
    return nullptr;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("minimal torus config fills the defaults") {
    const RunConfig c = parse_config("[surface]\nfamily = torus\n");
    CHECK(c.surface.family == "torus");
    CHECK(c.surface.R == 2.0);
    CHECK(c.surface.r == 1.0);
    CHECK(c.seed == 0);
    CHECK(c.out == "out");
    CHECK(c.quadrature_n == 512);
    CHECK_FALSE(c.tol.has_value());
    CHECK(c.tasks == RunConfig::task_names());
    CHECK(c.codazzi_symmetrizer == "auto");
}

TEST_CASE("keys are read inside sections and as dotted names") {
    const RunConfig c = parse_config(
        "# run\nsurface.family = perturbed_torus\n[surface]\nR = 3   # axis\nr = 0.5\neps = 0.1\n"
        "[run]\ntasks = trace, codazzi\nseed = 42\ntol = 1e-5\nout = results\n[quadrature]\nn = 128\n");
    CHECK(c.surface.family == "perturbed_torus");
    CHECK(c.surface.R == 3.0);
    CHECK(c.surface.eps == 0.1);
    CHECK(c.tasks == std::vector<std::string>{"trace", "codazzi"});
    CHECK(c.seed == 42);
    CHECK(*c.tol == 1e-5);
    CHECK(c.out == "results");
    CHECK(c.quadrature_n == 128);
    CHECK(parse_config("[run]\ntasks =\n").tasks.empty());
}

TEST_CASE("invalid configs are rejected with line numbers") {
    const std::string radius = config_error("[surface]\nfamily = torus\nR = 2\nr = 3\n");
    CHECK(radius.find("tube radius must be < axis radius") != std::string::npos);
    CHECK(radius.find("line 4") != std::string::npos);

    const std::string typo = config_error("surface.family = torus\nquadrture.n = 256\n");
    CHECK(typo.find("line 2") != std::string::npos);
    CHECK(typo.find("unknown key 'quadrture.n'") != std::string::npos);
    CHECK(typo.find("did you mean 'quadrature.n'") != std::string::npos);

    CHECK(config_error("[quadrture]\nn = 3\n").find("did you mean 'quadrature'") != std::string::npos);
    CHECK(config_error("[surface]\nfamily torus\n").find("line 2: expected 'key = value'") != std::string::npos);
    CHECK(config_error("[surface]\nR = two\n").find("expected a number") != std::string::npos);
    CHECK(config_error("[surface]\nR = 3\nR = 4\n").find("duplicate key 'surface.R' (first set on line 2)") !=
          std::string::npos);
    CHECK(config_error("[run]\ntasks = analyze, trase\n").find("did you mean 'trace'") != std::string::npos);
    CHECK(config_error("[surface]\nfamily = tours\n").find("did you mean 'torus'") != std::string::npos);
    CHECK(config_error("[quadrature]\nn = 0\n").find("quadrature.n must be in") != std::string::npos);
    CHECK(config_error("[surface]\nfamily = grid\n").find("needs surface.file") != std::string::npos);
    CHECK(config_error("[surface\n").find("unterminated") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ConfigError);
}

TEST_CASE("prerequisites are inserted once, before their dependents") {
    using Plan = std::vector<std::pair<std::string, bool>>;
    CHECK(plan_tasks({"codazzi"}) ==
          Plan{{"decompose", true}, {"trace", true}, {"chart", true}, {"codazzi", false}});
    CHECK(plan_tasks({"invariant", "chart", "invariant"}) ==
          Plan{{"decompose", true}, {"trace", true}, {"invariant", false}, {"chart", false}});
    CHECK(plan_tasks({"analyze"}) == Plan{{"analyze", false}});
    CHECK(plan_tasks({}).empty());
}

TEST_CASE("number formatting") {
    CHECK(format_sci(0.0) == "0.0e0");
    CHECK(format_sci(-3.1e-4) == "−3.1e-4");
    CHECK(format_sci(12345.0) == "1.2e4");
    CHECK(format_sci(9.96) == "1.0e1");
    CHECK(format_sci(1.25e-9, 2) == "1.25e-9");
}

TEST_CASE("sha256 of a known file") {
    const fs::path p = fs::path(fresh_dir("hash")) / "abc.txt";
    fs::create_directories(p.parent_path());
    std::ofstream(p) << "abc";
    CHECK(sha256_file(p.string()) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK_THROWS_AS(sha256_file((p.parent_path() / "missing").string()), ArtifactError);
}

TEST_CASE("empty task list succeeds with an empty manifest") {
    RunConfig c = parse_config("[run]\ntasks =\n");
    c.out = fresh_dir("empty");
    const Manifest m = run_pipeline(c);
    CHECK(m.tasks.empty());
    CHECK(m.exit_code() == 0);
    CHECK(emit_summary(read_manifest(c.out + "/manifest.json")).empty());
}

TEST_CASE("torus pipeline end to end") {
    RunConfig c = parse_config("[surface]\nfamily = torus\n[run]\nseed = 11\n");
    c.out = fresh_dir("torus");
    const Manifest m = run_pipeline(c);
    for (const auto& t : m.tasks) {
        INFO(t.name << " " << t.status << " " << t.error);
        CHECK(t.status == "pass");
    }
    CHECK(m.exit_code() == 0);
    REQUIRE(m.tasks.size() == 6);

    const CheckRow* tight = find_check(m, "tightness");
    REQUIRE(tight);
    CHECK(std::abs(tight->value - 4.0 * kPi) < 1e-6);
    REQUIRE(find_check(m, "parabolic"));
    CHECK(find_check(m, "parabolic")->value == 2.0);
    REQUIRE(find_check(m, "closed-curves"));
    CHECK(find_check(m, "closed-curves")->value == 0.0);
    REQUIRE(find_check(m, "uniqueness"));
    CHECK(find_check(m, "uniqueness")->pass);
    CHECK(find_check(m, "uniqueness")->value < 1e-12);

    const Manifest back = read_manifest(c.out + "/manifest.json");
    CHECK(back.seed == 11);
    CHECK(back.tasks.size() == m.tasks.size());
    const std::string summary = emit_summary(back);
    CHECK(summary.find("tightness  ∫_{S+}K dA = 12.56637  PASS (target 4π ± 1e-6)\n") != std::string::npos);
    CHECK(summary.find("uniqueness  max|U| = 0.0e0  PASS\n") != std::string::npos);
    CHECK(summary.find("closed-curves  closed asymptotic curves = 0  PASS\n") != std::string::npos);

    // Every artifact is listed with its hash, and every JSON record carries the seed.
    int json_files = 0;
    for (const auto& t : m.tasks) {
        CHECK_FALSE(t.artifacts.empty());
        for (const auto& a : t.artifacts) {
            const fs::path p = fs::path(c.out) / a.path;
            CHECK(sha256_file(p.string()) == a.sha256);
            CHECK(fs::file_size(p) == a.bytes);
            if (p.extension() == ".json") {
                ++json_files;
                CHECK(json::parse(slurp(p)).at("seed") == 11);
            }
        }
    }
    CHECK(json_files == 6);
    const json run = json::parse(slurp(fs::path(c.out) / "codazzi/run.json"));
    CHECK(run.at("symmetrizer").at("kind") == "boundary");
    CHECK(run.at("perturbation").at("norms").size() > 1);
    CHECK(slurp(fs::path(c.out) / "codazzi/state.csv").rfind("x,t,v,w,u\n", 0) == 0);

    SUBCASE("identical config and seed give byte-identical artifacts") {
        RunConfig again = c;
        again.out = fresh_dir("torus_again");
        const Manifest m2 = run_pipeline(again);
        REQUIRE(m2.tasks.size() == m.tasks.size());
        for (std::size_t k = 0; k < m.tasks.size(); ++k) {
            REQUIRE(m2.tasks[k].artifacts.size() == m.tasks[k].artifacts.size());
            for (std::size_t a = 0; a < m.tasks[k].artifacts.size(); ++a)
                CHECK(m2.tasks[k].artifacts[a].sha256 == m.tasks[k].artifacts[a].sha256);
        }
        CHECK(slurp(fs::path(c.out) / "manifest.json") == slurp(fs::path(again.out) / "manifest.json"));
    }
    SUBCASE("a different seed moves the sampled traces") {
        RunConfig other = c;
        other.out = fresh_dir("torus_seed");
        other.seed = 12;
        other.tasks = {"trace"};
        const Manifest m3 = run_pipeline(other);
        CHECK(find_task(m3, "trace")->artifacts.back().sha256 != find_task(m, "trace")->artifacts.back().sha256);
    }
    SUBCASE("a missing or altered artifact is an error") {
        const std::string path = c.out + "/trace/traces.json";
        std::ofstream(path, std::ios::app) << " ";
        CHECK_THROWS_AS(emit_summary(back), ArtifactError);
        fs::remove(path);
        CHECK_THROWS_AS(emit_summary(back), ArtifactError);
    }
}

TEST_CASE("annulus invariant task reports both sides") {
    RunConfig c = parse_config("[surface]\nfamily = annulus\n[run]\ntasks = invariant\n");
    c.out = fresh_dir("annulus");
    const Manifest m = run_pipeline(c);
    REQUIRE(m.tasks.size() == 3);
    CHECK(m.tasks[0].name == "decompose");
    CHECK(m.tasks[0].auto_inserted);
    CHECK(m.tasks[1].name == "trace");
    CHECK(m.tasks[2].name == "invariant");
    CHECK_FALSE(m.tasks[2].auto_inserted);
    CHECK(m.exit_code() == 0);

    const json r = json::parse(slurp(fs::path(c.out) / "invariant/invariant.json"));
    const json& a = r.at("annulus");
    CHECK(a.at("coordinate").get<double>() == doctest::Approx(-kPi).epsilon(1e-6));
    CHECK(a.at("intrinsic").get<double>() == doctest::Approx(-kPi).epsilon(1e-6));
    CHECK(a.at("discrepancy").get<double>() < 1e-6);
    REQUIRE(r.at("closed_curves").size() == 1);
    CHECK(r.at("closed_curves")[0].at("discrepancy").get<double>() < 1e-6);
    const std::string summary = emit_summary(m);
    CHECK(summary.find("invariant  coordinate = −3.14159, intrinsic = −3.14159, discrepancy = ") != std::string::npos);

    RunConfig flat = parse_config("[surface]\nfamily = flat_annulus\n[run]\ntasks = invariant\n");
    flat.out = fresh_dir("flat");
    const Manifest f = run_pipeline(flat);
    const CheckRow* row = find_check(f, "invariant");
    REQUIRE(row);
    CHECK(row->pass);
    const json fr = json::parse(slurp(fs::path(flat.out) / "invariant/invariant.json"));
    CHECK(std::abs(fr.at("annulus").at("coordinate").get<double>()) < 1e-12);
    CHECK(std::abs(fr.at("annulus").at("intrinsic").get<double>()) < 1e-12);
}

TEST_CASE("annulus codazzi run certifies the f-kind symmetrizer") {
    RunConfig c = parse_config("[surface]\nfamily = annulus\n[run]\ntasks = codazzi\n");
    c.out = fresh_dir("annulus_codazzi");
    const Manifest m = run_pipeline(c);
    CHECK(m.exit_code() == 0);
    const json run = json::parse(slurp(fs::path(c.out) / "codazzi/run.json"));
    CHECK(run.at("symmetrizer").at("kind") == "closed-curve-f");
    CHECK(run.at("field").at("pattern") == "negative-L");
}

TEST_CASE("a failing task does not abort independent siblings") {
    RunConfig c = parse_config("[surface]\nfamily = annulus\n[run]\ntasks = analyze, invariant\n");
    c.out = fresh_dir("siblings");
    const Manifest m = run_pipeline(c);
    REQUIRE(find_task(m, "analyze"));
    CHECK(find_task(m, "analyze")->status == "error");
    CHECK(find_task(m, "analyze")->error.find("closed surface") != std::string::npos);
    CHECK(find_task(m, "invariant")->status == "pass");
    CHECK(m.exit_code() == 1);
    CHECK(emit_summary(m).find("analyze  error: ") != std::string::npos);

    // Dependents of an errored task are skipped.
    RunConfig s = parse_config("[surface]\nfamily = sphere\n[run]\ntasks = analyze, codazzi\n");
    s.out = fresh_dir("sphere");
    const Manifest ms = run_pipeline(s);
    CHECK(find_task(ms, "analyze")->status == "pass");
    CHECK(find_task(ms, "chart")->status == "error");
    CHECK(find_task(ms, "codazzi")->status == "skipped");
    CHECK(ms.exit_code() == 1);
}

TEST_CASE("an under-parameterized symmetrizer search reports its best attempt") {
    RunConfig c = parse_config("[surface]\nfamily = torus\n[codazzi]\nmax_doublings = 0\n[run]\ntasks = codazzi\n");
    c.out = fresh_dir("under");
    const Manifest m = run_pipeline(c);
    const CheckRow* row = find_check(m, "symmetrizer");
    REQUIRE(row);
    CHECK_FALSE(row->pass);
    CHECK(row->value < 0.0);
    CHECK(find_task(m, "codazzi")->status == "fail");
    CHECK(m.exit_code() == 1);
    const std::string summary = emit_summary(m);
    CHECK(summary.find("symmetrizer  min-eig = −") != std::string::npos);
    CHECK(summary.find("  FAIL\n", summary.find("symmetrizer")) != std::string::npos);
}
