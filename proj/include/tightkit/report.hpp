#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tightkit {

// Surface families: sphere, torus, perturbed_torus, flattened_torus, plane,
// grid (sampled file), annulus and flat_annulus (prescribed forms).
struct SurfaceSpec {
    std::string family = "torus";
    double R = 2.0, r = 1.0;
    double radius = 1.0;
    double eps = 0.05;
    int p = 2, q = 3;
    double half_width = 1.0;
    std::string file;
    bool flipped = false;
    double t_extent = 0.5;
    double l_tt = -1.0;
    bool mirrored = false;
};

struct RunConfig {
    SurfaceSpec surface;
    // Pipeline order: analyze, decompose, trace, invariant, chart, codazzi.
    std::vector<std::string> tasks{"analyze", "decompose", "trace", "invariant", "chart", "codazzi"};
    std::string out = "out";
    std::uint64_t seed = 0;
    std::optional<double> tol;  // overrides every task tolerance

    int quadrature_n = 512;
    double quadrature_tol = 1e-6;

    int decompose_n = 256;

    int trace_count = 4;
    double trace_tangency_tol = 1e-3;

    int invariant_samples = 256;
    double invariant_tol = 1e-6;

    double chart_width = 0.2;
    int chart_nx = 128;
    int chart_nt = 17;
    double chart_tol = 1e-8;

    std::string codazzi_symmetrizer = "auto";  // auto, boundary, closed, f, identity, none
    int codazzi_nx = 192;
    int codazzi_nt = 81;
    double codazzi_margin = 0.05;   // gap to the parabolic curves of a band
    int codazzi_max_doublings = 40;
    double codazzi_perturbation = 1e-3;
    double codazzi_tol = 1e-12;
    double codazzi_energy_tol = 1e-3;

    // Tasks that must run before the given one, in pipeline order.
    static std::vector<std::string> prerequisites(const std::string& task);
    static const std::vector<std::string>& task_names();
};

// Line-oriented `key = value` text with `[section]` headers; `#` starts a
// comment. Keys read `section.key`. Throws ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

struct ArtifactEntry {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::uint64_t bytes = 0;
};

struct CheckRow {
    std::string name;
    std::string headline;  // e.g. "max|U| = 0.0e0"
    double value = 0.0;
    bool pass = false;
    std::string target;  // empty when the row has none
};

struct TaskRecord {
    std::string name;
    std::string status;  // pass, fail, error, skipped
    std::string error;
    bool auto_inserted = false;
    std::vector<CheckRow> checks;
    std::vector<ArtifactEntry> artifacts;
};

struct Manifest {
    std::string out_dir;
    std::uint64_t seed = 0;
    std::string surface;
    std::vector<TaskRecord> tasks;

    bool passed() const;
    int exit_code() const { return passed() ? 0 : 1; }
};

// Task list closed under prerequisites, each task once.
std::vector<std::pair<std::string, bool>> plan_tasks(const std::vector<std::string>& requested);

// Runs the tasks, writes their artifacts and out/manifest.json. A failing
// task skips only the tasks that depend on it.
Manifest run_pipeline(const RunConfig& cfg);

Manifest read_manifest(const std::string& path);
void write_manifest(const Manifest& m, const std::string& path);

// One row per check. Throws ArtifactError when a listed file is missing or
// its hash changed.
std::string emit_summary(const Manifest& m);

std::string sha256_file(const std::string& path);
// Mantissa with the given decimals and an unpadded exponent: 0.0e0, −3.1e-4.
std::string format_sci(double v, int decimals = 1);

}  // namespace tightkit
