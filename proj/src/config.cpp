#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "report_internal.hpp"
#include "tightkit/error.hpp"

namespace tightkit {

namespace detail {

SourceBundle make_source(const SurfaceSpec& s) {
    SourceBundle b;
    const std::string& f = s.family;
    if (f == "annulus" || f == "flat_annulus") {
        PrescribedForms p = f == "annulus" ? PrescribedForms::annulus(s.t_extent, s.l_tt)
                                           : PrescribedForms::flat_annulus(s.t_extent);
        if (s.mirrored) p = p.mirrored();
        b.prescribed = std::make_shared<const PrescribedForms>(std::move(p));
        b.forms = b.prescribed;
        return b;
    }
    Surface surf = f == "sphere"            ? Surface::sphere(s.radius)
                   : f == "torus"           ? Surface::torus(s.R, s.r)
                   : f == "perturbed_torus" ? Surface::perturbed_torus(s.R, s.r, s.eps, s.p, s.q)
                   : f == "flattened_torus" ? Surface::flattened_torus(s.R, s.r)
                   : f == "plane"           ? Surface::plane(s.half_width)
                                            : Surface::sampled(load_sampled_grid(s.file));
    if (s.flipped) surf = surf.flipped();
    b.surface = surf;
    b.forms = std::make_shared<const SurfaceForms>(surf);
    return b;
}

}  // namespace detail

namespace {

const std::vector<std::string> kFamilies{"sphere", "torus",  "perturbed_torus", "flattened_torus",
                                         "plane",  "grid",   "annulus",         "flat_annulus"};
const std::vector<std::string> kSymmetrizers{"auto", "boundary", "closed", "f", "identity", "none"};

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

std::string suggestion(const std::string& word, const std::vector<std::string>& known) {
    std::string best;
    std::size_t d = 4;
    for (const auto& k : known) {
        const std::size_t e = edit_distance(word, k);
        if (e < d) d = e, best = k;
    }
    return best.empty() ? "" : "; did you mean '" + best + "'?";
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, int line) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(line, "expected a number, got '" + v + "'");
    return x;
}

long long to_int(const std::string& v, int line) {
    long long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(line, "expected an integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& v, int line) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError(line, "expected true or false, got '" + v + "'");
}

std::string one_of(const std::string& v, const std::vector<std::string>& allowed, int line, const std::string& what) {
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
        throw ConfigError(line, "unknown " + what + " '" + v + "'" + suggestion(v, allowed));
    return v;
}

double positive(double x, int line, const std::string& key) {
    if (!(x > 0.0)) throw ConfigError(line, key + " must be > 0");
    return x;
}

int at_least(long long x, long long lo, int line, const std::string& key) {
    if (x < lo || x > 1 << 20) throw ConfigError(line, key + " must be in [" + std::to_string(lo) + ", 1048576]");
    return static_cast<int>(x);
}

using Setter = std::function<void(RunConfig&, const std::string&, int)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto num = [&t](const std::string& key, double RunConfig::*m, bool pos) {
            t[key] = [=](RunConfig& c, const std::string& v, int l) {
                c.*m = pos ? positive(to_double(v, l), l, key) : to_double(v, l);
            };
        };
        auto count = [&t](const std::string& key, int RunConfig::*m, int lo) {
            t[key] = [=](RunConfig& c, const std::string& v, int l) { c.*m = at_least(to_int(v, l), lo, l, key); };
        };
        auto snum = [&t](const std::string& key, double SurfaceSpec::*m) {
            t[key] = [=](RunConfig& c, const std::string& v, int l) { c.surface.*m = to_double(v, l); };
        };
        auto sint = [&t](const std::string& key, int SurfaceSpec::*m) {
            t[key] = [=](RunConfig& c, const std::string& v, int l) {
                c.surface.*m = static_cast<int>(to_int(v, l));
            };
        };
        t["surface.family"] = [](RunConfig& c, const std::string& v, int l) {
            c.surface.family = one_of(v, kFamilies, l, "surface family");
        };
        snum("surface.R", &SurfaceSpec::R);
        snum("surface.r", &SurfaceSpec::r);
        snum("surface.radius", &SurfaceSpec::radius);
        snum("surface.eps", &SurfaceSpec::eps);
        sint("surface.p", &SurfaceSpec::p);
        sint("surface.q", &SurfaceSpec::q);
        snum("surface.half_width", &SurfaceSpec::half_width);
        snum("surface.t_extent", &SurfaceSpec::t_extent);
        snum("surface.l_tt", &SurfaceSpec::l_tt);
        t["surface.file"] = [](RunConfig& c, const std::string& v, int) { c.surface.file = v; };
        t["surface.orientation"] = [](RunConfig& c, const std::string& v, int l) {
            c.surface.flipped = one_of(v, {"standard", "flipped"}, l, "orientation") == "flipped";
        };
        t["surface.mirrored"] = [](RunConfig& c, const std::string& v, int l) { c.surface.mirrored = to_bool(v, l); };

        t["run.tasks"] = [](RunConfig& c, const std::string& v, int l) {
            c.tasks.clear();
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                c.tasks.push_back(one_of(item, RunConfig::task_names(), l, "task"));
            }
        };
        t["run.out"] = [](RunConfig& c, const std::string& v, int l) {
            if (v.empty()) throw ConfigError(l, "run.out must not be empty");
            c.out = v;
        };
        t["run.seed"] = [](RunConfig& c, const std::string& v, int l) {
            const long long s = to_int(v, l);
            if (s < 0) throw ConfigError(l, "run.seed must be >= 0");
            c.seed = static_cast<std::uint64_t>(s);
        };
        t["run.tol"] = [](RunConfig& c, const std::string& v, int l) { c.tol = positive(to_double(v, l), l, "run.tol"); };

        count("quadrature.n", &RunConfig::quadrature_n, 8);
        num("quadrature.tol", &RunConfig::quadrature_tol, true);
        count("decompose.n", &RunConfig::decompose_n, 16);
        count("trace.count", &RunConfig::trace_count, 0);
        num("trace.tangency_tol", &RunConfig::trace_tangency_tol, true);
        count("invariant.samples", &RunConfig::invariant_samples, 16);
        num("invariant.tol", &RunConfig::invariant_tol, true);
        num("chart.width", &RunConfig::chart_width, true);
        count("chart.nx", &RunConfig::chart_nx, 8);
        count("chart.nt", &RunConfig::chart_nt, 5);
        num("chart.tol", &RunConfig::chart_tol, true);
        t["codazzi.symmetrizer"] = [](RunConfig& c, const std::string& v, int l) {
            c.codazzi_symmetrizer = one_of(v, kSymmetrizers, l, "symmetrizer kind");
        };
        count("codazzi.nx", &RunConfig::codazzi_nx, 8);
        count("codazzi.nt", &RunConfig::codazzi_nt, 8);
        num("codazzi.margin", &RunConfig::codazzi_margin, true);
        count("codazzi.max_doublings", &RunConfig::codazzi_max_doublings, 0);
        num("codazzi.perturbation", &RunConfig::codazzi_perturbation, false);
        num("codazzi.tol", &RunConfig::codazzi_tol, true);
        num("codazzi.energy_tol", &RunConfig::codazzi_energy_tol, true);
        return t;
    }();
    return table;
}

std::vector<std::string> known_keys() {
    std::vector<std::string> k;
    for (const auto& [key, _] : setters()) k.push_back(key);
    return k;
}

std::vector<std::string> known_sections() {
    std::vector<std::string> s;
    for (const auto& [key, _] : setters()) {
        const std::string sec = key.substr(0, key.find('.'));
        if (std::find(s.begin(), s.end(), sec) == s.end()) s.push_back(sec);
    }
    return s;
}

}  // namespace

const std::vector<std::string>& RunConfig::task_names() {
    static const std::vector<std::string> names{"analyze", "decompose", "trace", "invariant", "chart", "codazzi"};
    return names;
}

std::vector<std::string> RunConfig::prerequisites(const std::string& task) {
    if (task == "trace") return {"decompose"};
    if (task == "invariant" || task == "chart") return {"decompose", "trace"};
    if (task == "codazzi") return {"decompose", "trace", "chart"};
    return {};
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw.substr(0, raw.find('#')));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            const auto secs = known_sections();
            if (std::find(secs.begin(), secs.end(), section) == secs.end())
                throw ConfigError(line, "unknown section '" + section + "'" + suggestion(section, secs));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ConfigError(line, "missing key before '='");
        const std::string full = section.empty() ? key : section + "." + key;
        const auto it = setters().find(full);
        if (it == setters().end()) {
            std::string hint = suggestion(full, known_keys());
            if (hint.empty() && full != key) hint = suggestion(key, known_keys());
            throw ConfigError(line, "unknown key '" + full + "'" + hint);
        }
        if (seen.count(full)) {
            throw ConfigError(line, "duplicate key '" + full + "' (first set on line " + std::to_string(seen[full]) + ")");
        }
        seen[full] = line;
        it->second(cfg, trim(s.substr(eq + 1)), line);
    }

    auto line_of = [&](std::initializer_list<const char*> keys) {
        int l = 0;
        for (const char* k : keys)
            if (seen.count(k)) l = std::max(l, seen[k]);
        return l;
    };
    const SurfaceSpec& sp = cfg.surface;
    if (sp.family == "grid" && sp.file.empty()) throw ConfigError(line_of({"surface.family"}), "grid surface needs surface.file");
    if ((sp.family == "annulus" || sp.family == "flat_annulus") && !(sp.t_extent > 0.0))
        throw ConfigError(line_of({"surface.t_extent"}), "surface.t_extent must be > 0");
    try {
        detail::make_source(sp);
    } catch (const std::exception& e) {
        std::string what = e.what();
        if (const auto* err = dynamic_cast<const Error*>(&e)) what = what.substr(err->kind().size() + 2);
        throw ConfigError(line_of({"surface.family", "surface.R", "surface.r", "surface.eps", "surface.radius",
                                   "surface.file"}),
                          what);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace tightkit
