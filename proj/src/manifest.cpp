#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "tightkit/error.hpp"
#include "tightkit/report.hpp"

namespace tightkit {

namespace fs = std::filesystem;
using nlohmann::json;

bool Manifest::passed() const {
    for (const auto& t : tasks)
        if (t.status != "pass") return false;
    return true;
}

std::vector<std::pair<std::string, bool>> plan_tasks(const std::vector<std::string>& requested) {
    std::vector<std::pair<std::string, bool>> plan;
    auto has = [&](const std::string& n) {
        for (const auto& [name, _] : plan)
            if (name == n) return true;
        return false;
    };
    for (const auto& task : requested) {
        for (const auto& dep : RunConfig::prerequisites(task))
            if (!has(dep)) plan.emplace_back(dep, true);
        if (!has(task)) plan.emplace_back(task, false);
    }
    return plan;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("missing artifact file '" + path + "'");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return hex.str();
}

std::string format_sci(double v, int decimals) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "−inf";
    int e = v == 0.0 ? 0 : static_cast<int>(std::floor(std::log10(std::abs(v))));
    double m = v == 0.0 ? 0.0 : std::abs(v) / std::pow(10.0, e);
    const double scale = std::pow(10.0, decimals);
    m = std::round(m * scale) / scale;
    if (m >= 10.0) m /= 10.0, ++e;
    std::ostringstream s;
    if (v < 0.0) s << "−";
    s << std::fixed << std::setprecision(decimals) << m << 'e' << e;
    return s.str();
}

namespace {

json to_json(const Manifest& m) {
    json tasks = json::array();
    for (const auto& t : m.tasks) {
        json checks = json::array(), arts = json::array();
        for (const auto& c : t.checks)
            checks.push_back({{"name", c.name}, {"headline", c.headline}, {"value", c.value}, {"pass", c.pass},
                              {"target", c.target}});
        for (const auto& a : t.artifacts) arts.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
        tasks.push_back({{"name", t.name},
                         {"status", t.status},
                         {"error", t.error},
                         {"auto_inserted", t.auto_inserted},
                         {"checks", checks},
                         {"artifacts", arts}});
    }
    return {{"seed", m.seed}, {"surface", m.surface}, {"passed", m.passed()}, {"tasks", tasks}};
}

}  // namespace

void write_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ArtifactError("cannot write '" + path + "'");
    out << to_json(m).dump(2) << '\n';
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("missing manifest '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ArtifactError("unreadable manifest '" + path + "': " + e.what());
    }
    Manifest m;
    m.out_dir = fs::path(path).parent_path().string();
    m.seed = j.value("seed", std::uint64_t{0});
    m.surface = j.value("surface", "");
    for (const auto& t : j.at("tasks")) {
        TaskRecord r;
        r.name = t.at("name");
        r.status = t.at("status");
        r.error = t.value("error", "");
        r.auto_inserted = t.value("auto_inserted", false);
        for (const auto& c : t.at("checks")) {
            const double v = c.at("value").is_null() ? std::numeric_limits<double>::quiet_NaN() : c.at("value").get<double>();
            r.checks.push_back({c.at("name"), c.at("headline"), v, c.at("pass"), c.value("target", "")});
        }
        for (const auto& a : t.at("artifacts")) r.artifacts.push_back({a.at("path"), a.at("sha256"), a.at("bytes")});
        m.tasks.push_back(std::move(r));
    }
    return m;
}

std::string emit_summary(const Manifest& m) {
    std::ostringstream out;
    for (const auto& t : m.tasks) {
        for (const auto& a : t.artifacts) {
            const fs::path p = fs::path(m.out_dir) / a.path;
            if (!fs::exists(p)) throw ArtifactError("missing artifact file '" + p.string() + "'");
            if (sha256_file(p.string()) != a.sha256) throw ArtifactError("artifact changed since the run: '" + p.string() + "'");
        }
        if (t.checks.empty()) {
            out << t.name << "  " << t.status << (t.error.empty() ? "" : ": " + t.error) << "  FAIL\n";
            continue;
        }
        for (const auto& c : t.checks) {
            out << c.name << "  " << c.headline << "  " << (c.pass ? "PASS" : "FAIL");
            if (!c.target.empty()) out << " (target " << c.target << ")";
            out << '\n';
        }
        if (t.status == "error") out << t.name << "  error: " << t.error << "  FAIL\n";
    }
    return out.str();
}

}  // namespace tightkit
