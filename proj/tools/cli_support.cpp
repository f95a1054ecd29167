#include "cli_support.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "combwalk/parallel.hpp"

#ifndef COMBWALK_VERSION
#define COMBWALK_VERSION "0.0.0"
#endif

namespace combwalk::cli {

namespace fs = std::filesystem;

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t fnv1a_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
        h ^= static_cast<unsigned char>(*it);
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::string hex(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json cell_json(const Cell& c) {
    if (auto* i = std::get_if<std::int64_t>(&c)) return *i;
    if (auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(format_double(*d));
    return std::get<std::string>(c);
}

std::string cell_csv(const Cell& c) {
    if (auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    if (auto* d = std::get_if<double>(&c)) return format_double(*d);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

}  // namespace

void Leaf::add_common() {
    common.threads = default_threads();
    add("seed", common.seed, "master seed");
    add("threads", common.threads, "worker threads (default: COMBWALK_THREADS or hardware)")
        ->check(CLI::PositiveNumber);
    add("out-dir", common.out_dir, "output directory");
    add("format", common.format, "table format")->check(CLI::IsMember({"csv", "json"}));
}

json Leaf::record() const {
    json j = json::object();
    for (const auto& p : params) j[p.name] = p.get();
    return j;
}

void Leaf::apply(const json& values, const std::string& source) {
    if (!values.is_object()) throw UsageError(source + ": expected a flat JSON object");
    for (const auto& [key, val] : values.items()) {
        auto it = std::find_if(params.begin(), params.end(), [&](const Param& p) { return p.name == key; });
        if (it == params.end()) throw UsageError(source + ": unknown parameter '" + key + "'");
        if (app->count("--" + key) > 0) continue;  // command line wins
        try {
            it->set(val);
        } catch (const json::exception& e) {
            throw UsageError(source + ": bad value for '" + key + "': " + e.what());
        }
    }
}

RunContext::RunContext(const Leaf& leaf) : leaf_(leaf), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(leaf.common.out_dir);
}

std::string RunContext::stem() const {
    std::string s;
    for (const auto& p : leaf_.path) s += (s.empty() ? "" : "_") + p;
    return s;
}

fs::path RunContext::write(const Table& t, const std::string& suffix) {
    const bool as_json = leaf_.common.format == "json";
    fs::path path = fs::path(leaf_.common.out_dir) /
                    (stem() + (suffix.empty() ? "" : "_" + suffix) + (as_json ? ".json" : ".csv"));
    std::ofstream out(path);
    if (as_json) {
        json rows = json::array();
        for (const auto& r : t.rows) {
            json o = json::object();
            for (std::size_t c = 0; c < t.columns.size(); ++c) o[t.columns[c]] = cell_json(r[c]);
            rows.push_back(std::move(o));
        }
        out << json{{"manifest", stem() + ".manifest.json"}, {"rows", rows}}.dump(1) << '\n';
    } else {
        for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
        out << '\n';
        for (const auto& r : t.rows) {
            for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << cell_csv(r[c]);
            out << '\n';
        }
    }
    out.close();
    outputs_.push_back({{"file", path.filename().string()}, {"fnv1a", hex(fnv1a_file(path))},
                        {"rows", t.rows.size()}});
    return path;
}

fs::path RunContext::write_json(const json& j, const std::string& suffix) {
    fs::path path = fs::path(leaf_.common.out_dir) / (stem() + "_" + suffix + ".json");
    json body = j;
    body["manifest"] = stem() + ".manifest.json";
    std::ofstream(path) << body.dump(1) << '\n';
    outputs_.push_back({{"file", path.filename().string()}, {"fnv1a", hex(fnv1a_file(path))}});
    return path;
}

void RunContext::finish() {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m = {{"subcommand", leaf_.path},
              {"parameters", leaf_.record()},
              {"master_seed", leaf_.common.seed},
              {"artifact_version", COMBWALK_VERSION},
              {"wall_time_s", wall},
              {"outputs", outputs_}};
    if (!summary_.empty()) m["summary"] = summary_;
    std::ofstream(fs::path(leaf_.common.out_dir) / (stem() + ".manifest.json")) << m.dump(1) << '\n';
}

}  // namespace combwalk::cli
