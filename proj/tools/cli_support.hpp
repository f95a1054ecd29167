#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace combwalk::cli {

using json = nlohmann::ordered_json;

// Raised for bad parameter values found after parsing; exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

// Doubles as %.17g, so every value re-parses to the same bits.
std::string format_double(double x);

std::uint64_t fnv1a_file(const std::filesystem::path& path);

// A parameter bound to a variable, serializable to and from the manifest.
struct Param {
    std::string name;  // flag name without dashes
    std::function<json()> get;
    std::function<void(const json&)> set;
};

struct Common {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out_dir = ".";
    std::string format = "csv";
};

class RunContext;

// One leaf subcommand, e.g. "lyapunov egt4".
struct Leaf {
    CLI::App* app = nullptr;
    std::vector<std::string> path;
    std::vector<Param> params;
    Common common;
    std::function<void(RunContext&)> run;

    template <typename T>
    CLI::Option* add(const std::string& name, T& var, const std::string& help) {
        params.push_back({name, [&var] { return json(var); }, [&var](const json& v) { var = v.get<T>(); }});
        return app->add_option("--" + name, var, help)->capture_default_str();
    }
    CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
        params.push_back({name, [&var] { return json(var); }, [&var](const json& v) { var = v.get<bool>(); }});
        return app->add_flag("--" + name, var, help);
    }
    void add_common();
    json record() const;
    // Assigns values from a flat object to every parameter not given on the
    // command line. Unknown keys are rejected.
    void apply(const json& values, const std::string& source);
};

class RunContext {
public:
    explicit RunContext(const Leaf& leaf);

    const Common& common() const { return leaf_.common; }
    // Writes <out-dir>/<stem>[_suffix].csv or .json and records its digest.
    std::filesystem::path write(const Table& t, const std::string& suffix = "");
    std::filesystem::path write_json(const json& j, const std::string& suffix);
    json& summary() { return summary_; }
    void finish();  // writes <stem>.manifest.json

    std::string stem() const;

private:
    const Leaf& leaf_;
    std::chrono::steady_clock::time_point start_;
    json outputs_ = json::array();
    json summary_ = json::object();
};

}  // namespace combwalk::cli
