#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace combwalk {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;   // one line of measured values against the target
    double seconds = 0.0;
};

struct AcceptanceOptions {
    bool quick = false;        // reduced sizes for smoke runs
    unsigned threads = 1;
    std::uint64_t seed = 20240611;
};

inline constexpr int kCriterionCount = 13;

std::string criterion_name(int id);

// Runs criterion `id` (1..13); throws std::out_of_range otherwise.
CriterionResult run_criterion(int id, const AcceptanceOptions& opt);

// "PASS  3 deterministic p=1 Lyapunov: ... (0.01 s)"
std::string format_result(const CriterionResult& r);

}  // namespace combwalk
