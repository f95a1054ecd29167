// Acceptance suite: one PASS/FAIL line per criterion.
//
// Criteria 9 and 10 are known not to hold as stated (see README); their
// failure is reported but does not fail the run, while an unexpected pass
// is announced. Every other failure gives a nonzero exit status.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <string>

#include "combwalk/acceptance.hpp"
#include "combwalk/parallel.hpp"

int main(int argc, char** argv) {
    using namespace combwalk;
    AcceptanceOptions opt;
    opt.threads = default_threads();
    std::set<int> only;
    std::ofstream report;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--quick"))
            opt.quick = true;
        else if (!std::strcmp(argv[i], "--report") && i + 1 < argc)
            report.open(argv[++i]);
        else if (!std::strcmp(argv[i], "--only") && i + 1 < argc)
            only.insert(std::atoi(argv[++i]));
        else {
            std::fprintf(stderr, "usage: %s [--quick] [--only N]... [--report FILE]\n", argv[0]);
            return 2;
        }
    }
    const std::set<int> known_limitations{9, 10};
    int unexpected = 0, passed = 0, run = 0;
    for (int id = 1; id <= kCriterionCount; ++id) {
        if (!only.empty() && !only.count(id)) continue;
        CriterionResult r = run_criterion(id, opt);
        ++run;
        passed += r.pass;
        std::string line = format_result(r);
        if (!r.pass && known_limitations.count(id)) line += " [known limitation]";
        if (r.pass && known_limitations.count(id)) line += " [unexpected pass]";
        if (!r.pass && !known_limitations.count(id)) ++unexpected;
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        if (report) report << line << std::endl;
    }
    std::printf("%d/%d criteria passed%s\n", passed, run, opt.quick ? " (quick sizes)" : "");
    if (report) report << passed << "/" << run << " criteria passed" << (opt.quick ? " (quick sizes)" : "") << '\n';
    return unexpected ? 1 : 0;
}
