// Acceptance battery: one pass/fail line per criterion, nonzero exit on any
// failure. SPARSEDOM_ACCEPTANCE_SCALE (default 1) shrinks the budgets for
// development runs; the recorded results must come from scale 1.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "sparsedom/suite.hpp"

int main(int argc, char** argv) {
    sparsedom::SuiteOptions opt;
    if (const char* s = std::getenv("SPARSEDOM_ACCEPTANCE_SCALE")) opt.scale = std::atof(s);
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
    if (ids.empty()) ids = sparsedom::all_criteria();

    int failures = 0;
    for (int id : ids) {
        const auto r = sparsedom::run_criterion(id, opt);
        std::printf("[%s] criterion %d: %s  (%.1f s)\n    %s\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.seconds, r.detail.c_str());
        std::fflush(stdout);
        if (!r.pass) ++failures;
    }
    if (opt.scale != 1.0)
        std::printf("note: budgets scaled by %g; acceptance results are valid at scale 1 only\n",
                    opt.scale);
    return failures;
}
