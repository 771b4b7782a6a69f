#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sparsedom {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct SuiteOptions {
    double scale = 1.0;  // scales trial and path budgets (quick mode uses < 1)
    std::uint64_t seed = 316;
    int threads = 0;
    std::filesystem::path out_dir;  // when set, criteria write their CSV artifacts here
};

/// Criterion ids 1..9. Each run pins its tolerances in code and prints
/// nothing; the caller formats one pass/fail line per criterion.
CriterionResult run_criterion(int id, const SuiteOptions& opt);

std::vector<CriterionResult> run_suite(std::span<const int> ids, const SuiteOptions& opt);

inline std::vector<int> all_criteria() { return {1, 2, 3, 4, 5, 6, 7, 8, 9}; }

}  // namespace sparsedom
