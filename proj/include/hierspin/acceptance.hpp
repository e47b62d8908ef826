// Acceptance suite: one pass/fail line per criterion.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hierspin {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    double seconds = 0.0;
    double budgetSeconds = 0.0;
    std::string detail;
};

constexpr int kCriteriaCount = 12;

// runs the listed criteria (all when empty); each line is written to log as soon as it is known
std::vector<CriterionResult> run_acceptance(const std::vector<int>& which, std::uint64_t masterSeed,
                                            std::ostream* log);

std::string format_result(const CriterionResult& r);

}  // namespace hierspin
