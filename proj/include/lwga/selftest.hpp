#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lwga {

struct SelftestOptions {
    std::uint64_t seed = 42;
    // Test hook: flips one convolution output before the oracle compare so
    // the harness can prove a failure is actually detected and reported.
    bool inject_fault = false;
};

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail; // cases run, or the first failing property
};

std::vector<SuiteResult> run_selftest(const SelftestOptions& opts = {});
bool all_passed(const std::vector<SuiteResult>& results);

} // namespace lwga
