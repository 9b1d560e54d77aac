// gradcheck.hpp - randomized gradient verification of every op and loss
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uat {

struct GradCheckCase {
    std::string name;
    int instances = 0;
    double max_error = 0.0;  // worst relative error seen across instances
    bool passed = false;
};

struct GradCheckReport {
    std::vector<GradCheckCase> cases;
    double tolerance = 0.0;
    bool all_passed = true;
    double seconds = 0.0;
};

// Checks each differentiable op and each loss term against central
// differences on `instances` random inputs per case. Random inputs are drawn
// away from relu/hinge kinks, matching the smoothness the estimate needs.
GradCheckReport run_grad_checks(int instances, double tolerance, std::uint64_t seed);

std::string format_grad_report(const GradCheckReport& report);

}  // namespace uat
