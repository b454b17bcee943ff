// commands.hpp: CLI subcommands writing CSV to a stream
//
// Return values are process exit codes: 0 success, 1 failed validation, 2 configuration error.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hamens/config.hpp"

namespace hamens {

// 17 significant digits, "nan" for undefined values.
std::string format_number(double x);

int cmd_moments(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_rates(const RunConfig& cfg, std::ostream& out);

struct ValidateOptions {
    // Test hook: flips the sign of the ⟨sin ωt⟩ term in the analytic map.
    bool flip_sin_sign = false;
};

struct ValidationCheck {
    std::string name;
    double metric;
    double threshold;
    bool pass;
};

std::vector<ValidationCheck> run_validation(const RunConfig& cfg, const ValidateOptions& opts = {});
int cmd_validate(const RunConfig& cfg, std::ostream& out, const ValidateOptions& opts = {});

struct ScanSummary {
    double value;
    int pole_count;
    double max_abs_gamma_xy;
};

// Kneaded-cardioid asymmetry scan; parameter must be "a".
std::vector<ScanSummary> scan_asymmetry(const RunConfig& cfg, const std::vector<double>& values);
int cmd_scan(const RunConfig& cfg, const std::string& parameter, const std::vector<double>& values, std::ostream& out);

} // namespace hamens
