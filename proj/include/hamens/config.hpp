// config.hpp: `key = value` run configuration with [section] headers
//
// Sections: radial, angular, state, grid, mc, output. Times are in units of 1/ω_c.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hamens/ensemble.hpp"
#include "hamens/montecarlo.hpp"

namespace hamens {

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& what, int line_, std::string key_)
        : std::runtime_error(what), line(line_), key(std::move(key_)) {}
    int line;        // 0 when not tied to a line
    std::string key; // empty when not tied to a key
};

struct RunConfig {
    // [radial]
    std::string radial_model = "gaussian";
    double omega_c = 1.0;
    std::string radial_table;
    // [angular]
    std::string angular_model = "sphere";
    double a = 0.0;
    std::string angular_table;
    std::vector<double> a_values; // for scan
    // [state]
    std::optional<double> theta0;
    std::optional<Vec3> bloch;
    // [grid]
    double t_min = 0.0;
    double t_max = 10.0;
    int n_points = 201;
    // [mc]
    std::uint64_t seed = 1;
    std::uint64_t samples = 100'000;
    std::uint64_t chunk = 4096;
    // [output]
    std::string out_path;

    Vec3 initial_bloch() const;
    // physical times t/ω_c on the configured grid
    std::vector<double> time_grid() const;
    SamplerConfig sampler() const { return {seed, samples, chunk, 0}; }

    RadialModel radial() const;
    AngularModel angular() const;
    AngularModel angular_with(double a_value) const;
    // Builds the ensemble; tabulated radial parts are rescaled to the angular normalization.
    SeparableEnsemble ensemble() const;
};

// Relative table paths resolve against base_dir.
RunConfig parse_config(std::istream& in, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

std::vector<double> parse_number_list(const std::string& text);

} // namespace hamens
