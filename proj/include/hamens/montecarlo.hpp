// montecarlo.hpp: Stochastic ensemble averaging with reproducible counter-based streams
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "hamens/ensemble.hpp"
#include "hamens/su2.hpp"

namespace hamens {

// SplitMix64-style counter generator: draw k of stream (seed, chunk) is mix(key + k·γ).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64() noexcept;
    // [0, 1)
    double uniform() noexcept;
    // (0, 1]; safe for logarithms
    double uniform_positive() noexcept;
    double normal() noexcept;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct SamplerConfig {
    std::uint64_t seed = 1;
    std::uint64_t n_samples = 1'000'000;
    std::uint64_t chunk = 4096;
    // 0: hardware concurrency. Results do not depend on this value.
    unsigned threads = 0;
};

struct MCEstimate {
    Vec3 bloch_mean = Vec3::Zero();
    Vec3 bloch_stderr = Vec3::Zero();
    std::uint64_t n = 0;
};

// Per-model precomputation (tables for tabulated models); sampling is then allocation-free.
class RadialSampler {
public:
    explicit RadialSampler(const RadialModel& r);
    double operator()(CounterRng& rng) const;

private:
    RadialModel model_;
};

class AngularSampler {
public:
    explicit AngularSampler(const AngularModel& a);
    UnitVector operator()(CounterRng& rng) const;

private:
    struct Cell {
        double t0, t1, p0, p1;
        double d00, d01, d10, d11; // corner values (θ-index, φ-index)
    };
    UnitVector sample_table(CounterRng& rng) const;

    AngularModel model_;
    std::vector<Cell> cells_;
    std::vector<double> cell_cdf_;
};

double sample_radial(const RadialModel& r, CounterRng& rng);
UnitVector sample_angular(const AngularModel& a, CounterRng& rng);

// Mean and standard error of a vector-valued statistic over cfg.n_samples draws. Chunks are
// processed in parallel and merged in chunk order.
struct SampleStatistics {
    std::vector<double> mean;
    std::vector<double> stderr_;
    std::uint64_t n = 0;
};
SampleStatistics mc_statistics(std::size_t dim, const std::function<void(CounterRng&, double*)>& draw,
                               const SamplerConfig& cfg);

MCEstimate mc_average(const SeparableEnsemble& e, const DensityMatrix& rho0, double t, const SamplerConfig& cfg);
// Same draws reused at every time; entry k equals mc_average(e, rho0, times[k], cfg) bit for bit.
std::vector<MCEstimate> mc_average(const SeparableEnsemble& e, const DensityMatrix& rho0,
                                   std::span<const double> times, const SamplerConfig& cfg);

// Sample moments of the axis: first (3) and the upper triangle of second (xx, yy, zz, xy, xz, yz).
SampleStatistics mc_directional_moments(const AngularModel& a, const SamplerConfig& cfg);
SampleStatistics mc_mean_omega(const RadialModel& r, const SamplerConfig& cfg);

} // namespace hamens
