#include "hamens/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "hamens/special.hpp"

namespace hamens {

namespace {

constexpr double pi = std::numbers::pi;
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Safeguarded Newton for a monotone CDF on [lo, hi].
template <class F, class D>
double invert_cdf(F cdf, D pdf, double target, double lo, double hi) {
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double g = cdf(x) - target;
        if (g > 0.0) hi = x; else lo = x;
        const double d = pdf(x);
        double next = d > 0.0 ? x - g / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-12 || hi - lo <= 1e-12) return next;
        x = next;
    }
    return x;
}

UnitVector from_cos(double c, double phi) { return UnitVector(std::acos(std::clamp(c, -1.0, 1.0)), phi); }

// Smallest root in [0, h] of b x + a x² = y, with a possibly ~ 0.
double linear_segment_root(double a, double b, double y, double h) {
    double x;
    if (std::abs(a) * h <= 1e-14 * std::abs(b)) {
        x = b > 0.0 ? y / b : 0.0;
    } else {
        const double disc = std::max(b * b + 4.0 * a * y, 0.0);
        x = 2.0 * y / (b + std::sqrt(disc));
    }
    return std::clamp(x, 0.0, h);
}

struct Welford {
    std::vector<double> mean, m2;
    std::uint64_t n = 0;

    explicit Welford(std::size_t dim) : mean(dim, 0.0), m2(dim, 0.0) {}

    void add(const double* x) {
        ++n;
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t k = 0; k < mean.size(); ++k) {
            const double d = x[k] - mean[k];
            mean[k] += d * inv;
            m2[k] += d * (x[k] - mean[k]);
        }
    }

    void merge(const Welford& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
        const double nt = na + nb;
        for (std::size_t k = 0; k < mean.size(); ++k) {
            const double d = o.mean[k] - mean[k];
            mean[k] += d * nb / nt;
            m2[k] += o.m2[k] + d * d * na * nb / nt;
        }
        n += o.n;
    }
};

} // namespace

// ---------------------------------------------------------------- CounterRng

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + kGolden) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))) {}

std::uint64_t CounterRng::next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::uniform_positive() noexcept { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

double CounterRng::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_positive()));
    const double a = 2.0 * pi * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

// ---------------------------------------------------------------- samplers

RadialSampler::RadialSampler(const RadialModel& r) : model_(r) {}

double RadialSampler::operator()(CounterRng& rng) const {
    const double wc = model_.cutoff();
    switch (model_.kind()) {
    case RadialKind::gaussian: {
        const double g1 = rng.normal(), g2 = rng.normal(), g3 = rng.normal();
        return wc * std::sqrt(g1 * g1 + g2 * g2 + g3 * g3);
    }
    case RadialKind::exp_cutoff: {
        const double p = rng.uniform_positive() * rng.uniform_positive() * rng.uniform_positive() * rng.uniform_positive();
        return -wc * std::log(p);
    }
    case RadialKind::reciprocal_square: return wc * rng.uniform();
    case RadialKind::tabulated: {
        const auto& tab = *model_.table();
        const double y = rng.uniform() * tab.cdf.back();
        auto it = std::upper_bound(tab.cdf.begin(), tab.cdf.end(), y);
        std::size_t i = it == tab.cdf.begin() ? 0 : static_cast<std::size_t>(it - tab.cdf.begin()) - 1;
        i = std::min(i, tab.omega.size() - 2);
        const double h = tab.omega[i + 1] - tab.omega[i];
        const double a = 0.5 * (tab.weight[i + 1] - tab.weight[i]) / h;
        return tab.omega[i] + linear_segment_root(a, tab.weight[i], y - tab.cdf[i], h);
    }
    }
    return 0.0;
}

AngularSampler::AngularSampler(const AngularModel& a) : model_(a) {
    if (a.is_builtin()) return;
    const auto& tab = *a.table();
    // cell edges as in the quadrature: clamp cells at the poles, periodic wrap in φ
    std::vector<double> te;
    std::vector<std::size_t> ti;
    if (tab.theta.front() > 0.0) {
        te.push_back(0.0);
        ti.push_back(0);
    }
    for (std::size_t i = 0; i < tab.theta.size(); ++i) {
        te.push_back(tab.theta[i]);
        ti.push_back(i);
    }
    if (tab.theta.back() < pi) {
        te.push_back(pi);
        ti.push_back(tab.theta.size() - 1);
    }
    const std::size_t np = tab.phi.size();
    const auto gl = gauss_legendre(12);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < te.size(); ++i) {
        for (std::size_t j = 0; j < np; ++j) {
            const std::size_t j1 = (j + 1) % np;
            const double p0 = tab.phi[j];
            const double p1 = j + 1 < np ? tab.phi[j + 1] : tab.phi.front() + 2.0 * pi;
            Cell c{te[i], te[i + 1], p0, p1,
                   tab.at(ti[i], j), tab.at(ti[i], j1), tab.at(ti[i + 1], j), tab.at(ti[i + 1], j1)};
            // mass = ∫∫ Θ sinθ; Θ is linear in φ so the φ integral is exact
            double m = 0.0;
            for (int k = 0; k < 12; ++k) {
                const double u = 0.5 * (1.0 + gl.nodes[k]);
                const double th = c.t0 + u * (c.t1 - c.t0);
                const double row = 0.5 * ((1.0 - u) * (c.d00 + c.d01) + u * (c.d10 + c.d11));
                m += 0.5 * gl.weights[k] * row * std::sin(th);
            }
            m *= (c.t1 - c.t0) * (c.p1 - c.p0);
            total += m;
            cells_.push_back(c);
            cell_cdf_.push_back(total);
        }
    }
    if (!(total > 0.0)) throw ModelError("angular table has zero mass");
}

UnitVector AngularSampler::sample_table(CounterRng& rng) const {
    const double y = rng.uniform() * cell_cdf_.back();
    auto it = std::upper_bound(cell_cdf_.begin(), cell_cdf_.end(), y);
    const std::size_t k = std::min(static_cast<std::size_t>(it - cell_cdf_.begin()), cells_.size() - 1);
    const Cell& c = cells_[k];
    // θ marginal inside the cell: (A + B(θ − θ0)) sinθ
    const double h = c.t1 - c.t0;
    const double A = 0.5 * (c.d00 + c.d01);
    const double B = (0.5 * (c.d10 + c.d11) - A) / h;
    auto F = [&](double th) {
        const double x = th - c.t0;
        return A * (std::cos(c.t0) - std::cos(th)) + B * (-x * std::cos(th) + std::sin(th) - std::sin(c.t0));
    };
    auto f = [&](double th) { return (A + B * (th - c.t0)) * std::sin(th); };
    const double theta = invert_cdf(F, f, rng.uniform() * F(c.t1), c.t0, c.t1);
    // φ conditional: linear between the edge values at this θ
    const double u = (theta - c.t0) / h;
    const double v0 = (1.0 - u) * c.d00 + u * c.d10;
    const double v1 = (1.0 - u) * c.d01 + u * c.d11;
    const double w = c.p1 - c.p0;
    const double mass = 0.5 * (v0 + v1) * w;
    const double phi = c.p0 + linear_segment_root(0.5 * (v1 - v0) / w, v0, rng.uniform() * mass, w);
    return UnitVector(theta, phi);
}

UnitVector AngularSampler::operator()(CounterRng& rng) const {
    switch (model_.kind()) {
    case AngularKind::sphere: {
        const double c = 2.0 * rng.uniform() - 1.0;
        return from_cos(c, 2.0 * pi * rng.uniform());
    }
    case AngularKind::bagel: {
        const double theta = invert_cdf([](double x) { return (x - std::sin(x) * std::cos(x)) / pi; },
                                        [](double x) { return 2.0 * std::sin(x) * std::sin(x) / pi; },
                                        rng.uniform(), 0.0, pi);
        return UnitVector(theta, 2.0 * pi * rng.uniform());
    }
    case AngularKind::dumbbell: {
        const double c = std::cbrt(2.0 * rng.uniform() - 1.0);
        return from_cos(c, 2.0 * pi * rng.uniform());
    }
    case AngularKind::cardioid: {
        const double c = 1.0 - 2.0 * std::sqrt(rng.uniform());
        return from_cos(c, 2.0 * pi * rng.uniform());
    }
    case AngularKind::kneaded_cardioid: {
        const double c = 1.0 - 2.0 * std::sqrt(rng.uniform());
        const double a = model_.asymmetry();
        const double phi = invert_cdf([a](double x) { return (x + 0.5 * a * std::sin(2.0 * x)) / (2.0 * pi); },
                                      [a](double x) { return (1.0 + a * std::cos(2.0 * x)) / (2.0 * pi); },
                                      rng.uniform(), 0.0, 2.0 * pi);
        return from_cos(c, phi);
    }
    case AngularKind::tabulated: return sample_table(rng);
    }
    return UnitVector(0.0, 0.0);
}

double sample_radial(const RadialModel& r, CounterRng& rng) { return RadialSampler(r)(rng); }

UnitVector sample_angular(const AngularModel& a, CounterRng& rng) { return AngularSampler(a)(rng); }

// ---------------------------------------------------------------- averaging

SampleStatistics mc_statistics(std::size_t dim, const std::function<void(CounterRng&, double*)>& draw,
                               const SamplerConfig& cfg) {
    if (cfg.n_samples < 1) throw std::invalid_argument("SamplerConfig: n_samples must be >= 1");
    if (cfg.chunk < 1) throw std::invalid_argument("SamplerConfig: chunk must be >= 1");
    const std::uint64_t n_chunks = (cfg.n_samples + cfg.chunk - 1) / cfg.chunk;
    std::vector<Welford> parts(n_chunks, Welford(dim));

    auto run_chunk = [&](std::uint64_t c) {
        CounterRng rng(cfg.seed, c);
        const std::uint64_t begin = c * cfg.chunk;
        const std::uint64_t end = std::min(cfg.n_samples, begin + cfg.chunk);
        std::vector<double> x(dim);
        for (std::uint64_t i = begin; i < end; ++i) {
            draw(rng, x.data());
            parts[c].add(x.data());
        }
    };

    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_chunks));
    if (threads <= 1) {
        for (std::uint64_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::uint64_t c = w; c < n_chunks; c += threads) run_chunk(c);
            });
        }
        for (auto& th : pool) th.join();
    }

    Welford total(dim);
    for (const auto& p : parts) total.merge(p);
    SampleStatistics out;
    out.n = total.n;
    out.mean = total.mean;
    out.stderr_.resize(dim);
    const double n = static_cast<double>(total.n);
    for (std::size_t k = 0; k < dim; ++k) {
        out.stderr_[k] = total.n > 1 ? std::sqrt(std::max(total.m2[k], 0.0) / (n - 1.0) / n) : 0.0;
    }
    return out;
}

std::vector<MCEstimate> mc_average(const SeparableEnsemble& e, const DensityMatrix& rho0,
                                   std::span<const double> times, const SamplerConfig& cfg) {
    const RadialSampler radial(e.radial());
    const AngularSampler angular(e.angular());
    const std::vector<double> ts(times.begin(), times.end());
    const auto stats = mc_statistics(
        3 * ts.size(),
        [&](CounterRng& rng, double* x) {
            const double w = radial(rng);
            const MemberHamiltonian h(w, angular(rng));
            for (std::size_t k = 0; k < ts.size(); ++k) {
                const Vec3 r = ts[k] == 0.0 ? rho0.bloch() : evolve_single(rho0, h, ts[k]).bloch();
                x[3 * k] = r.x();
                x[3 * k + 1] = r.y();
                x[3 * k + 2] = r.z();
            }
        },
        cfg);
    std::vector<MCEstimate> out(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) {
        for (int j = 0; j < 3; ++j) {
            out[k].bloch_mean[j] = stats.mean[3 * k + j];
            out[k].bloch_stderr[j] = stats.stderr_[3 * k + j];
        }
        out[k].n = stats.n;
    }
    return out;
}

MCEstimate mc_average(const SeparableEnsemble& e, const DensityMatrix& rho0, double t, const SamplerConfig& cfg) {
    const double ts[] = {t};
    return mc_average(e, rho0, ts, cfg).front();
}

SampleStatistics mc_directional_moments(const AngularModel& a, const SamplerConfig& cfg) {
    const AngularSampler angular(a);
    return mc_statistics(
        9,
        [&](CounterRng& rng, double* x) {
            const Vec3 n = angular(rng).cartesian();
            x[0] = n.x(); x[1] = n.y(); x[2] = n.z();
            x[3] = n.x() * n.x(); x[4] = n.y() * n.y(); x[5] = n.z() * n.z();
            x[6] = n.x() * n.y(); x[7] = n.x() * n.z(); x[8] = n.y() * n.z();
        },
        cfg);
}

SampleStatistics mc_mean_omega(const RadialModel& r, const SamplerConfig& cfg) {
    const RadialSampler radial(r);
    return mc_statistics(1, [&](CounterRng& rng, double* x) { x[0] = radial(rng); }, cfg);
}

} // namespace hamens
