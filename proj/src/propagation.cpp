#include "hamens/propagation.hpp"

#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>

namespace hamens {

namespace {

using State = std::array<double, 3>;
namespace odeint = boost::numeric::odeint;

} // namespace

StateTrajectory integrate_master(const GeneratorFunction& gen, const DensityMatrix& rho0, double t0, double t1,
                                 std::span<const double> times, Tolerance tol) {
    if (!(t1 >= t0)) throw std::invalid_argument("integrate_master: empty span");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t0 || times[i] > t1 || (i > 0 && times[i] < times[i - 1])) {
            throw std::invalid_argument("integrate_master: output times must be increasing within the span");
        }
    }
    StateTrajectory out;
    out.times.assign(times.begin(), times.end());
    out.bloch.reserve(times.size());
    out.integrated.assign(times.size(), true);

    // leading outputs at t0 need no integration
    std::size_t first = 0;
    while (first < times.size() && times[first] == t0) {
        out.bloch.push_back(rho0.bloch());
        ++first;
    }
    if (first == times.size()) return out;

    double last_t = t0;
    auto rhs = [&](const State& r, State& dr, double t) {
        last_t = t;
        if (!std::isfinite(r[0]) || !std::isfinite(r[1]) || !std::isfinite(r[2])) {
            throw IntegrationError("state diverged", t);
        }
        Mat3 l;
        try {
            l = bloch_generator(gen(t));
        } catch (const std::exception& e) {
            throw IntegrationError(std::string("generator evaluation failed: ") + e.what(), t);
        }
        if (!l.allFinite()) throw IntegrationError("non-finite generator", t);
        const Vec3 v = l * Vec3(r[0], r[1], r[2]);
        dr = {v.x(), v.y(), v.z()};
    };

    std::vector<double> obs_times;
    obs_times.push_back(t0);
    obs_times.insert(obs_times.end(), times.begin() + static_cast<std::ptrdiff_t>(first), times.end());

    State x{rho0.bloch().x(), rho0.bloch().y(), rho0.bloch().z()};
    auto stepper = odeint::make_dense_output(tol.absolute, tol.relative, odeint::runge_kutta_dopri5<State>());
    const double dt0 = std::max((obs_times.back() - t0) * 1e-3, 1e-12);
    std::size_t k = 0;
    try {
        odeint::integrate_times(
            stepper, rhs, x, obs_times.begin(), obs_times.end(), dt0,
            [&](const State& s, double) {
                if (k++ == 0) return;
                if (!std::isfinite(s[0]) || !std::isfinite(s[1]) || !std::isfinite(s[2])) {
                    throw IntegrationError("state diverged", last_t);
                }
                out.bloch.emplace_back(s[0], s[1], s[2]);
            },
            odeint::max_step_checker(100000));
    } catch (const IntegrationError&) {
        throw;
    } catch (const std::exception& e) {
        throw IntegrationError(std::string("step size collapsed: ") + e.what(), last_t);
    }
    return out;
}

double trace_distance(const Vec3& a, const Vec3& b) { return 0.5 * (a - b).norm(); }

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) { return trace_distance(a.bloch(), b.bloch()); }

GeneratorFunction family_generator(const MapFamily& family) {
    return [&family](double t) { return to_lab(extract_generator(family, t), family.frame()); };
}

StateTrajectory propagate_hybrid(const MapFamily& family, const DensityMatrix& rho0, std::span<const double> grid,
                                 Tolerance tol, double margin) {
    StateTrajectory out;
    if (grid.empty()) return out;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("propagate_hybrid: grid must be strictly increasing");

    out.times.assign(grid.begin(), grid.end());
    out.bloch.assign(grid.size(), Vec3::Zero());
    out.integrated.assign(grid.size(), false);
    const double scale = margin / family.radial().cutoff();
    const auto poles = pole_scan(family, grid.front(), grid.back());
    auto exact = [&](double t) { return Vec3(family.lab_map_at(t).m * rho0.bloch()); };

    // pole-free segments [a, b]
    std::vector<std::pair<double, double>> segments;
    double a = grid.front();
    for (const auto& p : poles) {
        if (p.time - scale > a) segments.emplace_back(a, p.time - scale);
        a = std::max(a, p.time + scale);
    }
    if (grid.back() > a) segments.emplace_back(a, grid.back());

    const auto gen = family_generator(family);
    std::size_t i = 0;
    for (const auto& [sa, sb] : segments) {
        for (; i < grid.size() && grid[i] < sa; ++i) out.bloch[i] = exact(grid[i]);
        std::vector<double> ts;
        const std::size_t begin = i;
        for (; i < grid.size() && grid[i] <= sb; ++i) ts.push_back(grid[i]);
        if (ts.empty()) continue;
        const Vec3 start = sa == grid.front() ? rho0.bloch() : exact(sa);
        const auto seg = integrate_master(gen, DensityMatrix(start.norm() > 1.0 ? Vec3(start / start.norm()) : start),
                                          sa, sb, ts, tol);
        for (std::size_t k = 0; k < ts.size(); ++k) {
            out.bloch[begin + k] = seg.bloch[k];
            out.integrated[begin + k] = true;
        }
    }
    for (; i < grid.size(); ++i) out.bloch[i] = exact(grid[i]);
    return out;
}

} // namespace hamens
