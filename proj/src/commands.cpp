#include "hamens/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "hamens/dynamical_map.hpp"
#include "hamens/generator.hpp"
#include "hamens/montecarlo.hpp"
#include "hamens/propagation.hpp"

namespace hamens {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void write_row(std::ostream& out, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) out << ',';
        out << format_number(v);
        first = false;
    }
    out << '\n';
}

double max_finite_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v)
        if (std::isfinite(x)) m = std::max(m, std::abs(x));
    return m;
}

void write_rates(std::ostream& out, const RateTrajectory& tr, double omega_c, const double* a_value) {
    if (a_value) out << "a,";
    out << "t,omega_c_t,gamma_x,gamma_y,gamma_z,gamma_xy,omega_bar,kossakowski_min,in_pole_window,pole_crossed\n";
    for (std::size_t i = 0; i < tr.grid.size(); ++i) {
        const double t = tr.grid[i];
        bool crossed = false;
        if (i > 0)
            for (const auto& p : tr.poles) crossed = crossed || (p.time > tr.grid[i - 1] && p.time <= t);
        if (a_value) out << format_number(*a_value) << ',';
        write_row(out, {t, omega_c * t, tr.gamma_x[i], tr.gamma_y[i], tr.gamma_z[i], tr.gamma_xy[i], tr.omega_bar[i],
                        tr.kossakowski_min[i], tr.in_pole_window[i] ? 1.0 : 0.0, crossed ? 1.0 : 0.0});
    }
}

void write_pole_footer(std::ostream& out, const RateTrajectory& tr, double omega_c) {
    out << "# poles:";
    if (tr.poles.empty()) out << " none";
    for (const auto& p : tr.poles) out << ' ' << p.denominator << '@' << format_number(omega_c * p.time);
    out << '\n';
}

} // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0"; // drops the sign of −0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------- moments

int cmd_moments(const RunConfig& cfg, std::ostream& out) {
    const auto ang = cfg.angular();
    const auto analytic = directional_moments(ang);
    const auto quad = angular_quadrature(ang);
    out << "# angular model: " << ang.name() << '\n';
    out << "quantity,analytic,quadrature,abs_diff\n";
    auto row = [&](const char* name, double a, double q) {
        out << name << ',' << format_number(a) << ',' << format_number(q) << ',' << format_number(std::abs(a - q)) << '\n';
    };
    const char* first[] = {"first_x", "first_y", "first_z"};
    for (int j = 0; j < 3; ++j) row(first[j], analytic.first[j], quad.moments.first[j]);
    const char* second[] = {"second_xx", "second_yy", "second_zz"};
    for (int j = 0; j < 3; ++j) row(second[j], analytic.second(j, j), quad.moments.second(j, j));
    row("second_xy", analytic.second(0, 1), quad.moments.second(0, 1));
    row("second_xz", analytic.second(0, 2), quad.moments.second(0, 2));
    row("second_yz", analytic.second(1, 2), quad.moments.second(1, 2));
    row("norm", ang.is_builtin() ? 1.0 : quad.norm, quad.norm);
    return 0;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    const MapFamily fam(cfg.ensemble());
    const DensityMatrix rho0(cfg.initial_bloch());
    out << "t,omega_c_t,r_x,r_y,r_z,purity\n";
    for (double t : cfg.time_grid()) {
        const Vec3 r = fam.lab_map_at(t).m * rho0.bloch();
        write_row(out, {t, cfg.omega_c * t, r.x(), r.y(), r.z(), 0.5 * (1.0 + r.squaredNorm())});
    }
    return 0;
}

// ---------------------------------------------------------------- rates

int cmd_rates(const RunConfig& cfg, std::ostream& out) {
    const MapFamily fam(cfg.ensemble());
    const auto grid = cfg.time_grid();
    const auto tr = rate_trajectory(fam, grid);
    write_rates(out, tr, cfg.omega_c, nullptr);
    write_pole_footer(out, tr, cfg.omega_c);
    for (const auto& iv : divisibility_flags(tr)) {
        out << "# interval " << format_number(cfg.omega_c * iv.t_begin) << ' ' << format_number(cfg.omega_c * iv.t_end)
            << (iv.ru_divisible ? " divisible" : " non-divisible") << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- validate

std::vector<ValidationCheck> run_validation(const RunConfig& cfg, const ValidateOptions& opts) {
    std::vector<ValidationCheck> checks;
    auto add = [&](std::string name, double metric, double threshold) {
        checks.push_back({std::move(name), metric, threshold, metric <= threshold});
    };

    const auto ens = cfg.ensemble();
    const MapFamily fam(ens);
    const double wc = cfg.omega_c;
    const Vec3 r0 = cfg.initial_bloch();

    // moments: closed form against quadrature
    if (ens.angular().is_builtin()) {
        const auto a = directional_moments(ens.angular());
        const auto q = angular_quadrature(ens.angular()).moments;
        add("moments_quadrature", std::max((a.first - q.first).cwiseAbs().maxCoeff(),
                                           (a.second - q.second).cwiseAbs().maxCoeff()), 1e-10);
    }

    // radial expectations: closed form against quadrature
    if (ens.radial().is_builtin()) {
        double err = 0.0;
        for (double s : {0.1, 0.5, 1.0, 2.0, 5.0}) {
            const double t = s / wc;
            const double cq = expectation_quadrature(ens.radial(), [](double x) { return std::cos(x); }, t);
            const double sq = expectation_quadrature(ens.radial(), [](double x) { return std::sin(x); }, t);
            err = std::max({err, std::abs(cq - cos_expectation(ens.radial(), t)),
                            std::abs(sq - sin_expectation(ens.radial(), t))});
        }
        add("expectations_quadrature", err, 1e-9);
    }

    // Monte Carlo against the analytic map, in units of the standard error
    {
        const std::vector<double> times{0.2 / wc, 1.0 / wc, 3.0 / wc, 8.0 / wc};
        const auto est = mc_average(ens, DensityMatrix(r0), times, cfg.sampler());
        double worst = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            Mat3 m = fam.lab_map_at(times[k]).m;
            if (opts.flip_sin_sign) m = 0.5 * (m + m.transpose()) - 0.5 * (m - m.transpose());
            const Vec3 diff = (est[k].bloch_mean - m * r0).cwiseAbs();
            for (int j = 0; j < 3; ++j) {
                const double se = est[k].bloch_stderr[j];
                const double z = se > 0.0 ? diff[j] / se : (diff[j] <= 1e-12 ? 0.0 : kNaN);
                worst = std::isnan(z) || std::isnan(worst) ? kNaN : std::max(worst, z);
            }
        }
        add("mc_vs_map_sigma", std::isnan(worst) ? std::numeric_limits<double>::infinity() : worst, 4.0);
    }

    const auto grid = cfg.time_grid();
    const auto poles = pole_scan(fam, grid.front(), grid.back());
    auto near_pole = [&](double t) {
        for (const auto& p : poles)
            if (std::abs(p.time - t) < 1e-3 / wc) return true;
        return false;
    };

    // generator extraction against the symmetry-class formulas
    {
        const auto& m = fam.moments();
        const bool n_xy_zero = m.first.head<2>().cwiseAbs().maxCoeff() <= 1e-14;
        const bool azimuthal = n_xy_zero && std::abs(m.second(0, 0) - m.second(1, 1)) <= 1e-12;
        double err = 0.0;
        bool applicable = n_xy_zero;
        for (double t : grid) {
            if (!applicable || t == 0.0 || near_pole(t)) continue;
            try {
                const auto g = extract_generator(fam, t);
                auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
                if (azimuthal) {
                    const auto z = azimuthal_generator(fam, t);
                    err = std::max({err, rel(g.hz(), z.hz()), rel(g.gamma(Axis::x), z.gamma(Axis::x)),
                                    rel(g.gamma(Axis::y), z.gamma(Axis::y)), rel(g.gamma(Axis::z), z.gamma(Axis::z))});
                } else {
                    err = std::max(err, rel(g.gamma_xy(), offdiagonal_rate(fam, t)));
                }
                if (m.first.norm() == 0.0) {
                    const auto an = anisotropic_rates(fam, t);
                    for (int j = 0; j < 3; ++j) err = std::max(err, rel(g.kossakowski(j, j), an[j]));
                }
            } catch (const PoleProximityError&) {
            } catch (const SingularMapError&) {
            }
        }
        if (applicable) add("extraction_vs_formula", err, 1e-8);
    }

    // master equation round trip
    {
        const double t_end = std::min(cfg.t_max, 10.0) / wc;
        std::vector<double> g;
        for (int i = 0; i <= 100; ++i) g.push_back(cfg.t_min / wc + (t_end - cfg.t_min / wc) * i / 100.0);
        const auto traj = propagate_hybrid(fam, DensityMatrix(r0), g);
        double err = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            err = std::max(err, trace_distance(traj.bloch[i], Vec3(fam.lab_map_at(g[i]).m * r0)));
        }
        add("integrator_round_trip", err, 1e-6);
    }

    // complete positivity of every map on the grid
    {
        double worst = 0.0;
        for (double t : grid) worst = std::max(worst, -choi_min_eigenvalue(fam.lab_map_at(t)));
        add("choi_negativity", worst, 1e-10);
    }
    return checks;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out, const ValidateOptions& opts) {
    const auto checks = run_validation(cfg, opts);
    out << "check,metric,threshold,pass\n";
    bool ok = true;
    for (const auto& c : checks) {
        out << c.name << ',' << format_number(c.metric) << ',' << format_number(c.threshold) << ',' << (c.pass ? 1 : 0)
            << '\n';
        ok = ok && c.pass;
    }
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------- scan

std::vector<ScanSummary> scan_asymmetry(const RunConfig& cfg, const std::vector<double>& values) {
    std::vector<ScanSummary> out;
    const auto grid = cfg.time_grid();
    for (double a : values) {
        const MapFamily fam(SeparableEnsemble(cfg.radial(), AngularModel::kneaded_cardioid(a)));
        const auto tr = rate_trajectory(fam, grid);
        out.push_back({a, static_cast<int>(tr.poles.size()), max_finite_abs(tr.gamma_xy)});
    }
    return out;
}

int cmd_scan(const RunConfig& cfg, const std::string& parameter, const std::vector<double>& values, std::ostream& out) {
    if (parameter != "a") throw ConfigError("unsupported scan parameter '" + parameter + "' (only 'a')", 0, parameter);
    if (values.empty()) throw ConfigError("scan needs at least one value", 0, "angular.a_values");
    for (double a : values)
        if (a < 0.0 || a > 1.0) throw ConfigError("scan values of a must lie in [0, 1]", 0, "angular.a_values");

    const auto grid = cfg.time_grid();
    std::vector<ScanSummary> summary;
    bool header = true;
    for (double a : values) {
        const MapFamily fam(SeparableEnsemble(cfg.radial(), AngularModel::kneaded_cardioid(a)));
        const auto tr = rate_trajectory(fam, grid);
        std::ostringstream block;
        write_rates(block, tr, cfg.omega_c, &a);
        const std::string text = block.str();
        out << (header ? text : text.substr(text.find('\n') + 1));
        header = false;
        summary.push_back({a, static_cast<int>(tr.poles.size()), max_finite_abs(tr.gamma_xy)});
    }
    out << "# summary: a,pole_count,max_abs_gamma_xy\n";
    for (const auto& s : summary) {
        out << "# " << format_number(s.value) << ',' << s.pole_count << ',' << format_number(s.max_abs_gamma_xy) << '\n';
    }
    return 0;
}

} // namespace hamens
