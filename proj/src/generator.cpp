#include "hamens/generator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace hamens {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_pole(double denom, double scale, double t, const char* name) {
    if (!(std::abs(denom) >= kPoleThreshold * std::max(scale, 1e-300))) {
        throw PoleProximityError(std::string("rate denominator ") + name + " vanishes at t = " + std::to_string(t), t, name);
    }
}

bool zero_xy_first(const MapFamily& fam) {
    return std::abs(fam.moments().first.x()) <= 1e-14 && std::abs(fam.moments().first.y()) <= 1e-14;
}

// sin s/s and (sin s − s cos s)/s², stable near s = 0
double sinc(double s) {
    if (std::abs(s) < 1e-2) {
        const double s2 = s * s;
        return 1.0 - s2 / 6.0 + s2 * s2 / 120.0 - s2 * s2 * s2 / 5040.0;
    }
    return std::sin(s) / s;
}

double rs_numerator_over_s2(double s) {
    if (std::abs(s) < 1e-1) {
        const double s2 = s * s;
        return s * (1.0 / 3.0 - s2 / 30.0 + s2 * s2 / 840.0 - s2 * s2 * s2 / 45360.0);
    }
    return (std::sin(s) - s * std::cos(s)) / (s * s);
}

// Rates of the form  k·ω_c·g(s) / (a·h(s) + b·e(s))  shared by the three geometries.
// For the reciprocal square every term is divided through by s².
double closed_form_term(const RadialModel& r, double t, double k, double a, double b) {
    const double wc = r.cutoff();
    const double s = wc * t;
    switch (r.kind()) {
    case RadialKind::gaussian: {
        const double g = s * (3.0 - s * s);
        return k * wc * g / (a * (1.0 - s * s) + b * std::exp(0.5 * s * s));
    }
    case RadialKind::exp_cutoff: {
        const double s2 = s * s;
        const double q = 1.0 + s2;
        const double n = 1.0 - 6.0 * s2 + s2 * s2;
        const double num = (3.0 - s2) * q + 2.0 * n;
        return 4.0 * k * wc * s * num / (a * n * q + b * std::pow(q, 5));
    }
    case RadialKind::reciprocal_square:
        return k * wc * rs_numerator_over_s2(s) / (a * sinc(s) + b);
    case RadialKind::tabulated: break;
    }
    throw ModelError("closed-form rates exist only for the built-in radial models");
}

} // namespace

// ---------------------------------------------------------------- LindbladGenerator

Vec3 LindbladGenerator::kossakowski_eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Mat3> es(kossakowski, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

Mat3 LindbladGenerator::kossakowski_eigenvectors() const {
    Eigen::SelfAdjointEigenSolver<Mat3> es(kossakowski);
    return es.eigenvectors();
}

Mat3 bloch_generator(const LindbladGenerator& g) {
    return g.kossakowski - g.kossakowski.trace() * Mat3::Identity() + cross_matrix(g.hamiltonian);
}

LindbladGenerator generator_from_bloch(const Mat3& L, double t) {
    LindbladGenerator g;
    g.time = t;
    const Mat3 sym = 0.5 * (L + L.transpose());
    g.kossakowski = sym - 0.5 * sym.trace() * Mat3::Identity();
    g.hamiltonian = Vec3(0.5 * (L(2, 1) - L(1, 2)), 0.5 * (L(0, 2) - L(2, 0)), 0.5 * (L(1, 0) - L(0, 1)));
    return g;
}

LindbladGenerator to_lab(const LindbladGenerator& g, const Mat3& u) {
    LindbladGenerator out = g;
    out.kossakowski = u * g.kossakowski * u.transpose();
    out.hamiltonian = u * g.hamiltonian;
    return out;
}

// ---------------------------------------------------------------- closed forms

double isotropic_rate(const RadialModel& r, double t) {
    const double c = cos_expectation(r, t);
    const double w = (2.0 * c + 1.0) / 3.0;
    check_pole(w, 1.0, t, "w");
    if (r.kind() == RadialKind::tabulated) {
        const double w_dot = 2.0 * cos_expectation_rate(r, t) / 3.0;
        return -w_dot / (2.0 * w);
    }
    return closed_form_term(r, t, 1.0, 2.0, 1.0);
}

std::array<double, 3> bagel_rates(const RadialModel& r, double t) {
    const double gx = closed_form_term(r, t, 3.0, 6.0, 2.0);
    const double gz = closed_form_term(r, t, 5.0, 5.0, 3.0) - gx;
    return {gx, gx, gz};
}

std::array<double, 3> dumbbell_rates(const RadialModel& r, double t) {
    const double gx = closed_form_term(r, t, 1.0, 2.0, 3.0);
    const double gz = closed_form_term(r, t, 4.0, 4.0, 1.0) - gx;
    return {gx, gx, gz};
}

std::array<double, 3> anisotropic_rates(const MapFamily& fam, double t) {
    if (fam.moments().first.cwiseAbs().maxCoeff() > 1e-14) {
        throw ModelError("anisotropic_rates requires vanishing first directional moments");
    }
    std::array<double, 3> half_log_rate{};
    for (int j = 0; j < 3; ++j) {
        const double f = fam.f(static_cast<Axis>(j), t);
        static const char* names[] = {"f_x", "f_y", "f_z"};
        check_pole(f, 1.0, t, names[j]);
        half_log_rate[j] = fam.f_rate(static_cast<Axis>(j), t) / (2.0 * f);
    }
    const double sum = half_log_rate[0] + half_log_rate[1] + half_log_rate[2];
    std::array<double, 3> out{};
    for (int j = 0; j < 3; ++j) out[j] = 2.0 * half_log_rate[j] - sum;
    return out;
}

LindbladGenerator azimuthal_generator(const MapFamily& fam, double t) {
    const auto& m = fam.moments();
    if (!zero_xy_first(fam) || std::abs(m.second(0, 0) - m.second(1, 1)) > 1e-12) {
        throw ModelError("azimuthal_generator requires <n_x> = <n_y> = 0 and <n_x^2> = <n_y^2>");
    }
    const double nz = m.first.z();
    const double fx = fam.f(Axis::x, t);
    const double dfx = fam.f_rate(Axis::x, t);
    const double fz = fam.f(Axis::z, t);
    const double dfz = fam.f_rate(Axis::z, t);
    const double sn = fam.expectations().sin_t(t);
    const double dsn = fam.expectations().sin_rate(t);

    const double d = fx * fx + nz * nz * sn * sn;
    check_pole(d, fx * fx + nz * nz * sn * sn, t, "D");
    check_pole(fz, 1.0, t, "f_z");

    LindbladGenerator g;
    g.time = t;
    g.hamiltonian.z() = nz * (fx * dsn - dfx * sn) / d;
    const double gx = -dfz / (2.0 * fz);
    const double gz = -fx * dfx / d - gx - nz * nz * sn * dsn / d;
    g.kossakowski.diagonal() << gx, gx, gz;
    return g;
}

double offdiagonal_rate(const MapFamily& fam, double t) {
    if (!zero_xy_first(fam)) throw ModelError("offdiagonal_rate requires <n_x> = <n_y> = 0");
    const double nz = fam.moments().first.z();
    const double fx = fam.f(Axis::x, t);
    const double fy = fam.f(Axis::y, t);
    const double dfx = fam.f_rate(Axis::x, t);
    const double dfy = fam.f_rate(Axis::y, t);
    const double sn = fam.expectations().sin_t(t);
    const double dsn = fam.expectations().sin_rate(t);
    const double d = fx * fy + nz * nz * sn * sn;
    check_pole(d, std::abs(fx * fy) + nz * nz * sn * sn, t, "D");
    return -nz * (fx - fy) * dsn / (2.0 * d) + nz * (dfx - dfy) * sn / (2.0 * d);
}

LindbladGenerator extract_generator(const MapFamily& fam, double t) {
    const Mat3 m = fam.matrix_at(t);
    const Vec3 sv = Eigen::JacobiSVD<Mat3>(m).singularValues();
    if (!(sv[2] >= kPoleThreshold * std::max(sv[0], 1e-300))) {
        throw SingularMapError("averaged map is singular at t = " + std::to_string(t), t);
    }
    const Mat3 l = fam.matrix_rate(t) * m.inverse();
    return generator_from_bloch(l, t);
}

// ---------------------------------------------------------------- poles

namespace {

struct Denominator {
    std::string name;
    std::function<double(double)> value;
};

std::vector<Denominator> denominators(const MapFamily& fam) {
    const auto& m = fam.moments();
    std::vector<Denominator> out;
    auto f = [&fam](Axis j) { return [&fam, j](double t) { return fam.f(j, t); }; };
    if (zero_xy_first(fam)) {
        const double nz = m.first.z();
        if (nz == 0.0) {
            out.push_back({"f_x", f(Axis::x)});
            if (m.second(1, 1) != m.second(0, 0)) out.push_back({"f_y", f(Axis::y)});
            if (m.second(2, 2) != m.second(0, 0) && m.second(2, 2) != m.second(1, 1)) out.push_back({"f_z", f(Axis::z)});
        } else {
            out.push_back({"f_z", f(Axis::z)});
            out.push_back({"D", [&fam, nz](double t) {
                               const double sn = fam.expectations().sin_t(t);
                               return fam.f(Axis::x, t) * fam.f(Axis::y, t) + nz * nz * sn * sn;
                           }});
        }
    } else {
        out.push_back({"det", [&fam](double t) { return fam.matrix_at(t).determinant(); }});
    }
    return out;
}

} // namespace

std::vector<Pole> pole_scan(const MapFamily& fam, double t0, double t1) {
    if (!std::isfinite(t0) || !std::isfinite(t1) || t1 < t0) throw std::invalid_argument("pole_scan: invalid window");
    const double wc = fam.radial().cutoff();
    const int steps = std::max(2000, static_cast<int>(std::ceil((t1 - t0) * wc * 200.0)));
    const double h = (t1 - t0) / steps;
    std::vector<Pole> poles;
    for (const auto& den : denominators(fam)) {
        double ta = t0;
        double fa = den.value(ta);
        for (int i = 1; i <= steps; ++i) {
            const double tb = t0 + i * h;
            const double fb = den.value(tb);
            if (fa == 0.0) {
                if (ta > t0) poles.push_back({ta, den.name});
            } else if (fa * fb < 0.0) {
                double lo = ta, hi = tb, flo = fa;
                for (int it = 0; it < 200 && (hi - lo) > 1e-10 * std::max(std::abs(lo), 1e-3 / wc) * 1e-2; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = den.value(mid);
                    if (fm == 0.0) {
                        lo = hi = mid;
                        break;
                    }
                    if ((fm < 0.0) == (flo < 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                poles.push_back({0.5 * (lo + hi), den.name});
            }
            ta = tb;
            fa = fb;
        }
    }
    std::sort(poles.begin(), poles.end(), [](const Pole& a, const Pole& b) { return a.time < b.time; });
    return poles;
}

RateTrajectory rate_trajectory(const MapFamily& fam, std::span<const double> grid) {
    RateTrajectory tr;
    tr.grid.assign(grid.begin(), grid.end());
    const std::size_t n = grid.size();
    for (auto* v : {&tr.gamma_x, &tr.gamma_y, &tr.gamma_z, &tr.gamma_xy, &tr.omega_bar, &tr.kossakowski_min,
                    &tr.divisibility_margin, &tr.rate_scale}) {
        v->assign(n, kNaN);
    }
    tr.in_pole_window.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        try {
            const auto g = extract_generator(fam, grid[i]);
            const Mat3& k = g.kossakowski;
            tr.gamma_x[i] = k(0, 0);
            tr.gamma_y[i] = k(1, 1);
            tr.gamma_z[i] = k(2, 2);
            tr.gamma_xy[i] = k(0, 1);
            tr.omega_bar[i] = g.hz();
            tr.kossakowski_min[i] = g.min_kossakowski_eigenvalue();
            Mat3 off = k;
            off.diagonal().setZero();
            const bool diagonal = off.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, k.cwiseAbs().maxCoeff());
            tr.divisibility_margin[i] = diagonal ? k.diagonal().minCoeff() : tr.kossakowski_min[i];
            tr.rate_scale[i] = k.cwiseAbs().maxCoeff();
        } catch (const SingularMapError&) {
            tr.in_pole_window[i] = true;
        }
    }
    if (n >= 2) tr.poles = pole_scan(fam, grid.front(), grid.back());
    return tr;
}

std::vector<DivisibilityInterval> divisibility_flags(const RateTrajectory& traj) {
    constexpr double kRelativeTolerance = 1e-10;
    std::vector<DivisibilityInterval> out;
    const auto& g = traj.grid;
    const auto& m = traj.divisibility_margin;
    if (g.empty()) return out;

    auto is_pole_between = [&](double a, double b) {
        for (const auto& p : traj.poles)
            if (p.time > a && p.time <= b) return true;
        return false;
    };
    auto label = [&](std::size_t i) { return m[i] >= -kRelativeTolerance * traj.rate_scale[i]; };

    bool open = false;
    DivisibilityInterval cur{};
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::isnan(m[i])) {
            if (open) {
                cur.t_end = g[i];
                out.push_back(cur);
                open = false;
            }
            continue;
        }
        if (!open) {
            cur = {g[i], g[i], label(i)};
            open = true;
            continue;
        }
        const double t_prev = g[i - 1];
        if (is_pole_between(t_prev, g[i])) {
            double tp = g[i];
            for (const auto& p : traj.poles)
                if (p.time > t_prev && p.time <= g[i]) { tp = p.time; break; }
            cur.t_end = tp;
            out.push_back(cur);
            cur = {tp, g[i], label(i)};
            continue;
        }
        if (label(i) != cur.ru_divisible) {
            // linear interpolation of the margin's zero crossing
            const double a = m[i - 1], b = m[i];
            const double tz = (a != b) ? t_prev + (g[i] - t_prev) * (-a) / (b - a) : g[i];
            const double t_switch = std::clamp(tz, t_prev, g[i]);
            cur.t_end = t_switch;
            out.push_back(cur);
            cur = {t_switch, g[i], label(i)};
        } else {
            cur.t_end = g[i];
        }
    }
    if (open) out.push_back(cur);
    return out;
}

} // namespace hamens
