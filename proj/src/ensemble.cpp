#include "hamens/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hamens/special.hpp"

namespace hamens {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_cutoff(double omega_c) {
    if (!(omega_c > 0.0) || !std::isfinite(omega_c)) {
        throw ModelError("radial model: cutoff frequency must be positive and finite");
    }
}

const RadialTable& require_table(const RadialModel& r) {
    if (r.table() == nullptr || r.table()->omega.size() < 2) {
        throw ModelError("tabulated radial model has an empty grid");
    }
    return *r.table();
}

} // namespace

// ---------------------------------------------------------------- RadialModel

RadialModel::RadialModel(RadialKind kind, double omega_c, std::shared_ptr<const RadialTable> table)
    : kind_(kind), omega_c_(omega_c), table_(std::move(table)) {}

RadialModel RadialModel::gaussian(double omega_c) {
    require_cutoff(omega_c);
    return RadialModel(RadialKind::gaussian, omega_c);
}

RadialModel RadialModel::exp_cutoff(double omega_c) {
    require_cutoff(omega_c);
    return RadialModel(RadialKind::exp_cutoff, omega_c);
}

RadialModel RadialModel::reciprocal_square(double omega_c) {
    require_cutoff(omega_c);
    return RadialModel(RadialKind::reciprocal_square, omega_c);
}

RadialModel RadialModel::tabulated(std::vector<double> omega, std::vector<double> density) {
    if (omega.size() != density.size()) throw ModelError("tabulated radial model: column length mismatch");
    if (omega.size() < 2) throw ModelError("tabulated radial model has an empty grid (need at least 2 nodes)");
    std::vector<std::size_t> order(omega.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return omega[a] < omega[b]; });

    auto table = std::make_shared<RadialTable>();
    for (auto i : order) {
        if (!std::isfinite(omega[i]) || omega[i] < 0.0) throw ModelError("tabulated radial model: omega must be finite and >= 0");
        if (!std::isfinite(density[i]) || density[i] < 0.0) throw ModelError("tabulated radial model: P must be finite and >= 0");
        if (!table->omega.empty() && omega[i] <= table->omega.back()) {
            throw ModelError("tabulated radial model: duplicate omega node");
        }
        table->omega.push_back(omega[i]);
        table->density.push_back(density[i]);
        table->weight.push_back(density[i] * omega[i] * omega[i]);
    }
    table->cdf.assign(table->omega.size(), 0.0);
    for (std::size_t i = 1; i < table->omega.size(); ++i) {
        const double h = table->omega[i] - table->omega[i - 1];
        table->cdf[i] = table->cdf[i - 1] + 0.5 * h * (table->weight[i] + table->weight[i - 1]);
    }
    if (!(table->cdf.back() > 0.0)) throw ModelError("tabulated radial model: effective measure integrates to zero");
    const double scale = table->omega.back();
    return RadialModel(RadialKind::tabulated, scale, std::move(table));
}

std::string RadialModel::name() const {
    switch (kind_) {
    case RadialKind::gaussian: return "gaussian";
    case RadialKind::exp_cutoff: return "exp_cutoff";
    case RadialKind::reciprocal_square: return "reciprocal_square";
    case RadialKind::tabulated: return "tabulated";
    }
    return "unknown";
}

double RadialModel::effective_weight(double w) const {
    if (w < 0.0) return 0.0;
    const double wc = omega_c_;
    switch (kind_) {
    case RadialKind::gaussian: {
        const double x = w / wc;
        return std::sqrt(2.0 / pi) * x * x * std::exp(-0.5 * x * x) / wc;
    }
    case RadialKind::exp_cutoff: {
        const double x = w / wc;
        return x * x * x * std::exp(-x) / (6.0 * wc);
    }
    case RadialKind::reciprocal_square:
        // P ω² is flat: the 1/ω² singularity is cancelled by the Jacobian
        return w <= wc ? 1.0 / wc : 0.0;
    case RadialKind::tabulated: {
        const auto& tab = *table_;
        if (w < tab.omega.front() || w > tab.omega.back()) return 0.0;
        auto it = std::upper_bound(tab.omega.begin(), tab.omega.end(), w);
        if (it == tab.omega.end()) return tab.weight.back();
        const auto i = static_cast<std::size_t>(it - tab.omega.begin());
        const double u = (w - tab.omega[i - 1]) / (tab.omega[i] - tab.omega[i - 1]);
        return (1.0 - u) * tab.weight[i - 1] + u * tab.weight[i];
    }
    }
    return 0.0;
}

double RadialModel::density(double w) const {
    switch (kind_) {
    case RadialKind::gaussian:
        return std::sqrt(2.0 / pi) * std::exp(-0.5 * w * w / (omega_c_ * omega_c_)) / std::pow(omega_c_, 3);
    case RadialKind::exp_cutoff:
        return w * std::exp(-w / omega_c_) / (6.0 * std::pow(omega_c_, 4));
    case RadialKind::reciprocal_square:
        if (w <= 0.0) return kInf;
        return w <= omega_c_ ? 1.0 / (omega_c_ * w * w) : 0.0;
    case RadialKind::tabulated: {
        if (w == 0.0) return table_->omega.front() == 0.0 ? table_->density.front() : 0.0;
        return effective_weight(w) / (w * w);
    }
    }
    return 0.0;
}

double RadialModel::support_max() const {
    switch (kind_) {
    case RadialKind::gaussian:
    case RadialKind::exp_cutoff: return kInf;
    case RadialKind::reciprocal_square: return omega_c_;
    case RadialKind::tabulated: return table_->omega.back();
    }
    return kInf;
}

double RadialModel::norm() const { return kind_ == RadialKind::tabulated ? table_->cdf.back() : 1.0; }

RadialModel RadialModel::scaled(double factor) const {
    if (kind_ != RadialKind::tabulated) throw ModelError("only tabulated radial models can be rescaled");
    if (!(factor > 0.0) || !std::isfinite(factor)) throw ModelError("radial rescale factor must be positive");
    std::vector<double> p = table_->density;
    for (auto& v : p) v *= factor;
    return tabulated(table_->omega, std::move(p));
}

// ---------------------------------------------------------------- radial expectations

double radial_integral(const RadialModel& r, const std::function<double(double)>& h, double rate, double tolerance) {
    using boost::math::quadrature::gauss_kronrod;
    constexpr std::size_t kMaxPanels = 4'000'000;

    double panel = r.cutoff();
    if (rate > 0.0) panel = std::min(panel, pi / rate);

    std::vector<double> breaks;
    if (r.kind() == RadialKind::tabulated) {
        breaks = require_table(r).omega;
    } else {
        breaks = {0.0, r.support_max()};
    }

    auto integrand = [&](double w) { return h(w) * r.effective_weight(w); };
    double total = 0.0;
    double residual = 0.0;
    std::size_t panels = 0;
    // Relative tolerance per panel with an absolute floor (the measure has unit mass);
    // GK15 error estimates do not drop much below 1e-13 relative on narrow panels.
    std::function<double(double, double, int)> refine = [&](double a, double b, int depth) -> double {
        double err = 0.0, l1 = 0.0;
        const double v = gauss_kronrod<double, 15>::integrate(integrand, a, b, 0, 0.0, &err, &l1);
        if (err <= std::max(tolerance * l1, 1e-15) || depth >= 12) {
            residual += err;
            return v;
        }
        const double m = 0.5 * (a + b);
        return refine(a, m, depth + 1) + refine(m, b, depth + 1);
    };
    for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
        const double lo = breaks[seg];
        const double hi = breaks[seg + 1];
        double a = lo;
        while (a < hi) {
            const double b = std::min(hi, a + panel);
            if (!std::isfinite(hi)) {
                // tail truncation: built-in envelopes decrease monotonically past 4 ω_c
                const double wc = r.cutoff();
                if (a > 4.0 * wc && r.effective_weight(a) * wc < 1e-16) break;
            }
            total += refine(a, b, 0);
            a = b;
            if (++panels > kMaxPanels) throw QuadratureError("radial quadrature: panel budget exhausted", residual);
        }
    }
    if (!(residual < 1e-9) || !std::isfinite(total)) {
        throw QuadratureError("radial quadrature did not converge (residual " + std::to_string(residual) + ")", residual);
    }
    return total;
}

double expectation_quadrature(const RadialModel& r, const std::function<double(double)>& f, double t, double tolerance) {
    return radial_integral(r, [&](double w) { return f(w * t); }, std::abs(t), tolerance);
}

double cos_expectation(const RadialModel& r, double t) {
    const double s = r.cutoff() * t;
    switch (r.kind()) {
    case RadialKind::gaussian: return std::exp(-0.5 * s * s) * (1.0 - s * s);
    case RadialKind::exp_cutoff: {
        const double s2 = s * s;
        return (1.0 - 6.0 * s2 + s2 * s2) / std::pow(1.0 + s2, 4);
    }
    case RadialKind::reciprocal_square: {
        if (std::abs(s) < 1e-2) {
            const double s2 = s * s;
            return 1.0 - s2 / 6.0 + s2 * s2 / 120.0 - s2 * s2 * s2 / 5040.0;
        }
        return std::sin(s) / s;
    }
    case RadialKind::tabulated:
        require_table(r);
        return radial_integral(r, [t](double w) { return std::cos(w * t); }, std::abs(t));
    }
    return 0.0;
}

double sin_expectation(const RadialModel& r, double t) {
    const double s = r.cutoff() * t;
    switch (r.kind()) {
    case RadialKind::gaussian:
        // e^{-s²/2} erfi(s/√2) = (2/√π) F(s/√2) keeps large s finite
        return std::sqrt(2.0 / pi) * s + 2.0 / std::sqrt(pi) * (1.0 - s * s) * dawson(s / std::numbers::sqrt2);
    case RadialKind::exp_cutoff: {
        const double s2 = s * s;
        return (4.0 * s - 4.0 * s * s2) / std::pow(1.0 + s2, 4);
    }
    case RadialKind::reciprocal_square: {
        if (std::abs(s) < 1e-2) {
            const double s2 = s * s;
            return s * (0.5 - s2 / 24.0 + s2 * s2 / 720.0);
        }
        return (1.0 - std::cos(s)) / s;
    }
    case RadialKind::tabulated:
        require_table(r);
        return radial_integral(r, [t](double w) { return std::sin(w * t); }, std::abs(t));
    }
    return 0.0;
}

double cos_expectation_rate(const RadialModel& r, double t) {
    const double wc = r.cutoff();
    const double s = wc * t;
    switch (r.kind()) {
    case RadialKind::gaussian: return wc * std::exp(-0.5 * s * s) * (s * s * s - 3.0 * s);
    case RadialKind::exp_cutoff: {
        const double s2 = s * s;
        const double q = 1.0 + s2;
        const double num = 1.0 - 6.0 * s2 + s2 * s2;
        const double dnum = -12.0 * s + 4.0 * s * s2;
        return wc * (dnum * q - 8.0 * s * num) / std::pow(q, 5);
    }
    case RadialKind::reciprocal_square: {
        if (std::abs(s) < 1e-2) {
            const double s2 = s * s;
            return wc * s * (-1.0 / 3.0 + s2 / 30.0 - s2 * s2 / 840.0);
        }
        return wc * (s * std::cos(s) - std::sin(s)) / (s * s);
    }
    case RadialKind::tabulated:
        require_table(r);
        return -radial_integral(r, [t](double w) { return w * std::sin(w * t); }, std::abs(t));
    }
    return 0.0;
}

double sin_expectation_rate(const RadialModel& r, double t) {
    const double wc = r.cutoff();
    const double s = wc * t;
    switch (r.kind()) {
    case RadialKind::gaussian: {
        const double u = s / std::numbers::sqrt2;
        return wc * (std::sqrt(2.0 / pi) +
                     2.0 / std::sqrt(pi) * (-2.0 * s * dawson(u) + (1.0 - s * s) * dawson_derivative(u) / std::numbers::sqrt2));
    }
    case RadialKind::exp_cutoff: {
        const double s2 = s * s;
        const double q = 1.0 + s2;
        const double num = 4.0 * s - 4.0 * s * s2;
        const double dnum = 4.0 - 12.0 * s2;
        return wc * (dnum * q - 8.0 * s * num) / std::pow(q, 5);
    }
    case RadialKind::reciprocal_square: {
        if (std::abs(s) < 1e-2) {
            const double s2 = s * s;
            return wc * (0.5 - s2 / 8.0 + s2 * s2 / 144.0);
        }
        return wc * (s * std::sin(s) - 1.0 + std::cos(s)) / (s * s);
    }
    case RadialKind::tabulated:
        require_table(r);
        return radial_integral(r, [t](double w) { return w * std::cos(w * t); }, std::abs(t));
    }
    return 0.0;
}

double mean_omega(const RadialModel& r) {
    const double wc = r.cutoff();
    switch (r.kind()) {
    case RadialKind::gaussian: return 2.0 * std::sqrt(2.0 / pi) * wc;
    case RadialKind::exp_cutoff: return 4.0 * wc;
    case RadialKind::reciprocal_square: return 0.5 * wc;
    case RadialKind::tabulated: return radial_integral(r, [](double w) { return w; }, 0.0);
    }
    return 0.0;
}

// ---------------------------------------------------------------- AngularModel

AngularModel::AngularModel(AngularKind kind, double a, std::shared_ptr<const AngularTable> table)
    : kind_(kind), a_(a), table_(std::move(table)) {}

AngularModel AngularModel::sphere() { return AngularModel(AngularKind::sphere, 0.0); }
AngularModel AngularModel::bagel() { return AngularModel(AngularKind::bagel, 0.0); }
AngularModel AngularModel::dumbbell() { return AngularModel(AngularKind::dumbbell, 0.0); }
AngularModel AngularModel::cardioid() { return AngularModel(AngularKind::cardioid, 0.0); }

AngularModel AngularModel::kneaded_cardioid(double a) {
    if (!(a >= 0.0 && a <= 1.0)) throw ModelError("kneaded cardioid: asymmetry a must lie in [0, 1]");
    return AngularModel(AngularKind::kneaded_cardioid, a);
}

AngularModel AngularModel::tabulated(std::vector<double> theta, std::vector<double> phi, std::vector<double> values) {
    if (theta.empty() || phi.empty()) throw ModelError("tabulated angular model has an empty grid");
    if (values.size() != theta.size() * phi.size()) throw ModelError("tabulated angular model: grid size mismatch");
    for (std::size_t i = 1; i < theta.size(); ++i)
        if (!(theta[i] > theta[i - 1])) throw ModelError("tabulated angular model: theta nodes must increase");
    for (std::size_t j = 1; j < phi.size(); ++j)
        if (!(phi[j] > phi[j - 1])) throw ModelError("tabulated angular model: phi nodes must increase");
    if (theta.front() < 0.0 || theta.back() > pi) throw ModelError("tabulated angular model: theta outside [0, pi]");
    if (phi.front() < 0.0 || phi.back() >= 2.0 * pi) throw ModelError("tabulated angular model: phi outside [0, 2pi)");
    for (double v : values)
        if (!std::isfinite(v) || v < 0.0) throw ModelError("tabulated angular model: Theta must be finite and >= 0");
    auto table = std::make_shared<AngularTable>(AngularTable{std::move(theta), std::move(phi), std::move(values)});
    AngularModel model(AngularKind::tabulated, 0.0, std::move(table));
    model.quadrature_ = std::make_shared<const AngularQuadrature>(angular_quadrature(model));
    return model;
}

std::string AngularModel::name() const {
    switch (kind_) {
    case AngularKind::sphere: return "sphere";
    case AngularKind::bagel: return "bagel";
    case AngularKind::dumbbell: return "dumbbell";
    case AngularKind::cardioid: return "cardioid";
    case AngularKind::kneaded_cardioid: return "kneaded";
    case AngularKind::tabulated: return "tabulated";
    }
    return "unknown";
}

double AngularModel::density(double theta, double phi) const {
    switch (kind_) {
    case AngularKind::sphere: return 1.0 / (4.0 * pi);
    case AngularKind::bagel: return std::sin(theta) / (pi * pi);
    case AngularKind::dumbbell: {
        const double c = std::cos(theta);
        return 3.0 * c * c / (4.0 * pi);
    }
    case AngularKind::cardioid: return (1.0 - std::cos(theta)) / (4.0 * pi);
    case AngularKind::kneaded_cardioid:
        return (1.0 - std::cos(theta)) * (1.0 + a_ * std::cos(2.0 * phi)) / (4.0 * pi);
    case AngularKind::tabulated: {
        const auto& tab = *table_;
        // θ: clamp outside the node range; φ: periodic
        std::size_t i0 = 0, i1 = 0;
        double u = 0.0;
        if (theta <= tab.theta.front()) {
            i0 = i1 = 0;
        } else if (theta >= tab.theta.back()) {
            i0 = i1 = tab.theta.size() - 1;
        } else {
            i1 = static_cast<std::size_t>(std::upper_bound(tab.theta.begin(), tab.theta.end(), theta) - tab.theta.begin());
            i0 = i1 - 1;
            u = (theta - tab.theta[i0]) / (tab.theta[i1] - tab.theta[i0]);
        }
        double p = std::fmod(phi, 2.0 * pi);
        if (p < 0.0) p += 2.0 * pi;
        const std::size_t np = tab.phi.size();
        std::size_t j0 = 0, j1 = 0;
        double v = 0.0;
        if (np > 1) {
            auto it = std::upper_bound(tab.phi.begin(), tab.phi.end(), p);
            if (it == tab.phi.begin() || it == tab.phi.end()) {
                // wrap cell between the last node and the first node + 2π
                j0 = np - 1;
                j1 = 0;
                double lo = tab.phi.back();
                double hi = tab.phi.front() + 2.0 * pi;
                double pp = p < lo ? p + 2.0 * pi : p;
                v = (pp - lo) / (hi - lo);
            } else {
                j1 = static_cast<std::size_t>(it - tab.phi.begin());
                j0 = j1 - 1;
                v = (p - tab.phi[j0]) / (tab.phi[j1] - tab.phi[j0]);
            }
        }
        const double a = (1.0 - v) * tab.at(i0, j0) + v * tab.at(i0, j1);
        const double b = (1.0 - v) * tab.at(i1, j0) + v * tab.at(i1, j1);
        return (1.0 - u) * a + u * b;
    }
    }
    return 0.0;
}

double AngularModel::norm() const {
    if (is_builtin()) return 1.0;
    return quadrature_->norm;
}

// ---------------------------------------------------------------- moments

DirectionalMoments directional_moments(const AngularModel& a) {
    DirectionalMoments m;
    switch (a.kind()) {
    case AngularKind::sphere:
        m.second = Mat3::Identity() / 3.0;
        break;
    case AngularKind::bagel:
        m.second.diagonal() << 3.0 / 8.0, 3.0 / 8.0, 1.0 / 4.0;
        break;
    case AngularKind::dumbbell:
        m.second.diagonal() << 1.0 / 5.0, 1.0 / 5.0, 3.0 / 5.0;
        break;
    case AngularKind::cardioid:
        m.first.z() = -1.0 / 3.0;
        m.second = Mat3::Identity() / 3.0;
        break;
    case AngularKind::kneaded_cardioid:
        m.first.z() = -1.0 / 3.0;
        m.second.diagonal() << (2.0 + a.asymmetry()) / 6.0, (2.0 - a.asymmetry()) / 6.0, 1.0 / 3.0;
        break;
    case AngularKind::tabulated:
        return a.quadrature_->moments;
    }
    return m;
}

namespace {

// 13 accumulated numbers: norm, first (3), second (9)
struct MomentSums {
    double norm = 0.0;
    Vec3 first = Vec3::Zero();
    Mat3 second = Mat3::Zero();

    void add(double weight, double theta, double phi, double density) {
        const double st = std::sin(theta);
        const Vec3 n(st * std::cos(phi), st * std::sin(phi), std::cos(theta));
        const double w = weight * density * st;
        norm += w;
        first += w * n;
        second += w * (n * n.transpose());
    }

    double distance(const MomentSums& o) const {
        double d = std::abs(norm - o.norm);
        d = std::max(d, (first - o.first).cwiseAbs().maxCoeff());
        d = std::max(d, (second - o.second).cwiseAbs().maxCoeff());
        return d;
    }
};

MomentSums builtin_sums(const AngularModel& a, int n_theta, int n_phi) {
    MomentSums s;
    const auto rule = gauss_legendre(n_theta, 0.0, pi);
    const double dphi = 2.0 * pi / n_phi;
    for (int i = 0; i < n_theta; ++i) {
        for (int k = 0; k < n_phi; ++k) {
            const double phi = k * dphi;
            s.add(rule.weights[i] * dphi, rule.nodes[i], phi, a.density(rule.nodes[i], phi));
        }
    }
    return s;
}

std::vector<double> cell_edges_theta(const AngularTable& tab) {
    std::vector<double> e;
    if (tab.theta.front() > 0.0) e.push_back(0.0);
    e.insert(e.end(), tab.theta.begin(), tab.theta.end());
    if (tab.theta.back() < pi) e.push_back(pi);
    return e;
}

std::vector<double> cell_edges_phi(const AngularTable& tab) {
    std::vector<double> e(tab.phi.begin(), tab.phi.end());
    e.push_back(tab.phi.front() + 2.0 * pi);
    return e;
}

MomentSums table_sums(const AngularModel& a, int order) {
    const auto& tab = *a.table();
    const auto te = cell_edges_theta(tab);
    const auto pe = cell_edges_phi(tab);
    const auto base = gauss_legendre(order);
    MomentSums s;
    for (std::size_t i = 0; i + 1 < te.size(); ++i) {
        const double tl = te[i], th = te[i + 1];
        for (std::size_t j = 0; j + 1 < pe.size(); ++j) {
            const double pl = pe[j], ph = pe[j + 1];
            for (int p = 0; p < order; ++p) {
                const double theta = 0.5 * (tl + th) + 0.5 * (th - tl) * base.nodes[p];
                const double wt = 0.5 * (th - tl) * base.weights[p];
                for (int q = 0; q < order; ++q) {
                    const double phi = 0.5 * (pl + ph) + 0.5 * (ph - pl) * base.nodes[q];
                    const double wp = 0.5 * (ph - pl) * base.weights[q];
                    s.add(wt * wp, theta, phi, a.density(theta, phi));
                }
            }
        }
    }
    return s;
}

} // namespace

AngularQuadrature angular_quadrature(const AngularModel& a) {
    constexpr double kAgreement = 1e-11;
    AngularQuadrature out;
    MomentSums prev;
    MomentSums cur;
    if (a.kind() == AngularKind::tabulated) {
        int order = 6;
        prev = table_sums(a, order);
        for (order = 12; order <= 48; order *= 2) {
            cur = table_sums(a, order);
            if (cur.distance(prev) < kAgreement) break;
            prev = cur;
        }
        if (cur.distance(prev) >= kAgreement) {
            throw QuadratureError("angular quadrature of tabulated model did not converge", cur.distance(prev));
        }
        out.theta_points = out.phi_points = order;
    } else {
        int nt = 64, np = 128;
        prev = builtin_sums(a, nt, np);
        for (;;) {
            nt *= 2;
            np *= 2;
            cur = builtin_sums(a, nt, np);
            if (cur.distance(prev) < kAgreement) break;
            if (nt >= 2048) throw QuadratureError("angular quadrature did not converge", cur.distance(prev));
            prev = cur;
        }
        out.theta_points = nt;
        out.phi_points = np;
    }
    out.norm = cur.norm;
    out.moments.first = cur.first;
    out.moments.second = 0.5 * (cur.second + cur.second.transpose());
    return out;
}

PrincipalFrame principal_frame(const DirectionalMoments& m) {
    const Mat3 s = 0.5 * (m.second + m.second.transpose());
    Eigen::SelfAdjointEigenSolver<Mat3> es(s);
    const Vec3 evals = es.eigenvalues();
    const Mat3 evecs = es.eigenvectors();

    // descending order, then group near-equal eigenvalues
    int order[3] = {2, 1, 0};
    const double scale = std::max(1.0, evals.cwiseAbs().maxCoeff());
    const double tie = 1e-10 * scale;

    Mat3 u = Mat3::Zero();
    bool used_axis[3] = {false, false, false};
    int col = 0;
    while (col < 3) {
        int end = col + 1;
        while (end < 3 && std::abs(evals[order[col]] - evals[order[end]]) < tie) ++end;
        const int k = end - col;

        Eigen::Matrix<double, 3, Eigen::Dynamic> basis(3, k);
        for (int c = 0; c < k; ++c) basis.col(c) = evecs.col(order[col + c]);
        const Mat3 proj = basis * basis.transpose();

        // pick the k unused input axes with the largest projection onto the eigenspace
        std::vector<int> axes;
        for (int c = 0; c < k; ++c) {
            int best = -1;
            double best_norm = -1.0;
            for (int ax = 0; ax < 3; ++ax) {
                if (used_axis[ax]) continue;
                const double nrm = proj.col(ax).norm();
                if (nrm > best_norm + 1e-12) {
                    best_norm = nrm;
                    best = ax;
                }
            }
            used_axis[best] = true;
            axes.push_back(best);
        }
        std::sort(axes.begin(), axes.end());

        for (int c = 0; c < k; ++c) {
            Vec3 v = proj.col(axes[c]);
            for (int p = col; p < col + c; ++p) v -= u.col(p).dot(v) * u.col(p);
            if (v.norm() < 1e-8) v = basis.col(c);
            for (int p = col; p < col + c; ++p) v -= u.col(p).dot(v) * u.col(p);
            v.normalize();
            Eigen::Index big = 0;
            v.cwiseAbs().maxCoeff(&big);
            if (v[big] < 0.0) v = -v;
            u.col(col + c) = v;
        }
        col = end;
    }
    if (u.determinant() < 0.0) u.col(2) = -u.col(2);

    PrincipalFrame pf;
    pf.u = u;
    Mat3 rotated = u.transpose() * s * u;
    // exact diagonal: the off-diagonals are rounding noise by construction
    pf.rotated.second = rotated.diagonal().asDiagonal();
    pf.rotated.first = u.transpose() * m.first;
    return pf;
}

// ---------------------------------------------------------------- SeparableEnsemble

namespace {

void verify_builtin_normalizations() {
    static const bool ok = [] {
        for (const auto& a : {AngularModel::sphere(), AngularModel::bagel(), AngularModel::dumbbell(),
                              AngularModel::cardioid(), AngularModel::kneaded_cardioid(1.0)}) {
            const double xi = angular_quadrature(a).norm;
            if (std::abs(xi - 1.0) > 1e-10) throw ModelError("built-in angular model " + a.name() + " is not normalized");
        }
        for (const auto& r : {RadialModel::gaussian(1.0), RadialModel::exp_cutoff(1.0), RadialModel::reciprocal_square(1.0)}) {
            const double n = radial_integral(r, [](double) { return 1.0; }, 0.0);
            if (std::abs(n - 1.0) > 1e-10) throw ModelError("built-in radial model " + r.name() + " is not normalized");
        }
        return true;
    }();
    (void)ok;
}

} // namespace

SeparableEnsemble::SeparableEnsemble(RadialModel radial, AngularModel angular)
    : radial_(std::move(radial)), angular_(std::move(angular)), xi_(1.0) {
    verify_builtin_normalizations();
    xi_ = angular_.norm();
    if (!(xi_ > 0.0)) throw ModelError("angular part integrates to zero");
    const double joint = radial_.norm() * xi_;
    if (std::abs(joint - 1.0) > 1e-9) {
        throw ModelError("joint distribution is not normalized: int p w^2 dw dOmega = " + std::to_string(joint));
    }
}

SeparableEnsemble SeparableEnsemble::normalized(const RadialModel& radial, AngularModel angular) {
    if (radial.kind() != RadialKind::tabulated) return SeparableEnsemble(radial, std::move(angular));
    const double xi = angular.norm();
    if (!(xi > 0.0)) throw ModelError("angular part integrates to zero");
    return SeparableEnsemble(radial.scaled(1.0 / (xi * radial.norm())), std::move(angular));
}

// ---------------------------------------------------------------- CSV tables

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

std::vector<std::vector<double>> read_columns(const std::string& path, const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open table " + path);
    std::string line;
    int lineno = 0;
    bool have_header = false;
    std::vector<std::vector<double>> cols(header.size());
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cells = split_csv(t);
        if (!have_header) {
            if (cells != header) {
                std::string want;
                for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
                throw ModelError(path + ":" + std::to_string(lineno) + ": expected header '" + want + "'");
            }
            have_header = true;
            continue;
        }
        if (cells.size() != header.size()) {
            throw ModelError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " columns");
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cells[c], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != cells[c].size()) throw ModelError(path + ":" + std::to_string(lineno) + ": not a number: " + cells[c]);
            if (!(v >= 0.0)) throw ModelError(path + ":" + std::to_string(lineno) + ": negative value " + cells[c]);
            cols[c].push_back(v);
        }
    }
    if (!have_header) throw ModelError(path + ": missing header row");
    return cols;
}

} // namespace

RadialModel load_radial_table(const std::string& path) {
    auto cols = read_columns(path, {"omega", "P"});
    return RadialModel::tabulated(std::move(cols[0]), std::move(cols[1]));
}

AngularModel load_angular_table(const std::string& path) {
    auto cols = read_columns(path, {"theta", "phi", "Theta"});
    std::map<std::pair<double, double>, double> grid;
    std::vector<double> thetas, phis;
    for (std::size_t i = 0; i < cols[0].size(); ++i) {
        if (!grid.emplace(std::make_pair(cols[0][i], cols[1][i]), cols[2][i]).second) {
            throw ModelError(path + ": duplicate grid node");
        }
        thetas.push_back(cols[0][i]);
        phis.push_back(cols[1][i]);
    }
    std::sort(thetas.begin(), thetas.end());
    thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());
    std::sort(phis.begin(), phis.end());
    phis.erase(std::unique(phis.begin(), phis.end()), phis.end());
    if (grid.size() != thetas.size() * phis.size()) throw ModelError(path + ": nodes do not form a regular theta x phi grid");
    std::vector<double> values;
    values.reserve(grid.size());
    for (double th : thetas)
        for (double ph : phis) values.push_back(grid.at({th, ph}));
    return AngularModel::tabulated(std::move(thetas), std::move(phis), std::move(values));
}

} // namespace hamens
