// ensemble.hpp: Separable distributions p(ω,θ,φ) = P(ω) Θ(θ,φ) over su(2) Hamiltonians
//
// The radial part carries the spectral disorder, the angular part the geometry of the
// Hamiltonian axis. Normalization is split as ∫P ω² dω = 1/ξ and ∫Θ dΩ = ξ.

#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hamens/su2.hpp"

namespace hamens {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureError : std::runtime_error {
    QuadratureError(const std::string& what, double residual_)
        : std::runtime_error(what), residual(residual_) {}
    double residual;
};

// ---------------------------------------------------------------- radial models

enum class RadialKind { gaussian, exp_cutoff, reciprocal_square, tabulated };

struct RadialTable {
    std::vector<double> omega;   // strictly increasing, ≥ 0
    std::vector<double> density; // P(ω) at the nodes
    std::vector<double> weight;  // P(ω) ω², interpolated linearly between nodes
    std::vector<double> cdf;     // cumulative ∫ P ω² dω at the nodes
};

class RadialModel {
public:
    static RadialModel gaussian(double omega_c);
    static RadialModel exp_cutoff(double omega_c);
    static RadialModel reciprocal_square(double omega_c);
    // Nodes (ω_i, P(ω_i)); the effective measure P ω² is linear between nodes and zero outside.
    static RadialModel tabulated(std::vector<double> omega, std::vector<double> density);

    RadialKind kind() const noexcept { return kind_; }
    bool is_builtin() const noexcept { return kind_ != RadialKind::tabulated; }
    std::string name() const;

    // Built-ins: ω_c. Tabulated: the largest grid frequency (used only as a scale).
    double cutoff() const noexcept { return omega_c_; }

    double density(double omega) const;
    double effective_weight(double omega) const;
    // +∞ for Gaussian and exponential cutoff.
    double support_max() const;
    // ∫ P ω² dω
    double norm() const;

    // Tabulated only: same shape with P multiplied by factor.
    RadialModel scaled(double factor) const;
    const RadialTable* table() const noexcept { return table_.get(); }

private:
    RadialModel(RadialKind kind, double omega_c, std::shared_ptr<const RadialTable> table = nullptr);

    RadialKind kind_;
    double omega_c_;
    std::shared_ptr<const RadialTable> table_;
};

// ⟨cos ωt⟩_P and ⟨sin ωt⟩_P in closed form for the built-ins, by quadrature for tables.
double cos_expectation(const RadialModel& r, double t);
double sin_expectation(const RadialModel& r, double t);
// Time derivatives, differentiated analytically (under the integral for tables).
double cos_expectation_rate(const RadialModel& r, double t);
double sin_expectation_rate(const RadialModel& r, double t);

// ∫ f(ωt) P(ω) ω² dω by adaptive Gauss–Kronrod panels no longer than half a period of
// the oscillation. Throws QuadratureError when a panel does not converge.
double expectation_quadrature(const RadialModel& r, const std::function<double(double)>& f, double t,
                              double tolerance = 1e-13);

// ∫ h(ω) P(ω) ω² dω with panels of length ≤ π/rate (rate = 0 → no oscillation).
double radial_integral(const RadialModel& r, const std::function<double(double)>& h, double rate,
                       double tolerance = 1e-13);

// ⟨ω⟩ over the effective measure.
double mean_omega(const RadialModel& r);

// Bundles the radial expectations of one model.
class RadialExpectations {
public:
    explicit RadialExpectations(RadialModel model) : model_(std::move(model)) {}

    double cos_t(double t) const { return cos_expectation(model_, t); }
    double sin_t(double t) const { return sin_expectation(model_, t); }
    double cos_rate(double t) const { return cos_expectation_rate(model_, t); }
    double sin_rate(double t) const { return sin_expectation_rate(model_, t); }
    const RadialModel& model() const noexcept { return model_; }

private:
    RadialModel model_;
};

// ---------------------------------------------------------------- angular models

// ⟨n_j⟩_Θ and ⟨n_j n_k⟩_Θ; trace(second) = ξ.
struct DirectionalMoments {
    Vec3 first = Vec3::Zero();
    Mat3 second = Mat3::Zero();

    double xi() const { return second.trace(); }
};

struct AngularQuadrature {
    DirectionalMoments moments;
    double norm = 0.0;
    int theta_points = 0;
    int phi_points = 0;
};

enum class AngularKind { sphere, bagel, dumbbell, cardioid, kneaded_cardioid, tabulated };

struct AngularTable {
    std::vector<double> theta;  // strictly increasing within [0, π]
    std::vector<double> phi;    // strictly increasing within [0, 2π), periodic
    std::vector<double> values; // row-major [theta][phi]

    double at(std::size_t i, std::size_t j) const { return values[i * phi.size() + j]; }
};

class AngularModel {
public:
    static AngularModel sphere();
    static AngularModel bagel();
    static AngularModel dumbbell();
    static AngularModel cardioid();
    // Θ = (1 − cos θ)(1 + a cos 2φ)/4π, a ∈ [0, 1].
    static AngularModel kneaded_cardioid(double a);
    // Regular grid; Θ is bilinear in (θ, φ) between nodes.
    static AngularModel tabulated(std::vector<double> theta, std::vector<double> phi,
                                  std::vector<double> values);

    AngularKind kind() const noexcept { return kind_; }
    bool is_builtin() const noexcept { return kind_ != AngularKind::tabulated; }
    std::string name() const;
    double asymmetry() const noexcept { return a_; }

    double density(double theta, double phi) const;
    // ∫ Θ dΩ; exactly 1 for the built-ins.
    double norm() const;

    const AngularTable* table() const noexcept { return table_.get(); }

private:
    AngularModel(AngularKind kind, double a, std::shared_ptr<const AngularTable> table = nullptr);

    AngularKind kind_;
    double a_;
    std::shared_ptr<const AngularTable> table_;
    std::shared_ptr<const AngularQuadrature> quadrature_; // tabulated models, computed once

    friend DirectionalMoments directional_moments(const AngularModel& a);
};

// Closed-form moments for the built-ins, quadrature for tables.
DirectionalMoments directional_moments(const AngularModel& a);

// Gauss–Legendre in θ × trapezoid in φ, refined by doubling until successive results agree
// to 1e-11. Table models are integrated cell by cell.
AngularQuadrature angular_quadrature(const AngularModel& a);

struct PrincipalFrame {
    Mat3 u;                      // columns are the principal axes, det u = +1
    DirectionalMoments rotated;  // second = uᵀ S u (diagonal, descending), first = uᵀ N
};

// Diagonalizes the second-moment matrix. Degenerate eigenspaces take the basis closest to
// the input axes; each axis has its largest-magnitude component positive, except that the
// last axis flips sign when needed for a proper rotation.
PrincipalFrame principal_frame(const DirectionalMoments& m);

// ---------------------------------------------------------------- ensembles

class SeparableEnsemble {
public:
    // Throws ModelError unless ∫∫ p ω² dω dΩ = 1 to 1e-9.
    SeparableEnsemble(RadialModel radial, AngularModel angular);

    // Rescales a tabulated radial part so that the joint distribution is normalized.
    static SeparableEnsemble normalized(const RadialModel& radial, AngularModel angular);

    const RadialModel& radial() const noexcept { return radial_; }
    const AngularModel& angular() const noexcept { return angular_; }
    double xi() const noexcept { return xi_; }
    std::string name() const { return angular_.name() + "+" + radial_.name(); }

private:
    RadialModel radial_;
    AngularModel angular_;
    double xi_;
};

// CSV tables with a header row: "omega,P" or "theta,phi,Theta". Values must be ≥ 0.
RadialModel load_radial_table(const std::string& path);
AngularModel load_angular_table(const std::string& path);

} // namespace hamens
