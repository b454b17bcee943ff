// generator.hpp: Time-local Lindblad generators of the averaged channel
//
// Convention (note the factor ½ on every rate):
//     dρ/dt = −i[h·σ/2, ρ] + Σ_jk (γ_jk/2) (σ_j ρ σ_k − ½{σ_k σ_j, ρ})
// In Bloch form this is dr/dt = L r with L = K − tr(K) I + [h]×, so the isotropic channel
// with rate γ contracts every component at −2γ.

#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hamens/dynamical_map.hpp"

namespace hamens {

// Relative size below which a rate denominator counts as a pole.
inline constexpr double kPoleThreshold = 1e-8;

struct PoleProximityError : std::runtime_error {
    PoleProximityError(const std::string& what, double t, std::string denom)
        : std::runtime_error(what), time(t), denominator(std::move(denom)) {}
    double time;
    std::string denominator;
};

struct SingularMapError : std::runtime_error {
    SingularMapError(const std::string& what, double t) : std::runtime_error(what), time(t) {}
    double time;
};

struct LindbladGenerator {
    Vec3 hamiltonian = Vec3::Zero(); // h; the effective level spacing ω̄ is h_z
    Mat3 kossakowski = Mat3::Zero(); // [γ_jk], real symmetric
    double time = 0.0;

    double hz() const noexcept { return hamiltonian.z(); }
    double gamma(Axis j) const { return kossakowski(index(j), index(j)); }
    double gamma_xy() const { return kossakowski(0, 1); }

    // Ascending eigenvalues and the matching eigenvectors (columns).
    Vec3 kossakowski_eigenvalues() const;
    Mat3 kossakowski_eigenvectors() const;
    double min_kossakowski_eigenvalue() const { return kossakowski_eigenvalues()[0]; }
};

// dr/dt = L r
Mat3 bloch_generator(const LindbladGenerator& g);
// Inverse of bloch_generator: K = sym(L) − ½ tr(sym L) I, h = axial(antisym L).
LindbladGenerator generator_from_bloch(const Mat3& L, double t);
// Same generator expressed in lab coordinates for a family whose frame is u.
LindbladGenerator to_lab(const LindbladGenerator& g, const Mat3& u);

// Spherical symmetry: γ = −ẇ/2w with w = (2⟨cos ωt⟩ + 1)/3. Closed forms for built-ins.
double isotropic_rate(const RadialModel& r, double t);

// Vanishing first moments: γ_j = ḟ_j/2f_j − Σ_{k≠j} ḟ_k/2f_k.
std::array<double, 3> anisotropic_rates(const MapFamily& family, double t);

// Closed forms for the bagel (⟨n_x²⟩ = 3/8, ⟨n_z²⟩ = 1/4) and dumbbell (1/5, 3/5) geometries.
// No pole checks; values diverge at the roots of f_j.
std::array<double, 3> bagel_rates(const RadialModel& r, double t);
std::array<double, 3> dumbbell_rates(const RadialModel& r, double t);

// Azimuthal symmetry (⟨n_x⟩ = ⟨n_y⟩ = 0, ⟨n_x²⟩ = ⟨n_y²⟩): level spacing ω̄(t), γ_x = γ_y,
// and γ_z including the first-moment correction.
LindbladGenerator azimuthal_generator(const MapFamily& family, double t);

// Off-diagonal rate γ_xy = γ_yx for ⟨n_x⟩ = ⟨n_y⟩ = 0, D = f_x f_y + ⟨n_z⟩²⟨sin ωt⟩².
double offdiagonal_rate(const MapFamily& family, double t);

// General route: L = Ṁ M⁻¹ converted to (h, K). Works in the family's principal frame.
// Throws SingularMapError when σ_min(M) < kPoleThreshold·σ_max(M).
LindbladGenerator extract_generator(const MapFamily& family, double t);

// ---------------------------------------------------------------- poles and trajectories

struct Pole {
    double time;
    std::string denominator; // "f_x", "f_y", "f_z", "D" or "det"
};

// Roots of the generator denominators inside [t0, t1] by sign-change bracketing and
// bisection. Tangential zeros that do not change sign are not reported.
std::vector<Pole> pole_scan(const MapFamily& family, double t0, double t1);

struct RateTrajectory {
    std::vector<double> grid;
    std::vector<double> gamma_x, gamma_y, gamma_z, gamma_xy;
    std::vector<double> omega_bar;
    std::vector<double> kossakowski_min;
    // min diagonal rate when K is diagonal, otherwise the smallest eigenvalue of K
    std::vector<double> divisibility_margin;
    std::vector<double> rate_scale; // max |γ_jk|, the reference for sign decisions
    std::vector<bool> in_pole_window; // rates are NaN there
    std::vector<Pole> poles;
};

// Evaluates extract_generator on the grid; grid points are independent of each other.
RateTrajectory rate_trajectory(const MapFamily& family, std::span<const double> grid);

struct DivisibilityInterval {
    double t_begin;
    double t_end;
    bool ru_divisible;
};

// Splits the trajectory at poles and at sign changes of the divisibility margin
// (boundaries placed by linear interpolation between grid points).
std::vector<DivisibilityInterval> divisibility_flags(const RateTrajectory& traj);

} // namespace hamens
