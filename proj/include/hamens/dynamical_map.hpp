// dynamical_map.hpp: The exact ensemble-averaged channel E_t on Bloch vectors
//
// In the principal frame (diagonal second moments S, first moment N) the averaged map acts as
//     r(t) = m(t) r(0),   m = ξ⟨cos⟩ I + (1/ξ − ⟨cos⟩) S + ⟨sin⟩ [N]×,
// so m_jj = f_j(t) and the off-diagonals carry ε_jkl ⟨sin ωt⟩_P ⟨n_l⟩_Θ.

#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hamens/ensemble.hpp"
#include "hamens/su2.hpp"

namespace hamens {

// Unital qubit channel r ↦ m r.
struct BlochAffineMap {
    Mat3 m = Mat3::Identity();
    double time = 0.0;
};

class MapFamily {
public:
    // Moments from the angular model (closed form for built-ins).
    explicit MapFamily(const SeparableEnsemble& ensemble);
    // Explicit lab-frame moments; used for tabulated input and for limit studies.
    MapFamily(RadialModel radial, const DirectionalMoments& lab_moments, double xi);

    // Columns are the principal axes in lab coordinates. Identity when the input second
    // moments are already diagonal, so built-in models keep their natural axes.
    const Mat3& frame() const noexcept { return frame_; }
    const DirectionalMoments& moments() const noexcept { return moments_; }
    const DirectionalMoments& lab_moments() const noexcept { return lab_moments_; }
    double xi() const noexcept { return xi_; }
    const RadialExpectations& expectations() const noexcept { return expectations_; }
    const RadialModel& radial() const noexcept { return expectations_.model(); }

    // f_j(t) = ⟨cos ωt⟩ (ξ − ⟨n_j²⟩) + ⟨n_j²⟩/ξ
    double f(Axis j, double t) const;
    double f_rate(Axis j, double t) const;

    // Principal-frame Bloch matrix and its time derivative.
    Mat3 matrix_at(double t) const;
    Mat3 matrix_rate(double t) const;

    BlochAffineMap map_at(double t) const;
    // u m uᵀ: the same channel in lab coordinates.
    BlochAffineMap lab_map_at(double t) const;

private:
    void init(const DirectionalMoments& lab);

    RadialExpectations expectations_;
    DirectionalMoments lab_moments_;
    DirectionalMoments moments_;
    Mat3 frame_ = Mat3::Identity();
    double xi_ = 1.0;
};

DensityMatrix apply(const BlochAffineMap& map, const DensityMatrix& rho0);

// ½(1 + |m(t) r₀|²) on a strictly increasing grid.
std::vector<double> purity_trajectory(const MapFamily& family, const DensityMatrix& rho0, std::span<const double> grid);

// Normalized Choi matrix ½ Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|) (unit trace).
Eigen::Matrix4cd choi_matrix(const BlochAffineMap& map);
double choi_min_eigenvalue(const BlochAffineMap& map);

} // namespace hamens
