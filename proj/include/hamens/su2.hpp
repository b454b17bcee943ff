// su2.hpp: Pauli algebra, Bloch vectors and single-realization propagators for one qubit

#pragma once

#include <complex>

#include <Eigen/Dense>

namespace hamens {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class Axis : int { x = 0, y = 1, z = 2 };

constexpr int index(Axis a) noexcept { return static_cast<int>(a); }

Matrix2c identity2();
Matrix2c pauli(Axis a);
Matrix2c pauli(int j);

// Direction on the unit sphere. θ is clamped to [0, π], φ wrapped into [0, 2π).
class UnitVector {
public:
    UnitVector() : UnitVector(0.0, 0.0) {}
    UnitVector(double theta, double phi);

    // Normalizes v; throws std::invalid_argument for a zero vector.
    static UnitVector from_cartesian(const Vec3& v);

    double theta() const noexcept { return theta_; }
    double phi() const noexcept { return phi_; }
    const Vec3& cartesian() const noexcept { return n_; }
    double operator[](int j) const noexcept { return n_[j]; }

private:
    double theta_;
    double phi_;
    Vec3 n_;
};

// Member of the ensemble: H = (ω/2) n·σ with ω ≥ 0.
struct MemberHamiltonian {
    MemberHamiltonian(double omega, UnitVector direction);

    double omega;
    UnitVector direction;

    Matrix2c matrix() const;
};

// Qubit state ρ = (I + r·σ)/2 stored by its Bloch vector.
class DensityMatrix {
public:
    static constexpr double kBallTolerance = 1e-12;

    DensityMatrix() : bloch_(Vec3::Zero()) {}
    explicit DensityMatrix(const Vec3& bloch);

    static DensityMatrix maximally_mixed() { return DensityMatrix(); }
    // Pure state (sin ϑ, 0, cos ϑ) in the x–z plane.
    static DensityMatrix from_polar(double vartheta);
    // Projects a Hermitian, unit-trace 2×2 matrix onto its Bloch vector.
    static DensityMatrix from_matrix(const Matrix2c& rho);

    const Vec3& bloch() const noexcept { return bloch_; }
    Matrix2c matrix() const;

private:
    Vec3 bloch_;
};

// U(t) = cos(ωt/2) I − i sin(ωt/2) n·σ
Matrix2c unitary_at(const MemberHamiltonian& h, double t);

// U ρ U†, evaluated as a 2×2 matrix conjugation.
DensityMatrix evolve_single(const DensityMatrix& rho0, const MemberHamiltonian& h, double t);

// Tr ρ² = (1 + |r|²)/2
double purity(const DensityMatrix& rho);

// [v]× such that [v]× w = v × w
Mat3 cross_matrix(const Vec3& v);

} // namespace hamens
