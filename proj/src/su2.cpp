#include "hamens/su2.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hamens {

namespace {

constexpr Complex I_{0.0, 1.0};

}

Matrix2c identity2() { return Matrix2c::Identity(); }

Matrix2c pauli(int j) {
    Matrix2c s;
    switch (j) {
    case 0: s << 0.0, 1.0, 1.0, 0.0; break;
    case 1: s << 0.0, -I_, I_, 0.0; break;
    case 2: s << 1.0, 0.0, 0.0, -1.0; break;
    default: throw std::out_of_range("pauli index " + std::to_string(j));
    }
    return s;
}

Matrix2c pauli(Axis a) { return pauli(index(a)); }

UnitVector::UnitVector(double theta, double phi) {
    constexpr double pi = std::numbers::pi;
    if (!std::isfinite(theta) || !std::isfinite(phi)) {
        throw std::invalid_argument("UnitVector: non-finite angle");
    }
    theta_ = std::clamp(theta, 0.0, pi);
    phi_ = std::fmod(phi, 2.0 * pi);
    if (phi_ < 0.0) phi_ += 2.0 * pi;
    if (phi_ >= 2.0 * pi) phi_ = 0.0;
    const double st = std::sin(theta_);
    n_ = Vec3(st * std::cos(phi_), st * std::sin(phi_), std::cos(theta_));
}

UnitVector UnitVector::from_cartesian(const Vec3& v) {
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw std::invalid_argument("UnitVector: cannot normalize a zero or non-finite vector");
    }
    const Vec3 u = v / norm;
    UnitVector out(std::acos(std::clamp(u.z(), -1.0, 1.0)), std::atan2(u.y(), u.x()));
    // keep the exact input direction rather than the round trip through angles
    out.n_ = u;
    return out;
}

MemberHamiltonian::MemberHamiltonian(double omega_, UnitVector direction_)
    : omega(omega_), direction(direction_) {
    if (!(omega >= 0.0) || !std::isfinite(omega)) {
        throw std::invalid_argument("MemberHamiltonian: omega must be finite and >= 0");
    }
}

Matrix2c MemberHamiltonian::matrix() const {
    Matrix2c ns = Matrix2c::Zero();
    for (int j = 0; j < 3; ++j) ns += direction[j] * pauli(j);
    return 0.5 * omega * ns;
}

DensityMatrix::DensityMatrix(const Vec3& bloch) : bloch_(bloch) {
    if (!bloch.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite Bloch vector");
    if (bloch.norm() > 1.0 + kBallTolerance) {
        throw std::invalid_argument("DensityMatrix: Bloch vector outside the unit ball (|r| = " +
                                    std::to_string(bloch.norm()) + ")");
    }
}

DensityMatrix DensityMatrix::from_polar(double vartheta) {
    return DensityMatrix(Vec3(std::sin(vartheta), 0.0, std::cos(vartheta)));
}

DensityMatrix DensityMatrix::from_matrix(const Matrix2c& rho) {
    Vec3 r;
    for (int j = 0; j < 3; ++j) r[j] = (pauli(j) * rho).trace().real();
    return DensityMatrix(r);
}

Matrix2c DensityMatrix::matrix() const {
    Matrix2c rho = identity2();
    for (int j = 0; j < 3; ++j) rho += bloch_[j] * pauli(j);
    return 0.5 * rho;
}

Matrix2c unitary_at(const MemberHamiltonian& h, double t) {
    const double half = 0.5 * h.omega * t;
    Matrix2c ns = Matrix2c::Zero();
    for (int j = 0; j < 3; ++j) ns += h.direction[j] * pauli(j);
    return std::cos(half) * identity2() - I_ * std::sin(half) * ns;
}

DensityMatrix evolve_single(const DensityMatrix& rho0, const MemberHamiltonian& h, double t) {
    const Matrix2c u = unitary_at(h, t);
    const Matrix2c rho = u * rho0.matrix() * u.adjoint();
    Vec3 r;
    for (int j = 0; j < 3; ++j) r[j] = (pauli(j) * rho).trace().real();
    // conjugation preserves |r|; clip the last-ulp excursions past the ball
    const double n = r.norm();
    if (n > 1.0) r /= n;
    return DensityMatrix(r);
}

double purity(const DensityMatrix& rho) { return 0.5 * (1.0 + rho.bloch().squaredNorm()); }

Mat3 cross_matrix(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return m;
}

} // namespace hamens
