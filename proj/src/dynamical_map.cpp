#include "hamens/dynamical_map.hpp"

#include <cmath>
#include <stdexcept>

namespace hamens {

MapFamily::MapFamily(const SeparableEnsemble& ensemble)
    : expectations_(ensemble.radial()), xi_(ensemble.xi()) {
    init(directional_moments(ensemble.angular()));
}

MapFamily::MapFamily(RadialModel radial, const DirectionalMoments& lab_moments, double xi)
    : expectations_(std::move(radial)), xi_(xi) {
    if (!(xi > 0.0) || !std::isfinite(xi)) throw ModelError("MapFamily: xi must be positive");
    init(lab_moments);
}

void MapFamily::init(const DirectionalMoments& lab) {
    lab_moments_ = lab;
    lab_moments_.second = 0.5 * (lab.second + lab.second.transpose());
    Mat3 off = lab_moments_.second;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() <= 1e-14) {
        frame_ = Mat3::Identity();
        moments_.first = lab_moments_.first;
        moments_.second = Mat3(lab_moments_.second.diagonal().asDiagonal());
    } else {
        const auto pf = principal_frame(lab_moments_);
        frame_ = pf.u;
        moments_ = pf.rotated;
    }
}

double MapFamily::f(Axis j, double t) const {
    const double s = moments_.second(index(j), index(j));
    return expectations_.cos_t(t) * (xi_ - s) + s / xi_;
}

double MapFamily::f_rate(Axis j, double t) const {
    const double s = moments_.second(index(j), index(j));
    return expectations_.cos_rate(t) * (xi_ - s);
}

Mat3 MapFamily::matrix_at(double t) const {
    const double c = expectations_.cos_t(t);
    const double sn = expectations_.sin_t(t);
    return xi_ * c * Mat3::Identity() + (1.0 / xi_ - c) * moments_.second + sn * cross_matrix(moments_.first);
}

Mat3 MapFamily::matrix_rate(double t) const {
    const double dc = expectations_.cos_rate(t);
    const double ds = expectations_.sin_rate(t);
    return xi_ * dc * Mat3::Identity() - dc * moments_.second + ds * cross_matrix(moments_.first);
}

BlochAffineMap MapFamily::map_at(double t) const { return {matrix_at(t), t}; }

BlochAffineMap MapFamily::lab_map_at(double t) const {
    return {frame_ * matrix_at(t) * frame_.transpose(), t};
}

DensityMatrix apply(const BlochAffineMap& map, const DensityMatrix& rho0) {
    return DensityMatrix(map.m * rho0.bloch());
}

std::vector<double> purity_trajectory(const MapFamily& family, const DensityMatrix& rho0, std::span<const double> grid) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("purity_trajectory: grid must be strictly increasing");
    }
    std::vector<double> out;
    out.reserve(grid.size());
    for (double t : grid) {
        const Vec3 r = family.matrix_at(t) * rho0.bloch();
        out.push_back(0.5 * (1.0 + r.squaredNorm()));
    }
    return out;
}

Eigen::Matrix4cd choi_matrix(const BlochAffineMap& map) {
    Eigen::Matrix4cd choi = Eigen::Matrix4cd::Zero();
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            Matrix2c unit = Matrix2c::Zero();
            unit(i, j) = 1.0;
            // E(X) = ½ [tr X · I + Σ_k tr(σ_k X) Σ_l m_lk σ_l]
            Matrix2c image = unit.trace() * identity2();
            for (int k = 0; k < 3; ++k) {
                const Complex coeff = (pauli(k) * unit).trace();
                for (int l = 0; l < 3; ++l) image += coeff * map.m(l, k) * pauli(l);
            }
            image *= 0.5;
            choi.block<2, 2>(2 * i, 2 * j) = 0.5 * image;
        }
    }
    return choi;
}

double choi_min_eigenvalue(const BlochAffineMap& map) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(choi_matrix(map), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

} // namespace hamens
