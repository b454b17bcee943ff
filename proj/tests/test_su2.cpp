#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "hamens/su2.hpp"
#include "oracles.hpp"

using namespace hamens;
using doctest::Approx;

namespace {

double max_abs(const Matrix2c& m) { return m.cwiseAbs().maxCoeff(); }

MemberHamiltonian random_member(std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return MemberHamiltonian(5.0 * u(g), UnitVector(std::acos(2.0 * u(g) - 1.0), 2.0 * oracle::pi * u(g)));
}

} // namespace

TEST_CASE("pauli algebra") {
    for (int j = 0; j < 3; ++j) {
        CHECK(max_abs(pauli(j) * pauli(j) - identity2()) == 0.0);
        CHECK(max_abs(pauli(j) - pauli(j).adjoint()) == 0.0);
    }
    // σ_x σ_y = i σ_z
    CHECK(max_abs(pauli(Axis::x) * pauli(Axis::y) - Complex(0, 1) * pauli(Axis::z)) == 0.0);
    CHECK_THROWS_AS(pauli(3), std::out_of_range);
}

TEST_CASE("unit vector normalization and chart") {
    UnitVector n(0.3, 1.1);
    CHECK(n.cartesian().norm() == Approx(1.0).epsilon(1e-12));
    UnitVector wrapped(0.3, 1.1 + 2.0 * oracle::pi);
    CHECK(wrapped.phi() == Approx(1.1).epsilon(1e-12));
    UnitVector negative(0.3, -0.5);
    CHECK(negative.phi() == Approx(2.0 * oracle::pi - 0.5).epsilon(1e-12));
    UnitVector clamped(4.0, 0.0);
    CHECK(clamped.theta() == oracle::pi);
    CHECK_THROWS(UnitVector(std::nan(""), 0.0));
    const auto v = UnitVector::from_cartesian(Vec3(0.0, 3.0, 4.0));
    CHECK(v.cartesian().isApprox(Vec3(0.0, 0.6, 0.8)));
    CHECK_THROWS(UnitVector::from_cartesian(Vec3::Zero()));
}

TEST_CASE("member hamiltonian rejects negative frequency") {
    CHECK_THROWS_AS(MemberHamiltonian(-1.0, UnitVector(0.0, 0.0)), std::invalid_argument);
    const MemberHamiltonian h(2.0, UnitVector(0.0, 0.0));
    CHECK(max_abs(h.matrix() - pauli(Axis::z)) < 1e-15);
}

TEST_CASE("unitary at t = 0 is the identity") {
    const MemberHamiltonian h(3.7, UnitVector(1.2, 0.4));
    CHECK(max_abs(unitary_at(h, 0.0) - identity2()) == 0.0);
}

TEST_CASE("unitary about z at t = pi") {
    const MemberHamiltonian h(1.0, UnitVector(0.0, 0.0));
    Matrix2c expected = Matrix2c::Zero();
    expected(0, 0) = std::exp(Complex(0, -oracle::pi / 2));
    expected(1, 1) = std::exp(Complex(0, oracle::pi / 2));
    CHECK(max_abs(unitary_at(h, oracle::pi) - expected) < 1e-15);
}

TEST_CASE("unitary about x at t = pi against the matrix exponential") {
    const MemberHamiltonian h(1.0, UnitVector(oracle::pi / 2, 0.0));
    const Matrix2c ref = oracle::expm<Matrix2c>(Complex(0, -oracle::pi) * h.matrix());
    CHECK(max_abs(unitary_at(h, oracle::pi) - ref) < 1e-13);
    CHECK(max_abs(unitary_at(h, oracle::pi) - Complex(0, -1) * pauli(Axis::x)) < 1e-15);
}

TEST_CASE("unitary matches the matrix exponential for random members") {
    std::mt19937_64 g(11);
    for (int i = 0; i < 50; ++i) {
        const auto h = random_member(g);
        const double t = 3.0 * std::uniform_real_distribution<double>(0, 1)(g);
        const Matrix2c u = unitary_at(h, t);
        CHECK(max_abs(u - oracle::expm<Matrix2c>(Complex(0, -t) * h.matrix())) < 1e-12);
        CHECK(max_abs(u * u.adjoint() - identity2()) < 1e-12);
        CHECK(std::abs(std::abs(u.determinant()) - 1.0) < 1e-12);
    }
}

TEST_CASE("unitary composes in time") {
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const auto h = random_member(g);
        const double t1 = u(g), t2 = u(g);
        CHECK(max_abs(unitary_at(h, t1 + t2) - unitary_at(h, t1) * unitary_at(h, t2)) < 1e-12);
    }
}

TEST_CASE("evolve single examples") {
    const MemberHamiltonian hz(1.7, UnitVector(0.0, 0.0));
    const DensityMatrix up(Vec3(0, 0, 1));
    CHECK((evolve_single(up, hz, 2.3).bloch() - Vec3(0, 0, 1)).norm() < 1e-15);

    const MemberHamiltonian h1(1.0, UnitVector(0.0, 0.0));
    const DensityMatrix plus_x(Vec3(1, 0, 0));
    // explicit conjugation of σ_x by exp(−iπσ_z/4)
    const Matrix2c u = oracle::expm<Matrix2c>(Complex(0, -oracle::pi / 4) * pauli(Axis::z));
    const Vec3 ref = oracle::bloch_of(u * oracle::rho_of(Vec3(1, 0, 0)) * u.adjoint());
    const Vec3 got = evolve_single(plus_x, h1, oracle::pi / 2).bloch();
    CHECK((got - ref).norm() < 1e-13);
    CHECK((got - Vec3(0, 1, 0)).norm() < 1e-15);

    const DensityMatrix mixed = DensityMatrix::maximally_mixed();
    CHECK(evolve_single(mixed, MemberHamiltonian(2.5, UnitVector(0.7, 1.9)), 4.0).bloch().norm() == 0.0);
}

TEST_CASE("evolve single preserves purity, trace and hermiticity") {
    std::mt19937_64 g(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const auto h = random_member(g);
        Vec3 r(u(g) - 0.5, u(g) - 0.5, u(g) - 0.5);
        r *= u(g) / std::max(r.norm(), 1e-3);
        const DensityMatrix rho(r);
        const auto out = evolve_single(rho, h, 10.0 * u(g));
        CHECK(purity(out) == Approx(purity(rho)).epsilon(1e-12));
        const Matrix2c m = out.matrix();
        CHECK(std::abs(m.trace() - Complex(1.0, 0.0)) < 1e-15);
        CHECK(max_abs(m - m.adjoint()) < 1e-15);
    }
}

TEST_CASE("purity values") {
    CHECK(purity(DensityMatrix::maximally_mixed()) == 0.5);
    CHECK(purity(DensityMatrix(Vec3(0, 0, 1))) == 1.0);
    CHECK(purity(DensityMatrix(Vec3(0.6, 0, 0))) == Approx(0.68).epsilon(1e-15));
}

TEST_CASE("density matrix validation and round trip") {
    CHECK_THROWS_AS(DensityMatrix(Vec3(1.0, 0.1, 0.0)), std::invalid_argument);
    CHECK_NOTHROW(DensityMatrix(Vec3(1.0 + 1e-13, 0.0, 0.0)));
    const auto polar = DensityMatrix::from_polar(oracle::pi / 4);
    CHECK(polar.bloch().isApprox(Vec3(std::sqrt(0.5), 0.0, std::sqrt(0.5))));
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int i = 0; i < 100; ++i) {
        const DensityMatrix rho(Vec3(u(g), u(g), u(g)));
        const auto back = DensityMatrix::from_matrix(rho.matrix());
        CHECK(max_abs(back.matrix() - rho.matrix()) < 1e-14);
    }
}

TEST_CASE("cross matrix implements the cross product") {
    const Vec3 a(0.3, -1.2, 2.0), b(1.1, 0.4, -0.7);
    CHECK((cross_matrix(a) * b - a.cross(b)).norm() < 1e-15);
}
