#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "hamens/generator.hpp"
#include "oracles.hpp"

using namespace hamens;
using doctest::Approx;

namespace {

RadialModel builtin_radial(int k, double wc = 1.0) {
    if (k == 0) return RadialModel::gaussian(wc);
    if (k == 1) return RadialModel::exp_cutoff(wc);
    return RadialModel::reciprocal_square(wc);
}

std::vector<AngularModel> all_angular() {
    return {AngularModel::sphere(), AngularModel::bagel(), AngularModel::dumbbell(), AngularModel::cardioid(),
            AngularModel::kneaded_cardioid(0.3)};
}

MapFamily family(int radial, const AngularModel& a) { return MapFamily(SeparableEnsemble(builtin_radial(radial), a)); }

// ⟨cos ωt⟩ written out as functions of x = ω_c t.
double cos_closed(int k, double x) {
    if (k == 0) return std::exp(-0.5 * x * x) * (1.0 - x * x);
    if (k == 1) return (1.0 - 6.0 * x * x + x * x * x * x) / std::pow(1.0 + x * x, 4);
    return std::sin(x) / x;
}

// −ẇ/2w with w = (2⟨cos⟩ + 1)/3 and ẇ by central differences.
double isotropic_by_differences(int k, double wc, double t) {
    const auto w = [&](double s) { return (2.0 * cos_closed(k, wc * s) + 1.0) / 3.0; };
    const double h = 1e-6 / wc;
    return -(w(t + h) - w(t - h)) / (2.0 * h) / (2.0 * w(t));
}

// γ_j = ḟ_j/2f_j − Σ_{k≠j} ḟ_k/2f_k
Vec3 general_diagonal_rates(const MapFamily& fam, double t) {
    Vec3 q;
    for (int j = 0; j < 3; ++j) q[j] = fam.f_rate(Axis(j), t) / (2.0 * fam.f(Axis(j), t));
    return Vec3(q[0] - q[1] - q[2], q[1] - q[0] - q[2], q[2] - q[0] - q[1]);
}

struct AzimuthalOracle {
    double gamma_xy_plane, gamma_z, hz;
};

// Azimuthal block [[f, −σ], [σ, f]] with σ = ⟨sin⟩⟨n_z⟩; L = Ṁ M⁻¹ solved by hand.
AzimuthalOracle azimuthal_oracle(const MapFamily& fam, double t) {
    const double nz = fam.moments().first.z();
    const double f = fam.f(Axis::x, t), fd = fam.f_rate(Axis::x, t);
    const double sg = nz * fam.expectations().sin_t(t), sgd = nz * fam.expectations().sin_rate(t);
    const double fz = fam.f(Axis::z, t), fzd = fam.f_rate(Axis::z, t);
    const double d = f * f + sg * sg;
    const double g = -fzd / (2.0 * fz);
    const double lxx = (fd * f + sgd * sg) / d;
    return {g, -lxx - g, (sgd * f - sg * fd) / d};
}

// Kneaded cardioid: h_z and K_xy from the 2×2 block with unequal diagonals.
std::pair<double, double> kneaded_oracle(const MapFamily& fam, double t) {
    const double nz = fam.moments().first.z();
    const double fx = fam.f(Axis::x, t), fy = fam.f(Axis::y, t);
    const double fxd = fam.f_rate(Axis::x, t), fyd = fam.f_rate(Axis::y, t);
    const double sg = nz * fam.expectations().sin_t(t), sgd = nz * fam.expectations().sin_rate(t);
    const double d = fx * fy + sg * sg;
    const double hz = (sgd * (fx + fy) - sg * (fxd + fyd)) / (2.0 * d);
    const double kxy = (sg * (fxd - fyd) - sgd * (fx - fy)) / (2.0 * d);
    return {hz, kxy};
}

bool near_pole(const std::vector<Pole>& poles, double t, double margin) {
    for (const auto& p : poles)
        if (std::abs(p.time - t) < margin) return true;
    return false;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

} // namespace

TEST_CASE("bloch generator matches the operator form of the master equation") {
    std::mt19937_64 g(8);
    std::normal_distribution<double> n;
    for (int rep = 0; rep < 50; ++rep) {
        LindbladGenerator gen;
        gen.hamiltonian = Vec3(n(g), n(g), n(g));
        Mat3 a;
        for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = n(g);
        gen.kossakowski = 0.5 * (a + a.transpose());
        const Vec3 r(n(g), n(g), n(g));
        const Vec3 ref = oracle::lindblad_bloch_rhs(gen.hamiltonian, gen.kossakowski, r);
        CHECK((bloch_generator(gen) * r - ref).norm() < 1e-12);

        const auto back = generator_from_bloch(bloch_generator(gen), 0.0);
        CHECK((back.kossakowski - gen.kossakowski).norm() < 1e-13);
        CHECK((back.hamiltonian - gen.hamiltonian).norm() < 1e-13);
    }
    LindbladGenerator iso;
    iso.kossakowski = 0.7 * Mat3::Identity();
    CHECK((bloch_generator(iso) + 1.4 * Mat3::Identity()).norm() < 1e-15);
}

TEST_CASE("kossakowski eigen decomposition") {
    LindbladGenerator gen;
    gen.kossakowski << 2, 1, 0, 1, 2, 0, 0, 0, -0.5;
    const Vec3 ev = gen.kossakowski_eigenvalues();
    CHECK(ev[0] == Approx(-0.5));
    CHECK(ev[1] == Approx(1.0));
    CHECK(ev[2] == Approx(3.0));
    const Mat3 v = gen.kossakowski_eigenvectors();
    CHECK((gen.kossakowski * v - v * ev.asDiagonal()).norm() < 1e-13);
    CHECK(gen.min_kossakowski_eigenvalue() == Approx(-0.5));
}

TEST_CASE("isotropic rate against finite differences of w") {
    for (int k = 0; k < 3; ++k)
        for (double wc : {0.5, 1.0, 3.0})
            for (double x = 0.01; x <= 1.5 + 1e-12; x += 0.01) {
                CAPTURE(k);
                CAPTURE(x);
                const double ref = isotropic_by_differences(k, wc, x / wc);
                CHECK(isotropic_rate(builtin_radial(k, wc), x / wc) == Approx(ref).epsilon(1e-6));
            }
}

TEST_CASE("isotropic rate examples") {
    for (int k = 0; k < 3; ++k) CHECK(isotropic_rate(builtin_radial(k), 0.0) == 0.0);
    // Gaussian initial slope ω_c²
    for (double wc : {1.0, 2.0}) CHECK(isotropic_rate(RadialModel::gaussian(wc), 1e-5) / 1e-5 == Approx(wc * wc).epsilon(1e-6));
    for (double wc : {1.0, 2.5}) CHECK(isotropic_rate(RadialModel::reciprocal_square(wc), oracle::pi / wc) == Approx(wc / oracle::pi).epsilon(1e-14));
    // reciprocal-square series branch joins the direct formula
    const auto rs = RadialModel::reciprocal_square(1.0);
    CHECK(isotropic_rate(rs, 1e-3) == Approx(isotropic_by_differences(2, 1.0, 1e-3)).epsilon(1e-6));
    CHECK(isotropic_rate(rs, 1e-7) == Approx(1e-7 / 3.0).epsilon(1e-6));
}

TEST_CASE("bagel and dumbbell closed forms against the general expression") {
    for (int k = 0; k < 3; ++k) {
        const auto bagel = family(k, AngularModel::bagel());
        const auto dumbbell = family(k, AngularModel::dumbbell());
        const auto bp = pole_scan(bagel, 0.0, 12.0);
        const auto dp = pole_scan(dumbbell, 0.0, 12.0);
        for (double t = 0.02; t <= 12.0; t += 0.02) {
            CAPTURE(k);
            CAPTURE(t);
            if (!near_pole(bp, t, 0.02)) {
                const auto c = bagel_rates(builtin_radial(k), t);
                const Vec3 ref = general_diagonal_rates(bagel, t);
                for (int j = 0; j < 3; ++j) CHECK(rel_err(c[j], ref[j]) < 1e-10);
                const auto a = anisotropic_rates(bagel, t);
                for (int j = 0; j < 3; ++j) CHECK(rel_err(a[j], ref[j]) < 1e-12);
            }
            if (!near_pole(dp, t, 0.02)) {
                const auto c = dumbbell_rates(builtin_radial(k), t);
                const Vec3 ref = general_diagonal_rates(dumbbell, t);
                for (int j = 0; j < 3; ++j) CHECK(rel_err(c[j], ref[j]) < 1e-10);
            }
        }
    }
}

TEST_CASE("anisotropic rates reject a first moment") {
    CHECK_THROWS_AS(anisotropic_rates(family(0, AngularModel::cardioid()), 0.5), ModelError);
    CHECK_THROWS_AS(azimuthal_generator(family(0, AngularModel::kneaded_cardioid(0.3)), 0.5), ModelError);
}

TEST_CASE("sphere limit of the anisotropic rates") {
    const auto fam = family(1, AngularModel::sphere());
    for (double t : {0.1, 0.5, 1.0}) {
        const auto r = anisotropic_rates(fam, t);
        for (double g : r) CHECK(g == Approx(isotropic_rate(RadialModel::exp_cutoff(1.0), t)).epsilon(1e-12));
    }
}

TEST_CASE("level spacing at t = 0") {
    const double g0 = extract_generator(family(0, AngularModel::cardioid()), 0.0).hz();
    CHECK(g0 == Approx(-2.0 * std::sqrt(2.0 / oracle::pi) / 3.0).epsilon(1e-12));
    CHECK(g0 == Approx(-0.5319).epsilon(1e-4));
    CHECK(extract_generator(family(1, AngularModel::cardioid()), 0.0).hz() == Approx(-4.0 / 3.0).epsilon(1e-12));
    CHECK(azimuthal_generator(family(2, AngularModel::cardioid()), 0.0).hz() == Approx(-1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("extraction reproduces every closed form away from poles") {
    for (int k = 0; k < 3; ++k) {
        for (const auto& ang : all_angular()) {
            const auto fam = family(k, ang);
            const auto poles = pole_scan(fam, 0.0, 10.0);
            CAPTURE(fam.radial().name());
            CAPTURE(ang.name());
            for (double t = 0.05; t <= 10.0; t += 0.05) {
                if (near_pole(poles, t, 0.05)) continue;
                CAPTURE(t);
                const auto g = extract_generator(fam, t);
                const Mat3& K = g.kossakowski;
                CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-12);
                switch (ang.kind()) {
                case AngularKind::sphere: {
                    const double iso = isotropic_rate(fam.radial(), t);
                    CHECK((K - iso * Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, std::abs(iso)));
                    CHECK(g.hamiltonian.norm() < 1e-12);
                    break;
                }
                case AngularKind::bagel:
                case AngularKind::dumbbell: {
                    const auto c = ang.kind() == AngularKind::bagel ? bagel_rates(fam.radial(), t) : dumbbell_rates(fam.radial(), t);
                    for (int j = 0; j < 3; ++j) CHECK(rel_err(K(j, j), c[j]) < 1e-8);
                    CHECK(std::abs(K(0, 1)) + std::abs(K(0, 2)) + std::abs(K(1, 2)) < 1e-10);
                    CHECK(g.hamiltonian.norm() < 1e-12);
                    break;
                }
                case AngularKind::cardioid: {
                    const auto az = azimuthal_generator(fam, t);
                    const auto o = azimuthal_oracle(fam, t);
                    CHECK(rel_err(K(0, 0), o.gamma_xy_plane) < 1e-8);
                    CHECK(rel_err(K(1, 1), o.gamma_xy_plane) < 1e-8);
                    CHECK(rel_err(K(2, 2), o.gamma_z) < 1e-8);
                    CHECK(rel_err(g.hz(), o.hz) < 1e-8);
                    CHECK((az.kossakowski - K).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, K.cwiseAbs().maxCoeff()));
                    CHECK(rel_err(az.hz(), g.hz()) < 1e-8);
                    break;
                }
                case AngularKind::kneaded_cardioid: {
                    const auto [hz, kxy] = kneaded_oracle(fam, t);
                    CHECK(rel_err(g.hz(), hz) < 1e-8);
                    CHECK(rel_err(g.gamma_xy(), kxy) < 1e-8);
                    CHECK(rel_err(offdiagonal_rate(fam, t), kxy) < 1e-8);
                    break;
                }
                default:
                    break;
                }
            }
        }
    }
}

TEST_CASE("extracted generator reproduces the map derivative") {
    for (const auto& ang : all_angular()) {
        const auto fam = family(0, ang);
        for (double t : {0.3, 0.9}) {
            const Mat3 m = fam.matrix_at(t);
            const Mat3 fd = (fam.matrix_at(t + 1e-5) - fam.matrix_at(t - 1e-5)) / 2e-5;
            CHECK((bloch_generator(extract_generator(fam, t)) * m - fd).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("kneaded cardioid off-diagonal rate example and linearity in a") {
    const auto fam = family(0, AngularModel::kneaded_cardioid(0.3));
    CHECK(std::abs(extract_generator(fam, 0.4).gamma_xy() - offdiagonal_rate(fam, 0.4)) < 1e-8);
    CHECK(std::abs(extract_generator(fam, 0.4).gamma_xy()) > 1e-3);

    const auto zero = family(0, AngularModel::kneaded_cardioid(0.0));
    for (double t = 0.1; t < 5.0; t += 0.1) CHECK(offdiagonal_rate(zero, t) == 0.0);

    for (double t : {0.2, 0.4}) {
        const double r1 = offdiagonal_rate(family(0, AngularModel::kneaded_cardioid(1e-3)), t) / 1e-3;
        const double r2 = offdiagonal_rate(family(0, AngularModel::kneaded_cardioid(1e-2)), t) / 1e-2;
        CHECK(r1 == Approx(r2).epsilon(1e-6));
    }
}

TEST_CASE("pole phenomenology") {
    SUBCASE("bagel with gaussian spectrum") {
        const auto poles = pole_scan(family(0, AngularModel::bagel()), 0.0, 3.0);
        REQUIRE(poles.size() == 2);
        const auto ref = oracle::roots([](double x) { return 3.0 * (1.0 - x * x) * std::exp(-0.5 * x * x) + 1.0; }, 0.0, 3.0, 3000);
        REQUIRE(ref.size() == 2);
        for (int i = 0; i < 2; ++i) {
            CHECK(poles[i].time == Approx(ref[i]).epsilon(1e-9));
            CHECK(poles[i].denominator == "f_z");
        }
        const double x1 = poles[0].time * poles[0].time, x2 = poles[1].time * poles[1].time;
        CHECK(x1 >= 1.7);
        CHECK(x1 <= 1.9);
        CHECK(x2 >= 4.9);
        CHECK(x2 <= 5.2);
    }
    SUBCASE("regular geometries") {
        CHECK(pole_scan(family(2, AngularModel::bagel()), 0.0, 20.0).empty());
        CHECK(pole_scan(family(0, AngularModel::sphere()), 0.0, 5.0).empty());
        for (int k = 0; k < 3; ++k) CHECK(pole_scan(family(k, AngularModel::kneaded_cardioid(0.0)), 0.0, 10.0).empty());
    }
    SUBCASE("kneaded cardioid asymmetry") {
        const auto d_roots = [](const MapFamily& fam) {
            return oracle::roots(
                [&](double t) {
                    const double s = fam.moments().first.z() * fam.expectations().sin_t(t);
                    return fam.f(Axis::x, t) * fam.f(Axis::y, t) + s * s;
                },
                1e-6, 10.0, 20000);
        };
        const auto g1 = family(0, AngularModel::kneaded_cardioid(0.1));
        const auto g3 = family(0, AngularModel::kneaded_cardioid(0.3));
        const auto e3 = family(1, AngularModel::kneaded_cardioid(0.3));
        const auto e7 = family(1, AngularModel::kneaded_cardioid(0.7));
        CHECK(pole_scan(g1, 0.0, 10.0).empty());
        CHECK(d_roots(g1).empty());
        CHECK(pole_scan(e3, 0.0, 10.0).empty());
        CHECK(d_roots(e3).empty());
        for (const auto* fam : {&g3, &e7}) {
            const auto p = pole_scan(*fam, 0.0, 10.0);
            const auto ref = d_roots(*fam);
            CHECK(p.size() >= 2);
            REQUIRE(p.size() == ref.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
                CHECK(p[i].time == Approx(ref[i]).epsilon(1e-8));
                CHECK(p[i].denominator == "D");
            }
        }
    }
}

TEST_CASE("rate functions refuse to evaluate on a pole") {
    const auto fam = family(0, AngularModel::bagel());
    const auto poles = pole_scan(fam, 0.0, 3.0);
    REQUIRE(!poles.empty());
    CHECK_THROWS_AS(anisotropic_rates(fam, poles[0].time), PoleProximityError);
    CHECK_THROWS_AS(extract_generator(fam, poles[0].time), SingularMapError);
    const auto kn = family(0, AngularModel::kneaded_cardioid(0.3));
    const auto kp = pole_scan(kn, 0.0, 10.0);
    REQUIRE(!kp.empty());
    CHECK_THROWS_AS(offdiagonal_rate(kn, kp[0].time), PoleProximityError);
}

TEST_CASE("rate trajectory marks pole windows") {
    const auto fam = family(0, AngularModel::kneaded_cardioid(0.3));
    const auto poles = pole_scan(fam, 0.0, 10.0);
    std::vector<double> grid{0.5, poles[0].time, 6.0};
    const auto tr = rate_trajectory(fam, grid);
    CHECK(!tr.in_pole_window[0]);
    CHECK(tr.in_pole_window[1]);
    CHECK(std::isnan(tr.gamma_xy[1]));
    CHECK(tr.poles.size() == poles.size());
    CHECK(tr.gamma_xy[0] == Approx(offdiagonal_rate(fam, 0.5)).epsilon(1e-12));
}

TEST_CASE("divisibility intervals") {
    SUBCASE("sphere with gaussian spectrum") {
        std::vector<double> grid;
        for (int i = 0; i <= 1000; ++i) grid.push_back(i * 0.01);
        const auto iv = divisibility_flags(rate_trajectory(family(0, AngularModel::sphere()), grid));
        REQUIRE(iv.size() == 2);
        CHECK(iv[0].ru_divisible);
        CHECK(!iv[1].ru_divisible);
        // the rate turns negative where d/dx[e^{−x²/2}(1 − x²)] changes sign, x = √3
        CHECK(iv[0].t_end == Approx(std::sqrt(3.0)).epsilon(1e-4));
        CHECK(iv[1].t_end == 10.0);
    }
    SUBCASE("constant positive rates") {
        RateTrajectory tr;
        tr.grid = {0.0, 1.0, 2.0, 3.0};
        tr.divisibility_margin = {0.1, 0.1, 0.1, 0.1};
        tr.rate_scale = {0.1, 0.1, 0.1, 0.1};
        tr.in_pole_window = {false, false, false, false};
        const auto iv = divisibility_flags(tr);
        REQUIRE(iv.size() == 1);
        CHECK(iv[0].ru_divisible);
        CHECK(iv[0].t_begin == 0.0);
        CHECK(iv[0].t_end == 3.0);
    }
    SUBCASE("reciprocal square alternates with the oscillating tail") {
        std::vector<double> grid;
        for (int i = 0; i <= 3000; ++i) grid.push_back(i * 0.01);
        const auto iv = divisibility_flags(rate_trajectory(family(2, AngularModel::sphere()), grid));
        // γ ∝ −d/dx(sin x / x), which changes sign where tan x = x
        const auto ref = oracle::roots([](double x) { return x * std::cos(x) - std::sin(x); }, 0.5, 30.0, 3000);
        REQUIRE(iv.size() == ref.size() + 1);
        for (std::size_t i = 0; i < iv.size(); ++i) CHECK(iv[i].ru_divisible == (i % 2 == 0));
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(iv[i].t_end == Approx(ref[i]).epsilon(1e-4));
    }
}

TEST_CASE("reduction limits") {
    SUBCASE("kneaded cardioid approaches the cardioid") {
        for (int k = 0; k < 3; ++k) {
            const auto c = family(k, AngularModel::cardioid());
            const auto kn = family(k, AngularModel::kneaded_cardioid(1e-6));
            for (double t : {0.2, 0.7, 1.1}) {
                const auto gc = extract_generator(c, t), gk = extract_generator(kn, t);
                CHECK((gc.kossakowski - gk.kossakowski).cwiseAbs().maxCoeff() < 1e-4);
                CHECK((gc.hamiltonian - gk.hamiltonian).norm() < 1e-4);
            }
        }
    }
    SUBCASE("cardioid without its first moment") {
        for (int k = 0; k < 3; ++k) {
            auto m = directional_moments(AngularModel::cardioid());
            m.first.setZero();
            const MapFamily fam(builtin_radial(k), m, 1.0);
            for (double t : {0.2, 0.7, 1.1}) {
                const auto g = extract_generator(fam, t);
                CHECK(g.hz() == 0.0);
                const Vec3 ref = general_diagonal_rates(fam, t);
                for (int j = 0; j < 3; ++j) CHECK(std::abs(g.gamma(Axis(j)) - ref[j]) < 1e-4);
            }
        }
    }
    SUBCASE("nearly equal second moments give the isotropic rate") {
        for (int k = 0; k < 3; ++k) {
            DirectionalMoments m;
            m.second = Vec3(1.0 / 3.0 + 1e-6, 1.0 / 3.0, 1.0 / 3.0 - 1e-6).asDiagonal();
            const MapFamily fam(builtin_radial(k), m, 1.0);
            for (double t : {0.2, 0.7, 1.1}) {
                const auto g = extract_generator(fam, t);
                for (int j = 0; j < 3; ++j) CHECK(std::abs(g.gamma(Axis(j)) - isotropic_rate(builtin_radial(k), t)) < 1e-4);
            }
        }
    }
}

TEST_CASE("short-time positivity of the kossakowski matrix") {
    for (int k = 0; k < 3; ++k) {
        for (const auto& ang : all_angular()) {
            const auto fam = family(k, ang);
            CAPTURE(fam.radial().name());
            CAPTURE(ang.name());
            const bool diagonal = ang.kind() != AngularKind::kneaded_cardioid;
            // first sign change of the rates: the diagonal γ_j when K is diagonal, otherwise the
            // canonical rates (eigenvalues of K)
            double t1 = 0.0;
            for (double t = 1e-3; t < 20.0; t += 1e-3) {
                const auto g = extract_generator(fam, t);
                bool negative = false;
                if (diagonal) {
                    for (int j = 0; j < 3; ++j) negative = negative || g.gamma(Axis(j)) < 0.0;
                } else {
                    negative = g.min_kossakowski_eigenvalue() < 0.0;
                }
                if (negative) break;
                t1 = t;
            }
            CHECK(t1 > 0.1);
            CHECK(extract_generator(fam, 1e-4).min_kossakowski_eigenvalue() > 0.0);
            for (double t = 1e-3; t <= t1; t += 1e-3) CHECK(extract_generator(fam, t).min_kossakowski_eigenvalue() >= -1e-10);
        }
    }
}

TEST_CASE("kneaded cardioid loses positivity before its diagonal rates change sign") {
    const auto fam = family(0, AngularModel::kneaded_cardioid(0.3));
    double t_eig = -1.0, t_diag = -1.0;
    for (double t = 1e-3; t < 5.0 && (t_eig < 0 || t_diag < 0); t += 1e-3) {
        const auto g = extract_generator(fam, t);
        if (t_eig < 0 && g.min_kossakowski_eigenvalue() < 0.0) t_eig = t;
        if (t_diag < 0 && g.kossakowski.diagonal().minCoeff() < 0.0) t_diag = t;
    }
    CHECK(t_eig > 1.0);
    CHECK(t_eig < t_diag);
}
