#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "magmpm/constitutive.hpp"

#include <complex>
#include <random>

using namespace magmpm;
using Cplx = std::complex<double>;

namespace {

template <int D>
Mat<D> random_F(std::mt19937& rng) {
    // random gradients with det in [0.5, 2]
    std::uniform_real_distribution<double> u(-0.35, 0.35);
    for (;;) {
        Mat<D> F = Mat<D>::Identity();
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) F(i, j) += u(rng);
        const double J = F.determinant();
        if (J >= 0.5 && J <= 2.0) return F;
    }
}

Mat<2> rotation2(double angle) {
    Mat<2> Q;
    Q << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return Q;
}

template <int D>
double total_energy(const Mat<D>& F, double G, double K, const Vec<D>& Br, const Vec<D>& Ba,
                    double mu0) {
    return elastic_energy<double, D>(F, G, K) + magnetic_energy<double, D>(F, Br, Ba, mu0);
}

} // namespace

TEST_CASE("elastic energy reference values") {
    CHECK(elastic_energy<double, 3>(Mat<3>::Identity(), 5e4, 1e6) == doctest::Approx(0.0));

    Mat<3> F = Mat<3>::Identity();
    F(0, 0) = 2.0;
    // oracle: 0.5*(6*2^(-2/3) - 3), high-precision evaluation
    CHECK(elastic_energy<double, 3>(F, 1.0, 0.0) ==
          doctest::Approx(0.38988157484230975).epsilon(1e-14));
    CHECK(elastic_energy<double, 3>(F, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("plane strain embedding matches the 3D evaluation") {
    std::mt19937 rng(11);
    for (int it = 0; it < 50; ++it) {
        const Mat<2> F2 = random_F<2>(rng);
        Mat<3> F3 = Mat<3>::Identity();
        F3.topLeftCorner<2, 2>() = F2;
        CHECK(elastic_energy<double, 2>(F2, 3.0e5, 2.0e6) ==
              doctest::Approx(elastic_energy<double, 3>(F3, 3.0e5, 2.0e6)).epsilon(1e-13));
        const Mat<2> P2 = pk1_elastic<double, 2>(F2, 3.0e5, 2.0e6);
        const Mat<3> P3 = pk1_elastic<double, 3>(F3, 3.0e5, 2.0e6);
        CHECK((P2 - P3.topLeftCorner<2, 2>()).norm() <= 1e-9 * P3.norm());
    }
}

TEST_CASE("magnetic energy cases") {
    const double mu0 = 4e-7 * M_PI;
    Vec<2> Br(0.1, 0.0);
    SUBCASE("orthogonal vectors at identity") {
        Vec<2> Ba(0.0, 0.02);
        CHECK(magnetic_energy<double, 2>(Mat<2>::Identity(), Br, Ba, mu0) ==
              doctest::Approx(0.0));
    }
    SUBCASE("parallel case") {
        Vec<2> Ba(0.02, 0.0);
        CHECK(magnetic_energy<double, 2>(Mat<2>::Identity(), Br, Ba, mu0) ==
              doctest::Approx(-0.1 * 0.02 / mu0).epsilon(1e-14));
    }
    SUBCASE("90 degree rotation maps axial remanence onto the field") {
        Vec<2> Ba(0.0, 0.02);
        CHECK(magnetic_energy<double, 2>(rotation2(M_PI / 2), Br, Ba, mu0) ==
              doctest::Approx(-0.1 * 0.02 / mu0).epsilon(1e-12));
    }
}

TEST_CASE("pk1 special cases") {
    const double mu0 = 4e-7 * M_PI;
    SUBCASE("stress-free reference") {
        Vec<2> zero = Vec<2>::Zero();
        Vec<2> Br(0.1, 0.0);
        const Mat<2> P = pk1_stress<double, 2>(Mat<2>::Identity(), 1e5, 1e6, Br, zero, mu0);
        CHECK(P.norm() == doctest::Approx(0.0));
    }
    SUBCASE("pure magnetic stress") {
        Vec<2> Br(0.05, 0.02), Ba(0.003, -0.001);
        std::mt19937 rng(3);
        const Mat<2> F = random_F<2>(rng);
        const Mat<2> P = pk1_stress<double, 2>(F, 0.0, 0.0, Br, Ba, mu0);
        const Mat<2> expect = -(Ba * Br.transpose()) / mu0;
        CHECK((P - expect).norm() == doctest::Approx(0.0));
    }
}

TEST_CASE("pk1 equals the energy gradient (finite differences, 1e4 samples)") {
    const double mu0 = 4e-7 * M_PI;
    const double G = 3.03e5, K = 3.03e6;
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int it = 0; it < 10000; ++it) {
        const Mat<2> F = random_F<2>(rng);
        Vec<2> Br(0.143 * u(rng), 0.143 * u(rng));
        Vec<2> Ba(0.02 * u(rng), 0.02 * u(rng));
        const Mat<2> P = pk1_stress<double, 2>(F, G, K, Br, Ba, mu0);
        const double h = 1e-6;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                Mat<2> Fp = F, Fm = F;
                Fp(i, j) += h;
                Fm(i, j) -= h;
                const double fd = (total_energy<2>(Fp, G, K, Br, Ba, mu0) -
                                   total_energy<2>(Fm, G, K, Br, Ba, mu0)) /
                                  (2 * h);
                const double rel = std::abs(P(i, j) - fd) /
                                   std::max(1e-4 * P.norm(), std::abs(P(i, j)));
                worst = std::max(worst, rel);
            }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("objectivity and magnetic co-rotation") {
    const double mu0 = 4e-7 * M_PI;
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int it = 0; it < 200; ++it) {
        const Mat<2> F = random_F<2>(rng);
        const Mat<2> Q = rotation2(M_PI * u(rng));
        const double we = elastic_energy<double, 2>(F, 2e5, 2e6);
        CHECK(elastic_energy<double, 2>(Q * F, 2e5, 2e6) ==
              doctest::Approx(we).epsilon(1e-12));
        Vec<2> Br(0.1 * u(rng), 0.1 * u(rng));
        Vec<2> Ba(0.01 * u(rng), 0.01 * u(rng));
        const double wm = magnetic_energy<double, 2>(F, Br, Ba, mu0);
        const double wm_rot = magnetic_energy<double, 2>(Q * F, Br, Vec<2>(Q * Ba), mu0);
        CHECK(wm_rot == doctest::Approx(wm).epsilon(1e-12));
    }
}

TEST_CASE("cauchy stress identity and magnetic torque") {
    const double mu0 = 4e-7 * M_PI;
    std::mt19937 rng(31);
    const Mat<2> F = random_F<2>(rng);
    Vec<2> Br(0.08, -0.03), Ba(0.004, 0.006);
    const Mat<2> P = pk1_stress<double, 2>(F, 1e5, 1e6, Br, Ba, mu0);
    const Mat<2> sigma = cauchy_stress<double, 2>(F, 1e5, 1e6, Br, Ba, mu0);
    const Mat<2> expect = P * F.transpose() / F.determinant();
    CHECK((sigma - expect).norm() <= 1e-15 * expect.norm());

    // perpendicular field and remanence at identity: antisymmetric part present
    Vec<2> Brx(0.1, 0.0), Bay(0.0, 0.005);
    const Mat<2> sm = cauchy_stress<double, 2>(Mat<2>::Identity(), 0.0, 0.0, Brx, Bay, mu0);
    const Mat<2> expect_m = -(Bay * Brx.transpose()) / mu0;
    CHECK((sm - expect_m).norm() == doctest::Approx(0.0));
    CHECK((sm - sm.transpose()).norm() > 0.0);
}

TEST_CASE("remanence push-forward") {
    Vec<2> Br(1.0, 0.0);
    SUBCASE("identity") {
        CHECK((push_forward_remanence<double, 2>(Mat<2>::Identity(), Br) - Br).norm() ==
              doctest::Approx(0.0));
    }
    SUBCASE("pure rotation preserves magnitude") {
        const Mat<2> Q = rotation2(0.7);
        const Vec<2> out = push_forward_remanence<double, 2>(Q, Br);
        CHECK(out.norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK((out - Q * Br).norm() == doctest::Approx(0.0));
    }
    SUBCASE("isochoric stretch") {
        Mat<2> F;
        F << 2.0, 0.0, 0.0, 0.5;
        const Vec<2> out = push_forward_remanence<double, 2>(F, Br);
        CHECK(out[0] == doctest::Approx(2.0));
        CHECK(out[1] == doctest::Approx(0.0));
    }
}

TEST_CASE("inverted elements are rejected with the particle index") {
    Mat<2> F = Mat<2>::Identity();
    F(0, 0) = -1.0;
    CHECK_THROWS_AS((elastic_energy<double, 2>(F, 1e5, 1e6, 7)), SimulationError);
    try {
        pk1_elastic<double, 2>(F, 1e5, 1e6, 7);
        CHECK(false);
    } catch (const SimulationError& e) {
        CHECK(e.particle_index == 7);
    }
}

TEST_CASE("pk1 directional derivative matches complex step") {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double G = 2.2e5, K = 1.7e6, h = 1e-20;
    auto run = [&](auto dim) {
        constexpr int D = decltype(dim)::value;
        for (int it = 0; it < 100; ++it) {
            const Mat<D> F = random_F<D>(rng);
            Mat<D> dF;
            for (int i = 0; i < D; ++i)
                for (int j = 0; j < D; ++j) dF(i, j) = u(rng);
            MatT<Cplx, D> Fc = F.template cast<Cplx>() + Cplx(0.0, h) * dF.template cast<Cplx>();
            const MatT<Cplx, D> Pc = pk1_elastic<Cplx, D>(Fc, G, K);
            const Mat<D> dP_cs = Pc.imag() / h;
            const Mat<D> dP = pk1_elastic_dir_deriv<D>(F, G, K, dF);
            CHECK((dP - dP_cs).norm() <= 1e-12 * std::max(1.0, dP_cs.norm()));
        }
    };
    run(std::integral_constant<int, 2>{});
    run(std::integral_constant<int, 3>{});
}
