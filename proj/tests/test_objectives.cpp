#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "magmpm/objectives.hpp"

#include <random>

using namespace magmpm;

namespace {

struct Fixture {
    ParticleSet<2> ps;
    CompiledTask<2> task;
    Trajectory<2> traj;

    explicit Fixture(int n = 6) {
        for (int i = 0; i < n; ++i) {
            ps.x0.push_back(Vec<2>(0.001 * i, 0.0));
            ps.volume.push_back(1e-6);
            ps.region.push_back(0);
        }
        ps.n_regions = 1;
        ps.bbox_lo = Vec<2>(0.0, 0.0);
        ps.bbox_hi = Vec<2>(0.001 * (n - 1), 0.0);
        traj.n_steps = 0;
        traj.dt = 1e-4;
        traj.total_mass = 1.0;
        traj.final_state.resize(n);
        for (int i = 0; i < n; ++i) traj.final_state.x[i] = ps.x0[i];
    }
};

} // namespace

TEST_CASE("tip height loss") {
    Fixture fx;
    fx.task.spec.kind = TaskSpec::Kind::TipHeight;
    fx.task.roi = {3, 4, 5};

    SUBCASE("undeformed gives zero") {
        CHECK(tip_height_loss<2>(fx.task, fx.ps, fx.traj.final_state) == 0.0);
    }
    SUBCASE("uniform 1 mm rise gives -1e-3") {
        for (int p : fx.task.roi) fx.traj.final_state.x[p][1] += 1e-3;
        CHECK(tip_height_loss<2>(fx.task, fx.ps, fx.traj.final_state) ==
              doctest::Approx(-1e-3));
    }
    SUBCASE("mixed displacements average") {
        fx.traj.final_state.x[3][1] += 2e-3;
        fx.traj.final_state.x[5][1] += -1e-3;
        CHECK(tip_height_loss<2>(fx.task, fx.ps, fx.traj.final_state) ==
              doctest::Approx(-(1.0 / 3.0) * 1e-3));
    }
}

TEST_CASE("tip left reach loss") {
    Fixture fx;
    fx.task.spec.kind = TaskSpec::Kind::TipLeftReach;
    fx.task.roi = {4, 5};

    CHECK(tip_left_reach_loss<2>(fx.task, fx.ps, fx.traj.final_state) == 0.0);
    SUBCASE("uniform -3 mm shift") {
        for (int p : fx.task.roi) fx.traj.final_state.x[p][0] -= 3e-3;
        CHECK(tip_left_reach_loss<2>(fx.task, fx.ps, fx.traj.final_state) ==
              doctest::Approx(-3e-3));
    }
    SUBCASE("vertical motion does not register") {
        for (int p : fx.task.roi) fx.traj.final_state.x[p][1] += 5e-3;
        CHECK(tip_left_reach_loss<2>(fx.task, fx.ps, fx.traj.final_state) == 0.0);
    }
}

TEST_CASE("shape match loss") {
    Fixture fx;
    fx.task.spec.kind = TaskSpec::Kind::ShapeMatch;
    fx.task.roi = {0, 1};
    fx.task.target = {fx.ps.x0[0], fx.ps.x0[1]};

    CHECK(shape_match_loss<2>(fx.task, fx.traj.final_state) == 0.0);
    SUBCASE("uniform offset gives |delta|^2") {
        const Vec<2> d(3e-4, -4e-4);
        for (int p : fx.task.roi) fx.traj.final_state.x[p] += d;
        CHECK(shape_match_loss<2>(fx.task, fx.traj.final_state) ==
              doctest::Approx(d.squaredNorm()));
    }
    SUBCASE("two-particle mean of squared errors") {
        fx.traj.final_state.x[0][0] += 1e-3;
        CHECK(shape_match_loss<2>(fx.task, fx.traj.final_state) == doctest::Approx(0.5e-6));
    }
    SUBCASE("count mismatch is an error") {
        fx.task.target.pop_back();
        CHECK_THROWS_AS(shape_match_loss<2>(fx.task, fx.traj.final_state), ValidationError);
    }
}

TEST_CASE("locomotion loss") {
    Fixture fx;
    fx.task.spec.kind = TaskSpec::Kind::LocomotionDistance;
    fx.task.spec.average = TaskSpec::Average::Uniform;
    fx.task.direction = Vec<2>(1.0, 0.0);
    fx.task.roi = {0, 1, 2, 3, 4, 5};

    SUBCASE("zero velocities") {
        fx.traj.mean_v.assign(10, Vec<2>::Zero());
        CHECK(locomotion_loss<2>(fx.task, fx.traj) == 0.0);
    }
    SUBCASE("rigid motion telescopes to -u T") {
        const double u = 0.02;
        const int n = 50;
        fx.traj.mean_v.assign(n, Vec<2>(u, 0.0));
        CHECK(locomotion_loss<2>(fx.task, fx.traj) ==
              doctest::Approx(-u * n * fx.traj.dt).epsilon(1e-14));
    }
    SUBCASE("opposed halves cancel") {
        fx.traj.mean_v.assign(10, Vec<2>::Zero()); // uniform average of +1/-1 halves
        CHECK(locomotion_loss<2>(fx.task, fx.traj) == 0.0);
    }
    SUBCASE("mass averaging uses the mass-weighted series") {
        fx.task.spec.average = TaskSpec::Average::Mass;
        fx.traj.mass_mean_v.assign(10, Vec<2>(0.01, 0.0));
        fx.traj.mean_v.assign(10, Vec<2>(99.0, 0.0));
        CHECK(locomotion_loss<2>(fx.task, fx.traj) ==
              doctest::Approx(-0.01 * 10 * fx.traj.dt));
    }
}

TEST_CASE("multitask aggregation") {
    CHECK(aggregate_multitask({0.7}) == doctest::Approx(0.7));
    CHECK(aggregate_multitask({0.7, -0.2}) == doctest::Approx(0.5));
    CHECK(aggregate_multitask({0.7, -0.2}, {2.0, 1.0}) == doctest::Approx(1.2));
}

TEST_CASE("cotangent seeds") {
    Fixture fx;
    SUBCASE("tip height seed is -1/n on y") {
        fx.task.spec.kind = TaskSpec::Kind::TipHeight;
        fx.task.roi = {3, 4, 5};
        const auto seeds = seed_cotangents<2>(fx.task, fx.ps, fx.traj);
        for (int p = 0; p < 6; ++p) {
            const bool in = p >= 3;
            CHECK(seeds.x_final[p][0] == 0.0);
            CHECK(seeds.x_final[p][1] == doctest::Approx(in ? -1.0 / 3.0 : 0.0));
        }
        CHECK_FALSE(seeds.per_step_velocity);
    }
    SUBCASE("shape match seed is the quadratic derivative") {
        fx.task.spec.kind = TaskSpec::Kind::ShapeMatch;
        fx.task.roi = {0, 1};
        fx.task.target = {fx.ps.x0[0], fx.ps.x0[1]};
        fx.traj.final_state.x[0] += Vec<2>(2e-4, -1e-4);
        const auto seeds = seed_cotangents<2>(fx.task, fx.ps, fx.traj);
        CHECK((seeds.x_final[0] - Vec<2>(2e-4, -1e-4)).norm() ==
              doctest::Approx(0.0).epsilon(1e-18));

        // finite-difference check of the quadratic loss
        const double h = 1e-9;
        for (int a = 0; a < 2; ++a) {
            auto sp = fx.traj.final_state, sm = fx.traj.final_state;
            sp.x[0][a] += h;
            sm.x[0][a] -= h;
            const double fd =
                (shape_match_loss<2>(fx.task, sp) - shape_match_loss<2>(fx.task, sm)) / (2 * h);
            CHECK(seeds.x_final[0][a] == doctest::Approx(fd).epsilon(1e-8));
        }
    }
    SUBCASE("uniform locomotion seed is constant per step") {
        fx.task.spec.kind = TaskSpec::Kind::LocomotionDistance;
        fx.task.spec.average = TaskSpec::Average::Uniform;
        fx.task.direction = Vec<2>(1.0, 0.0);
        const auto seeds = seed_cotangents<2>(fx.task, fx.ps, fx.traj);
        CHECK(seeds.per_step_velocity);
        for (int p = 0; p < 6; ++p)
            CHECK((seeds.v_step_coeff[p] - Vec<2>(-fx.traj.dt / 6.0, 0.0)).norm() == 0.0);
    }
}

TEST_CASE("rigid translation covariance of tip height") {
    Fixture fx;
    fx.task.spec.kind = TaskSpec::Kind::TipHeight;
    fx.task.roi = {3, 4, 5};
    const double before = tip_height_loss<2>(fx.task, fx.ps, fx.traj.final_state);
    const Vec<2> delta(1.3e-3, -0.4e-3);
    for (int p = 0; p < 6; ++p) fx.traj.final_state.x[p] += delta;
    const double after = tip_height_loss<2>(fx.task, fx.ps, fx.traj.final_state);
    CHECK(after - before == doctest::Approx(-delta[1]).epsilon(1e-14));
}

TEST_CASE("mass-averaged velocity is invariant to a global mass scale") {
    // vbar = sum(m v)/sum(m): scaling masses cancels; exercised through the
    // trajectory recording path in the engine tests. Here: direct identity.
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    std::vector<double> m(20);
    std::vector<Vec<2>> v(20);
    for (int i = 0; i < 20; ++i) {
        m[i] = u(rng);
        v[i] = Vec<2>(u(rng), u(rng));
    }
    auto mass_avg = [&](double scale) {
        Vec<2> acc = Vec<2>::Zero();
        double M = 0.0;
        for (int i = 0; i < 20; ++i) {
            acc += scale * m[i] * v[i];
            M += scale * m[i];
        }
        return Vec<2>(acc / M);
    };
    CHECK((mass_avg(1.0) - mass_avg(7.3)).norm() <= 1e-14);
}

TEST_CASE("roi selection") {
    Fixture fx;
    SUBCASE("right band picks the far column") {
        const auto roi = select_roi<2>(fx.ps, TaskSpec::Roi::RightBand, 0.001, 0.0005);
        REQUIRE(roi.size() == 1);
        CHECK(roi[0] == 5);
    }
    SUBCASE("all picks everything") {
        CHECK(select_roi<2>(fx.ps, TaskSpec::Roi::All, 0.001, 0.0005).size() == 6);
    }
    SUBCASE("centerline orders by reference x") {
        const auto roi = select_roi<2>(fx.ps, TaskSpec::Roi::Centerline, 0.001, 0.0005);
        REQUIRE(roi.size() == 6);
        for (int i = 1; i < 6; ++i) CHECK(fx.ps.x0[roi[i - 1]][0] < fx.ps.x0[roi[i]][0]);
    }
    SUBCASE("empty selection is an error") {
        ParticleSet<2> ps = fx.ps;
        ps.bbox_hi[1] = 1.0; // centerline far from every particle
        CHECK_THROWS_AS(select_roi<2>(ps, TaskSpec::Roi::Centerline, 0.001, 0.0005),
                        ValidationError);
    }
}
