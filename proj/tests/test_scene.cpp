#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "magmpm/scene.hpp"

#include <cstring>

using namespace magmpm;

namespace {

const char* kMscrScene = R"({
  "name": "mscr-minimal",
  "dimension": 2,
  "grid": {"domain": [0.025, 0.01]},
  "body": {"shape": "box", "size": [0.0175, 0.00085], "position": [0.003, 0.005]},
  "material": {"G": 303000.0, "rho0": 2000.0, "Brmax": 0.143},
  "regions": {"nx": 10, "ny": 1},
  "stimulus": {"Bmax": 0.008},
  "time": {"T": 0.05},
  "tasks": [{"kind": "tip-height"}]
})";

std::string box_scene(double sx, double sy, double dx, int ppc = 2) {
    char buf[1024];
    std::snprintf(buf, sizeof buf, R"({
      "dimension": 2,
      "grid": {"dx": %.17g, "domain": [%.17g, %.17g], "particles_per_cell": %d},
      "body": {"shape": "box", "size": [%.17g, %.17g], "position": [%.17g, %.17g]},
      "material": {"G": 1e5, "rho0": 2000.0},
      "regions": {"nx": 1, "ny": 1},
      "time": {"T": 1e-4},
      "tasks": []
    })",
                  dx, sx + 8 * dx, sy + 8 * dx, ppc, sx, sy, 4 * dx, 4 * dx);
    return buf;
}

} // namespace

TEST_CASE("minimal MSCR document applies defaults") {
    const SceneSpec s = parse_scene(kMscrScene);
    CHECK(s.dimension == 2);
    CHECK(s.material.K == doctest::Approx(303e6)); // K = 1000 G
    CHECK(s.material.mu0 == doctest::Approx(4e-7 * M_PI));
    CHECK(s.dx == doctest::Approx(0.00085 / 4.0)); // min feature / 4
    CHECK(s.particles_per_cell_axis == 2);
    CHECK(s.dt > 0.0);
    CHECK(s.dt <= s.cfl_limit() * 0.3000001);
    CHECK(s.tasks.size() == 1);
}

TEST_CASE("empty document lists required keys") {
    try {
        parse_scene("{}");
        CHECK(false);
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        for (const char* key : {"dimension", "grid", "body", "material", "regions", "time",
                                "tasks"})
            CHECK(msg.find(key) != std::string::npos);
    }
}

TEST_CASE("zero dt is rejected") {
    std::string doc = kMscrScene;
    doc.replace(doc.find("\"time\": {\"T\": 0.05}"), std::strlen("\"time\": {\"T\": 0.05}"),
                "\"time\": {\"T\": 0.05, \"dt\": 0.0}");
    CHECK_THROWS_WITH_AS(parse_scene(doc), "dt must be positive", ValidationError);
}

TEST_CASE("unknown keys are named") {
    std::string doc = kMscrScene;
    doc.replace(doc.find("\"regions\""), std::strlen("\"regions\""), "\"regionz\"");
    try {
        parse_scene(doc);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("regionz") != std::string::npos);
    }
}

TEST_CASE("padding violation is rejected") {
    // body flush with the domain edge
    const char* doc = R"({
      "dimension": 2,
      "grid": {"dx": 0.001, "domain": [0.02, 0.02]},
      "body": {"shape": "box", "size": [0.01, 0.005], "position": [0.001, 0.008]},
      "material": {"G": 1e5, "rho0": 2000.0},
      "regions": {"nx": 1, "ny": 1},
      "time": {"T": 1e-4},
      "tasks": []
    })";
    CHECK_THROWS_AS(parse_scene(doc), ValidationError);
}

TEST_CASE("seeding a 2x1 cell box with k=2 gives 8 particles") {
    const double dx = 0.001;
    const SceneSpec s = parse_scene(box_scene(2 * dx, 1 * dx, dx));
    const auto ps = seed_particles<2>(s);
    CHECK(ps.size() == 8);
    for (double v : ps.volume) CHECK(v == doctest::Approx((dx / 2) * (dx / 2)));
}

TEST_CASE("lattice volume covers the body area within 1%") {
    const double dx = 0.0005;
    const SceneSpec s = parse_scene(box_scene(0.0175, 0.002, dx));
    const auto ps = seed_particles<2>(s);
    double total = 0.0;
    for (double v : ps.volume) total += v;
    const double area = 0.0175 * 0.002;
    CHECK(std::abs(total - area) / area <= 0.01);
}

TEST_CASE("degenerate box is rejected") {
    CHECK_THROWS_AS(parse_scene(box_scene(0.01, 0.0, 0.001)), ValidationError);
}

TEST_CASE("region assignment follows the grid") {
    const double dx = 0.0005;
    std::string doc = box_scene(0.0175, 0.002, dx);
    doc.replace(doc.find("\"nx\": 1, \"ny\": 1"), std::strlen("\"nx\": 1, \"ny\": 1"),
                "\"nx\": 10, \"ny\": 1");
    const SceneSpec s = parse_scene(doc);
    auto ps = seed_particles<2>(s);
    assign_regions<2>(ps, s);
    CHECK(ps.n_regions == 10);

    // particle closest to x = 0.61 L lands in region floor(10*0.61) = 6
    const double L = 0.0175;
    const double target = ps.bbox_lo[0] + 0.61 * (ps.bbox_hi[0] - ps.bbox_lo[0]);
    int best = 0;
    for (int p = 1; p < ps.size(); ++p)
        if (std::abs(ps.x0[p][0] - target) < std::abs(ps.x0[best][0] - target)) best = p;
    CHECK(ps.region[best] == 6);
    (void)L;

    // partition: counts sum to n_p, none empty
    std::vector<int> counts(10, 0);
    for (int p = 0; p < ps.size(); ++p) ++counts[ps.region[p]];
    int sum = 0;
    for (int c : counts) {
        CHECK(c > 0);
        sum += c;
    }
    CHECK(sum == ps.size());
}

TEST_CASE("particle-wise regions use the particle index") {
    std::string doc = box_scene(0.004, 0.002, 0.0005);
    doc.replace(doc.find("\"nx\": 1, \"ny\": 1"), std::strlen("\"nx\": 1, \"ny\": 1"),
                "\"particle_wise\": true");
    const SceneSpec s = parse_scene(doc);
    auto ps = seed_particles<2>(s);
    assign_regions<2>(ps, s);
    CHECK(ps.n_regions == ps.size());
    for (int p = 0; p < ps.size(); ++p) CHECK(ps.region[p] == p);
}

TEST_CASE("walker-style 18x6 region grid is fully populated") {
    const double dx = 0.00025;
    char buf[1024];
    std::snprintf(buf, sizeof buf, R"({
      "dimension": 2,
      "grid": {"dx": %.17g, "domain": [0.01, 0.006]},
      "body": {"shape": "box", "size": [0.006, 0.002], "position": [0.002, 0.002]},
      "material": {"G": 1e5, "rho0": 2000.0},
      "regions": {"nx": 18, "ny": 6},
      "time": {"T": 1e-4},
      "tasks": []
    })",
                  dx);
    const SceneSpec s = parse_scene(buf);
    auto ps = seed_particles<2>(s);
    assign_regions<2>(ps, s);
    CHECK(ps.n_regions == 108);
    std::vector<int> counts(108, 0);
    for (int p = 0; p < ps.size(); ++p) ++counts[ps.region[p]];
    for (int c : counts) CHECK(c > 0);
}

TEST_CASE("empty region is an error naming the region") {
    // 1-cell-wide body with more regions along y than particle rows
    const char* doc = R"({
      "dimension": 2,
      "grid": {"dx": 0.001, "domain": [0.02, 0.02]},
      "body": {"shape": "box", "size": [0.008, 0.001], "position": [0.004, 0.008]},
      "material": {"G": 1e5, "rho0": 2000.0},
      "regions": {"nx": 1, "ny": 5},
      "time": {"T": 1e-4},
      "tasks": []
    })";
    const SceneSpec s = parse_scene(doc);
    auto ps = seed_particles<2>(s);
    CHECK_THROWS_AS(assign_regions<2>(ps, s), ValidationError);
}

TEST_CASE("identical scene text seeds bit-identical particles") {
    const SceneSpec s1 = parse_scene(kMscrScene);
    const SceneSpec s2 = parse_scene(kMscrScene);
    const auto a = seed_particles<2>(s1);
    const auto b = seed_particles<2>(s2);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.x0.data(), b.x0.data(), a.x0.size() * sizeof(Vec<2>)) == 0);
    CHECK(std::memcmp(a.volume.data(), b.volume.data(), a.volume.size() * sizeof(double)) == 0);
}

TEST_CASE("3D seeding and cylinder bodies") {
    const char* doc = R"({
      "dimension": 3,
      "grid": {"dx": 0.0005, "domain": [0.012, 0.008, 0.008]},
      "body": {"shape": "cylinder", "axis": "x", "center": [0.006, 0.004, 0.004],
               "radius": 0.0012, "length": 0.006},
      "material": {"G": 1e5, "rho0": 2000.0},
      "regions": {"nx": 5, "ny": 1, "nz": 2},
      "time": {"T": 1e-4},
      "tasks": []
    })";
    const SceneSpec s = parse_scene(doc);
    auto ps = seed_particles<3>(s);
    CHECK(ps.size() > 100);
    assign_regions<3>(ps, s);
    CHECK(ps.n_regions == 10);
    double total = 0.0;
    for (double v : ps.volume) total += v;
    const double vol = M_PI * 0.0012 * 0.0012 * 0.006;
    CHECK(std::abs(total - vol) / vol < 0.15); // coarse lattice vs curved surface
}
