#include "coopdgnss/errors.hpp"
#include "coopdgnss/experiments.hpp"
#include "coopdgnss/geometry.hpp"
#include "coopdgnss/netmodel.hpp"

#include "doctest.h"
#include "helpers.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace coopdgnss;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// sqrt(trace((H^T H)^-1)) through an independent elimination.
double gdop_oracle(const Eigen::MatrixXd& h) {
    return std::sqrt(testing::gauss_jordan_inverse(h.transpose() * h).trace());
}

}  // namespace

TEST_CASE("line-of-sight vectors follow azimuth/elevation and E is their negation") {
    const auto g = testing::sky(9, 3);
    const Eigen::MatrixXd e = geometry_matrix(g);
    for (int s = 0; s < g.size(); ++s) {
        CHECK(g.los[s].norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::asin(g.los[s].z()) == doctest::Approx(g.elevations[s]).epsilon(1e-12));
        CHECK((e.row(s).transpose() + g.los[s]).norm() == 0.0);
    }
    const Eigen::MatrixXd h = observation_matrix(g);
    CHECK(h.leftCols(3) == e);
    CHECK(h.col(3) == Eigen::VectorXd::Ones(g.size()));
}

TEST_CASE("gdop of a hand-built constellation") {
    // Zenith plus three satellites at 0 deg elevation, 120 deg apart.
    SatelliteGeometry g;
    g.los.emplace_back(0, 0, 1);
    for (int i = 0; i < 3; ++i) {
        const double az = 2.0 * std::numbers::pi * i / 3.0;
        g.los.emplace_back(std::sin(az), std::cos(az), 0.0);
    }
    g.elevations = {std::numbers::pi / 2, 0, 0, 0};
    const Eigen::MatrixXd h = observation_matrix(g);
    // H^T H = diag(1.5, 1.5, *, *) with the up/clock block [[1, -1], [-1, 4]].
    const double expected = std::sqrt(2.0 / 1.5 + (4.0 + 1.0) / 3.0);
    CHECK(gdop(h) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(gdop(h) == doctest::Approx(gdop_oracle(h)).epsilon(1e-12));
}

TEST_CASE("gdop is invariant to satellite order and rejects degenerate geometry") {
    const auto g = testing::sky(7, 11);
    const Eigen::MatrixXd h = observation_matrix(g);
    Eigen::MatrixXd shuffled = h;
    shuffled.row(0).swap(shuffled.row(5));
    shuffled.row(2).swap(shuffled.row(3));
    CHECK(gdop(shuffled) == doctest::Approx(gdop(h)).epsilon(1e-12));
    CHECK(gdop(h) == doctest::Approx(gdop_oracle(h)).epsilon(1e-10));

    Eigen::MatrixXd coplanar = h.topRows(4);
    coplanar.row(1) = coplanar.row(0);
    CHECK_THROWS_AS(gdop(coplanar), NumericalError);
}

TEST_CASE("double-difference geometry equals the pivot operator applied to E") {
    const auto g = testing::sky(6, 5);
    const Eigen::MatrixXd e = geometry_matrix(g);
    for (int p = 0; p < g.size(); ++p) {
        const Eigen::MatrixXd b = dd_geometry(e, p);
        REQUIRE(b.rows() == g.size() - 1);
        const Eigen::MatrixXd via_op = dd_operator(1, g.size(), p) * e;
        CHECK((b - via_op).norm() == 0.0);
        int row = 0;
        for (int s = 0; s < g.size(); ++s) {
            if (s == p) continue;
            CHECK((b.row(row++) - (e.row(s) - e.row(p))).norm() == 0.0);
        }
    }
    CHECK_THROWS_AS(dd_geometry(e.topRows(1), 0), DimensionError);
}

TEST_CASE("generated constellations respect the mask and are reproducible") {
    const double mask = 20.0 * kDeg;
    const auto a = generate_constellation(12, mask, 42);
    const auto b = generate_constellation(12, mask, 42);
    const auto c = generate_constellation(12, mask, 43);
    CHECK_NOTHROW(a.validate(mask));
    CHECK(a.los == b.los);
    CHECK(a.los != c.los);
    for (int s = 0; s < a.size(); ++s) CHECK(a.elevations[s] <= a.elevations[a.pivot]);
}

TEST_CASE("geometry JSON round trip and strict keys") {
    const auto g = testing::sky(5, 8);
    const auto back = geometry_from_json(geometry_to_json(g));
    REQUIRE(back.size() == g.size());
    for (int s = 0; s < g.size(); ++s) {
        CHECK(back.los[s] == g.los[s]);
        CHECK(back.elevations[s] == g.elevations[s]);
    }
    CHECK(back.pivot == g.pivot);
    CHECK_THROWS_AS(geometry_from_json(R"({"los":[[0,0,1]],"elevations_rad":[1.5707963267948966],"pivot":0,"x":1})"),
                    ConfigError);
    CHECK_THROWS_AS(geometry_from_json("{not json"), ConfigError);

    const auto path = (std::filesystem::temp_directory_path() / "coopdgnss_geometry_rt.json").string();
    save_geometry(g, path);
    CHECK(load_geometry(path).los == g.los);
    std::filesystem::remove(path);
}

TEST_CASE("prefix keeps order and re-picks the pivot when it falls outside") {
    auto g = testing::sky(8, 21);
    g.pivot = 7;
    const auto p = g.prefix(4);
    CHECK(p.size() == 4);
    CHECK(p.los[3] == g.los[3]);
    CHECK(p.pivot >= 0);
    CHECK(p.pivot < 4);
    for (int s = 0; s < 4; ++s) CHECK(p.elevations[s] <= p.elevations[p.pivot]);
}

TEST_CASE("shipped regime fixtures hit their target GDOP") {
    const double mask = 20.0 * kDeg;
    const auto fig4 = geometry_from_json(builtin_fixture("fig4"));
    CHECK(fig4.size() == 23);
    CHECK_NOTHROW(fig4.validate(mask));
    CHECK(gdop(observation_matrix(fig4.prefix(4))) == doctest::Approx(2.5).epsilon(0.05 / 2.5));
    CHECK(common_pivot(fig4, make_split(4, 19)) == fig4.pivot);

    const auto fig5 = geometry_from_json(builtin_fixture("fig5"));
    CHECK(fig5.size() == 8);
    CHECK_NOTHROW(fig5.validate(mask));
    CHECK(gdop(observation_matrix(fig5.prefix(4))) == doctest::Approx(2.97).epsilon(0.05 / 2.97));
    CHECK(common_pivot(fig5, make_split(4, 4)) == fig5.pivot);

    // The checked-in files and the compiled copies agree.
    CHECK(load_geometry(std::string(COOPDGNSS_SOURCE_DIR) + "/fixtures/fig4_geometry.json").los == fig4.los);
}

TEST_CASE("regime search is seeded and deterministic") {
    std::uint64_t seed_a = 0, seed_b = 0;
    const auto a = find_regime_geometry(4, 8, 3.0, 0.05, 20.0 * kDeg, 100, &seed_a);
    const auto b = find_regime_geometry(4, 8, 3.0, 0.05, 20.0 * kDeg, 100, &seed_b);
    CHECK(seed_a == seed_b);
    CHECK(a.los == b.los);
    CHECK(std::abs(gdop(observation_matrix(a.prefix(4))) - 3.0) <= 0.05);
    CHECK(a.pivot < 4);
}

TEST_CASE("visibility split and common pivot") {
    const auto v = make_split(4, 3);
    CHECK(v.common == std::vector<int>{0, 1, 2, 3});
    CHECK(v.exclusive == std::vector<int>{4, 5, 6});
    CHECK(v.total() == 7);
    auto g = testing::sky(7, 2);
    g.elevations = {0.5, 0.9, 0.7, 0.6, 1.4, 0.4, 0.3};
    g.pivot = 4;
    CHECK(common_pivot(g, v) == 1);
    CHECK_THROWS_AS(make_split(0, 3), ConfigError);
}
