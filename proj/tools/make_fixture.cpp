// Seeded search for a constellation whose first `common` satellites hit a target GDOP.
#include "coopdgnss/geometry.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Generate a regime geometry fixture"};
    int common = 4, total = 8;
    double target = 2.5, tol = 0.05, mask_deg = 20.0;
    std::uint64_t seed = 1;
    std::string out;
    app.add_option("--common", common, "satellites seen by every user")->check(CLI::PositiveNumber);
    app.add_option("--total", total, "satellites tracked by the base")->check(CLI::PositiveNumber);
    app.add_option("--gdop", target, "target GDOP of the common set");
    app.add_option("--tol", tol, "accepted GDOP deviation");
    app.add_option("--mask-deg", mask_deg, "elevation mask (deg)");
    app.add_option("--seed", seed, "first seed tried");
    app.add_option("--out", out, "output JSON path")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        std::uint64_t used = 0;
        const double mask = mask_deg * std::acos(-1.0) / 180.0;
        const auto g = coopdgnss::find_regime_geometry(common, total, target, tol, mask, seed, &used);
        coopdgnss::save_geometry(g, out);
        std::cout << "seed " << used << " gdop "
                  << coopdgnss::gdop(coopdgnss::observation_matrix(g.prefix(common))) << '\n';
    } catch (const std::exception& ex) {
        std::cerr << "make_fixture: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
