#include "coopdgnss/errors.hpp"
#include "coopdgnss/experiments.hpp"

#include "doctest.h"

#include <cmath>
#include <algorithm>
#include <cstring>

using namespace coopdgnss;
using nlohmann::json;

namespace {

json small_config() {
    return json::parse(R"({
      "network": {"N_c": 1, "N_o": 3, "K_c": 4, "K_o": 3, "alpha": 0.5, "sigma_rho": 1.0},
      "geometry": {"seed": 7, "mask_deg": 15},
      "sweep": {"vary": "alpha", "values": [0.0, 1.0]},
      "montecarlo": {"mode": "cdgnss", "trials": 200, "master_seed": 3}
    })");
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

TEST_CASE("config parsing: defaults, ranges and sigma_phi tied to sigma_rho") {
    auto doc = small_config();
    doc["sweep"] = json::parse(R"({"vary": "sigma_rho", "start": 0.1, "stop": 0.4, "steps": 4})");
    doc["network"]["sigma_phi_ratio"] = 0.01;
    const auto cfg = parse_config(doc, ".");
    REQUIRE(cfg.vary);
    CHECK(cfg.vary->param == SweepParam::sigma_rho);
    CHECK(cfg.vary->values.size() == 4);
    CHECK(cfg.vary->values[3] == doctest::Approx(0.4));
    const auto spec = apply_param(cfg, cfg.base, SweepParam::sigma_rho, 0.3);
    CHECK(spec.sigma_phi == doctest::Approx(0.003));
    CHECK(cfg.trials == 200);
    CHECK(cfg.ils_method == IntegerMethod::ils);
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
    for (const char* section : {"network", "geometry", "sweep", "montecarlo"}) {
        auto doc = small_config();
        doc[section]["surprise"] = 1;
        CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);
    }
    auto doc = small_config();
    doc["extra"] = json::object();
    CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);

    doc = small_config();
    doc["montecarlo"]["trials"] = 0;
    CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);
    doc = small_config();
    doc["sweep"] = json::parse(R"({"vary": "beta", "values": [1]})");
    CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);
    doc = small_config();
    doc["sweep"] = json::parse(R"({"vary": "N_o", "values": [1.5]})");
    CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);
    doc = small_config();
    doc["sweep"] = json::parse(R"({"vary": "alpha", "values": []})");
    CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);
    doc = small_config();
    doc["sweep"] = json::parse(R"({"vary": "alpha", "values": [1], "start": 0, "stop": 1, "steps": 2})");
    CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);
    doc = small_config();
    doc["sweep"]["family"] = json::parse(R"({"param": "alpha", "values": [1]})");
    CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);
    doc = small_config();
    doc["network"]["weighting"] = "snr";
    CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);
    doc = small_config();
    doc["network"]["sigma_phi"] = 0.01;
    doc["network"]["sigma_phi_ratio"] = 0.01;
    CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);
    doc = small_config();
    doc["geometry"] = json::parse(R"({"builtin": "nowhere"})");
    CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);
    doc = small_config();
    doc["network"]["N_c"] = "two";
    CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);
}

TEST_CASE("presets parse and describe the intended experiments") {
    CHECK(preset_names() == std::vector<std::string>{"fig4a", "fig4b", "fig5"});
    const auto a = parse_config(preset_json("fig4a"), ".");
    CHECK(a.base.N_c == 2);
    CHECK(a.base.N_o == 10);
    CHECK(a.vary->param == SweepParam::alpha);
    CHECK(a.vary->values.front() == 0.0);
    CHECK(a.vary->values.back() == 3.0);
    CHECK(a.family->values == std::vector<double>{8, 14, 19});
    CHECK(a.trials == 10000);
    const auto b = parse_config(preset_json("fig4b"), ".");
    CHECK(b.base.alpha == 0.5);
    CHECK(b.vary->param == SweepParam::N_o);
    CHECK(b.vary->values.back() == 50);
    const auto c = parse_config(preset_json("fig5"), ".");
    CHECK(c.mode == Mode::crtk);
    CHECK(c.base.K_c + c.base.K_o == 8);
    CHECK(c.family->values == std::vector<double>{1, 5, 25});
    CHECK(*c.sigma_phi_ratio == 0.01);
    CHECK(resolve_geometry(a).size() == 23);
    CHECK(resolve_geometry(c).size() == 8);
    CHECK_THROWS_AS(preset_json("fig6"), ConfigError);
}

TEST_CASE("geometry must cover the largest swept satellite count") {
    auto doc = small_config();
    doc["geometry"] = json::parse(R"({"builtin": "fig5"})");
    doc["sweep"] = json::parse(R"({"vary": "K_o", "values": [2, 4, 6]})");
    CHECK_THROWS_AS(resolve_geometry(parse_config(doc, ".")), ConfigError);
    doc["geometry"] = json::parse(R"({"seed": 3})");
    CHECK(resolve_geometry(parse_config(doc, ".")).size() == 10);
}

TEST_CASE("scenario bounds agree with the structured cluster bound") {
    NetworkSpec s;
    s.N_c = 1;
    s.N_o = 6;
    s.K_c = 4;
    s.K_o = 5;
    s.alpha = 0.8;
    const auto g = generate_constellation(9, 0.3, 5);
    const Scenario sc(s, g, Mode::cdgnss, IntegerMethod::ils, 1000);
    REQUIRE(sc.solvable());
    const Eigen::MatrixXd h = observation_matrix(sc.geometry());
    const Eigen::MatrixXd j_c = fim(h.topRows(4), Eigen::MatrixXd::Identity(4, 4));
    const Eigen::MatrixXd j_o = fim(h.bottomRows(5), Eigen::MatrixXd::Identity(5, 5));
    const double structured = position_rmse(constrained_user_crb(j_c, j_o, 6, 0.8));
    CHECK(sc.rmse_crb() == doctest::Approx(structured).epsilon(1e-10));
    CHECK(sc.rmse_asymptotic() == doctest::Approx(position_rmse(asymptotic_bound(j_c, 0.8, 6))).epsilon(1e-12));
    CHECK(sc.rmse_ideal() <= sc.rmse_crb() + 1e-9);
    CHECK(sc.rmse_crb() <= sc.rmse_noncoop() + 1e-9);

    const auto rep = sc.bound_report();
    CHECK(rep.rmse_per_user.size() == 7);
    CHECK(rep.rmse_per_user[0] == doctest::Approx(sc.rmse_crb()).epsilon(1e-12));
    CHECK(std::sqrt(rep.crb_user_blocks[2].trace()) == rep.rmse_per_user[2]);

    // Same position bound in the double-differenced code model.
    const Scenario rtk(s, g, Mode::crtk, IntegerMethod::ils, 1000);
    CHECK(rtk.rmse_crb() == doctest::Approx(sc.rmse_crb()).epsilon(1e-9));
    CHECK(rtk.rmse_noncoop() == doctest::Approx(sc.rmse_noncoop()).epsilon(1e-9));
}

TEST_CASE("too few common satellites: the scenario is unsolvable") {
    NetworkSpec s;
    s.N_c = 1;
    s.N_o = 2;
    s.K_c = 3;
    s.K_o = 4;
    const Scenario sc(s, generate_constellation(7, 0.3, 1), Mode::cdgnss, IntegerMethod::ils, 1000);
    CHECK_FALSE(sc.solvable());
    CHECK_THROWS_AS(sc.bound_report(), NumericalError);

    auto doc = small_config();
    doc["network"]["K_c"] = 3;
    const auto rows = run_sweep(parse_config(doc, ".")).tables.at(0);
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].solvable);
    CHECK(std::isnan(rows[0].rmse_wls));
    CHECK(rows[0].trials == 0);
}

TEST_CASE("sweep rows: benchmarks, empirical rmse and alpha = 0 degeneracy") {
    const auto cfg = parse_config(small_config(), ".");
    const auto rows = run_cdgnss_sweep(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].swept_param == "alpha");
    CHECK(rows[0].rmse_crb == doctest::Approx(rows[0].rmse_ideal).epsilon(1e-12));
    CHECK(rows[0].rmse_noncoop == doctest::Approx(rows[0].rmse_ideal).epsilon(1e-12));
    CHECK(rows[1].rmse_ideal <= rows[1].rmse_crb + 1e-9);
    CHECK(rows[1].rmse_crb <= rows[1].rmse_noncoop + 1e-9);
    for (const auto& r : rows) {
        CHECK(r.trials == 200);
        CHECK(std::isnan(r.success_rate));
        CHECK(std::abs(r.rmse_wls - r.rmse_crb) / r.rmse_crb < 0.15);
    }
}

TEST_CASE("C-RTK sweep: low noise fixes every trial") {
    auto doc = small_config();
    doc["montecarlo"]["mode"] = "crtk";
    doc["network"]["sigma_phi_ratio"] = 0.01;
    doc["network"]["alpha"] = 1.0;
    doc["sweep"] = json::parse(R"({"vary": "sigma_rho", "values": [0.01, 2.0]})");
    const auto rows = run_crtk_sweep(parse_config(doc, "."));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].success_rate == 1.0);
    CHECK(rows[0].rmse_wls / rows[0].rmse_crb == doctest::Approx(0.01).epsilon(0.15));
    CHECK(rows[0].rmse_fix_crb / rows[0].rmse_crb == doctest::Approx(1.0 / std::sqrt(1.0 + 1e4)).epsilon(1e-9));
    CHECK(rows[1].success_rate < 0.1);
    CHECK(std::abs(rows[1].rmse_float_wls - rows[1].rmse_crb) / rows[1].rmse_crb < 0.15);
}

TEST_CASE("sweeps are deterministic and independent of the worker count") {
    auto cfg = parse_config(small_config(), ".");
    cfg.threads = 1;
    const auto one = sweep_csv(run_cdgnss_sweep(cfg));
    cfg.threads = 4;
    const auto four = sweep_csv(run_cdgnss_sweep(cfg));
    CHECK(one == four);
    cfg.master_seed = 4;
    CHECK(sweep_csv(run_cdgnss_sweep(cfg)) != one);
}

TEST_CASE("family sweeps produce one table per value") {
    auto doc = small_config();
    doc["sweep"]["family"] = json::parse(R"({"param": "N_o", "values": [1, 4]})");
    const auto cfg = parse_config(doc, ".");
    const auto res = run_sweep(cfg);
    REQUIRE(res.tables.size() == 2);
    CHECK(res.family_values == std::vector<double>{1, 4});
    CHECK(res.tables[1][1].rmse_crb < res.tables[0][1].rmse_crb);
    CHECK(family_path("out/sweep.csv", cfg.family, 4) == "out/sweep_N_o4.csv");
    CHECK(family_path("sweep.csv", std::nullopt, 4) == "sweep.csv");
}

TEST_CASE("sweep CSV format and bit-exact round trip") {
    CHECK(sweep_csv({}) ==
          "swept_param,swept_value,rmse_wls_m,rmse_crb_m,rmse_noncoop_m,rmse_ideal_m,rmse_asymptotic_m,success_rate,"
          "trials\n");
    SweepRow r;
    r.swept_param = "sigma_rho";
    r.swept_value = 0.1;
    r.rmse_wls = 1.0 / 3.0;
    r.rmse_crb = 2.0 / 7.0;
    r.rmse_noncoop = 1e-300;
    r.rmse_ideal = 123456789.123456789;
    r.rmse_asymptotic = std::nextafter(1.0, 2.0);
    r.success_rate = 0.9973;
    r.trials = 10000;
    SweepRow nan_row = r;
    nan_row.success_rate = std::nan("");
    const auto text = sweep_csv({r, nan_row});
    const auto back = parse_csv(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].swept_param == "sigma_rho");
    CHECK(same_bits(back[0].rmse_wls, r.rmse_wls));
    CHECK(same_bits(back[0].rmse_crb, r.rmse_crb));
    CHECK(same_bits(back[0].rmse_noncoop, r.rmse_noncoop));
    CHECK(same_bits(back[0].rmse_ideal, r.rmse_ideal));
    CHECK(same_bits(back[0].rmse_asymptotic, r.rmse_asymptotic));
    CHECK(same_bits(back[0].success_rate, r.success_rate));
    CHECK(back[0].trials == 10000);
    CHECK(std::isnan(back[1].success_rate));
    CHECK(sweep_csv(back) == text);
    CHECK_THROWS(parse_csv("a,b\n"));
}

TEST_CASE("bounds and observation CSV layouts") {
    NetworkSpec s;
    s.N_c = 1;
    s.N_o = 1;
    s.K_c = 4;
    s.K_o = 2;
    const auto g = generate_constellation(6, 0.3, 2);
    const Scenario sc(s, g, Mode::crtk, IntegerMethod::ils, 1000);
    const auto text = bounds_csv(sc.bound_report(), 1);
    CHECK(text.rfind("kind,user,rmse_m,crb_ee_m2,crb_en_m2,crb_eu_m2,crb_nn_m2,crb_nu_m2,crb_uu_m2\n", 0) == 0);
    CHECK(text.find("constrained,1,") != std::string::npos);
    CHECK(text.find("aiding,2,") != std::string::npos);
    CHECK(text.find("\nasymptotic,,") != std::string::npos);

    ObservationDump dump;
    sc.run_trial(11, &dump);
    REQUIRE(dump.sets.size() == 3);
    const auto obs = observations_csv(dump.sets);
    CHECK(obs.rfind("level,receiver,satellite,code_m,phase_m\n", 0) == 0);
    int raw = 0, sd = 0, dd = 0;
    std::size_t pos = 0;
    while ((pos = obs.find('\n', pos)) != std::string::npos) {
        ++pos;
        if (obs.compare(pos, 4, "raw,") == 0) ++raw;
        if (obs.compare(pos, 3, "sd,") == 0) ++sd;
        if (obs.compare(pos, 3, "dd,") == 0) ++dd;
    }
    CHECK(raw == 3 * 6);
    CHECK(sd == 4 + 6);
    CHECK(dd == 3 + 5);
}

TEST_CASE("simulation runs report every user") {
    auto cfg = parse_config(small_config(), ".");
    cfg.vary.reset();
    cfg.trials = 5;
    const auto run = run_simulation(cfg);
    CHECK(run.trials.size() == 5);
    const auto text = runs_csv(run);
    CHECK(text.rfind("trial,user,err_e_m,err_n_m,err_u_m,err_3d_m,success,truncated,iterations,residual_norm_m\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 5 * 4);
}

TEST_CASE("parallel_for covers every index and propagates failures") {
    std::vector<int> hits(100, 0);
    parallel_for(100, 3, [&](int i) { hits[i] += 1; });
    CHECK(std::count(hits.begin(), hits.end(), 1) == 100);
    CHECK_THROWS_AS(parallel_for(10, 2, [](int i) {
                        if (i == 7) throw NumericalError("boom");
                    }),
                    NumericalError);
}
