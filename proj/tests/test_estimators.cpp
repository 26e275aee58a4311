#include "coopdgnss/bounds.hpp"
#include "coopdgnss/errors.hpp"
#include "coopdgnss/estimators.hpp"
#include "coopdgnss/rng.hpp"

#include "doctest.h"
#include "helpers.hpp"

using namespace coopdgnss;

namespace {

struct Net {
    NetworkSpec spec;
    SatelliteGeometry g;
    NetworkLayout layout;
    Eigen::MatrixXd h_sd, b_dd;
    StructuredCovariance sd_code, sd_phase, dd_code, dd_phase;
};

Net make_net(double alpha = 0.5, double sigma_rho = 1.0, double sigma_phi = 0.01) {
    Net n;
    n.spec.N_c = 1;
    n.spec.N_o = 2;
    n.spec.K_c = 5;
    n.spec.K_o = 2;
    n.spec.alpha = alpha;
    n.spec.sigma_rho = sigma_rho;
    n.spec.sigma_phi = sigma_phi;
    n.g = testing::sky(7, 31);
    const auto split = make_split(5, 2);
    n.layout = cluster_layout(split, 1, 2, common_pivot(n.g, split));
    n.h_sd = network_sd_geometry(n.layout, observation_matrix(n.g));
    n.b_dd = network_dd_geometry(n.layout, geometry_matrix(n.g));
    const Eigen::MatrixXd u_rho = per_receiver_cov(sigma_rho * sigma_rho, Eigen::VectorXd::Ones(7));
    const Eigen::MatrixXd u_phi = per_receiver_cov(sigma_phi * sigma_phi, Eigen::VectorXd::Ones(7));
    n.sd_code = network_sd_covariance(n.layout, std::vector<Eigen::MatrixXd>(3, u_rho), alpha * u_rho);
    n.sd_phase = network_sd_covariance(n.layout, std::vector<Eigen::MatrixXd>(3, u_phi), alpha * u_phi, CovTag::sd_phase);
    n.dd_code = network_dd_covariance(n.layout, n.sd_code);
    n.dd_phase = network_dd_covariance(n.layout, n.sd_phase, CovTag::dd_phase);
    return n;
}

StructuredCovariance joint(const Net& n) {
    StructuredCovariance r;
    r.dense = blkdiag({n.dd_code.dense, n.dd_phase.dense});
    return r;
}

ObservationSet sd_obs(const Net& n, const TruthState& truth, std::uint64_t seed) {
    return to_sd(synthesize_raw(n.g, n.spec, truth, seed), n.layout);
}

}  // namespace

TEST_CASE("solvability needs four satellites per user") {
    CHECK(solvability_check({4, 4, 7}));
    CHECK_FALSE(solvability_check({3, 9}));
}

TEST_CASE("Gauss-Newton converges in one step on the linear model") {
    const auto n = make_net();
    const WlsSolver solver(n.h_sd, n.sd_code.dense);
    std::mt19937_64 eng(1);
    const Eigen::VectorXd y = testing::random_matrix(eng, n.h_sd.rows(), 1);
    for (double scale : {0.0, 1.0, 1e4}) {
        const Eigen::VectorXd init = scale * testing::random_matrix(eng, n.h_sd.cols(), 1);
        const auto one = solver.solve(y, init, {1, 0.0});
        const auto two = solver.solve(y, init, {2, 0.0});
        CHECK((two.w - one.w).norm() <= 1e-10 * std::max(1.0, scale));
        const auto full = solver.solve(y, init);
        CHECK(full.converged);
        CHECK(full.iterations <= 3);
    }
}

TEST_CASE("noise-free observations return the truth") {
    auto n = make_net();
    n.spec.sigma_rho = 1e-12;
    n.spec.sigma_phi = 1e-14;
    const auto truth = sample_truth(n.spec, n.g, 3);
    const auto sd = sd_obs(n, truth, 4);
    const auto rep = cdgnss_wls(sd, n.h_sd, n.sd_code, Eigen::VectorXd::Zero(n.h_sd.cols()));
    CHECK((rep.stacked_states() - truth.sd_states()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(rep.converged);

    const auto dd = to_dd(sd, n.layout.pivot);
    const IntVector a = dd_ambiguities(truth, n.layout);
    const auto fixed = crtk_fix(dd, n.b_dd, joint(n), a, n.spec.lambda);
    CHECK((fixed.stacked_states() - truth.baselines()).cwiseAbs().maxCoeff() < 1e-8);

    const Eigen::MatrixXd amb = n.spec.lambda * Eigen::MatrixXd::Identity(n.b_dd.rows(), n.b_dd.rows());
    const auto flt = crtk_float(dd, n.b_dd, amb, joint(n));
    CHECK((flt.float_ambiguities - a.cast<double>()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("WLS is unbiased and attains the bound") {
    const auto n = make_net();
    const WlsSolver solver(n.h_sd, n.sd_code.dense);
    const Eigen::MatrixXd crb = spd_inverse(fim(n.h_sd, n.sd_code), "test");
    const auto truth = sample_truth(n.spec, n.g, 8);
    const Eigen::VectorXd x = truth.sd_states();
    const int trials = 10000;
    const auto p = x.size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
    for (int t = 0; t < trials; ++t) {
        const auto sd = sd_obs(n, truth, substream_seed({77, static_cast<std::uint64_t>(t)}));
        const Eigen::VectorXd err = solver.solve(sd.total_code(), Eigen::VectorXd::Zero(p)).w - x;
        mean += err;
        cov += err * err.transpose();
    }
    mean /= trials;
    cov /= trials;
    for (Eigen::Index i = 0; i < p; ++i) CHECK(std::abs(mean(i)) <= 4.0 * std::sqrt(crb(i, i) / trials));
    CHECK(testing::rel_diff(cov, crb) <= 0.05);
    CHECK(testing::rel_diff(solver.covariance(), crb) <= 1e-10);
}

TEST_CASE("C-RTK float solution attains the code-only bound") {
    const auto n = make_net(1.0, 0.3, 0.003);
    const Eigen::Index m = n.b_dd.rows();
    const Eigen::MatrixXd amb = n.spec.lambda * Eigen::MatrixXd::Identity(m, m);
    const WlsSolver solver(crtk_design(n.b_dd, amb), joint(n).dense);
    const Eigen::MatrixXd crb = crtk_float_crb(n.b_dd, n.dd_code.dense);
    const auto truth = sample_truth(n.spec, n.g, 2);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n.b_dd.cols(), n.b_dd.cols());
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        const auto dd = to_dd(sd_obs(n, truth, substream_seed({5, static_cast<std::uint64_t>(t)})), n.layout.pivot);
        Eigen::VectorXd y(2 * m);
        y << dd.total_code(), dd.total_phase();
        const Eigen::VectorXd err = solver.solve(y, Eigen::VectorXd::Zero(n.b_dd.cols() + m)).w.head(n.b_dd.cols()) -
                                    truth.baselines();
        cov += err * err.transpose();
    }
    cov /= trials;
    CHECK(testing::rel_diff(cov, crb) <= 0.05);
    CHECK(testing::rel_diff(solver.covariance().topLeftCorner(crb.rows(), crb.cols()), crb) <= 1e-8);
}

TEST_CASE("correct fixing scales the error by the phase/code ratio") {
    const auto n = make_net(1.0, 1.0, 0.01);
    const auto truth = sample_truth(n.spec, n.g, 12);
    const IntVector a = dd_ambiguities(truth, n.layout);
    const Eigen::Index m = n.b_dd.rows();
    const Eigen::MatrixXd amb = n.spec.lambda * Eigen::MatrixXd::Identity(m, m);
    const auto r = joint(n);
    double sq_float = 0.0, sq_fix = 0.0;
    const int trials = 10000;
    const WlsSolver flt(crtk_design(n.b_dd, amb), r.dense);
    Eigen::MatrixXd g2(2 * m, n.b_dd.cols());
    g2 << n.b_dd, n.b_dd;
    const WlsSolver fix(g2, r.dense);
    for (int t = 0; t < trials; ++t) {
        const auto dd = to_dd(sd_obs(n, truth, substream_seed({6, static_cast<std::uint64_t>(t)})), n.layout.pivot);
        Eigen::VectorXd y(2 * m);
        y << dd.total_code(), dd.total_phase();
        sq_float += (flt.solve(y, Eigen::VectorXd::Zero(n.b_dd.cols() + m)).w.head<3>() - truth.baselines().head<3>())
                        .squaredNorm();
        y.tail(m) -= n.spec.lambda * a.cast<double>();
        sq_fix += (fix.solve(y, Eigen::VectorXd::Zero(n.b_dd.cols())).w.head<3>() - truth.baselines().head<3>())
                      .squaredNorm();
    }
    CHECK(std::sqrt(sq_fix / sq_float) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("a wrong integer biases the fixed solution by lambda times a gain column") {
    auto n = make_net(1.0, 1e-9, 1e-11);
    const auto truth = sample_truth(n.spec, n.g, 13);
    const auto dd = to_dd(sd_obs(n, truth, 1), n.layout.pivot);
    IntVector a = dd_ambiguities(truth, n.layout);
    const auto good = crtk_fix(dd, n.b_dd, joint(n), a, n.spec.lambda);
    a(2) += 1;
    const auto bad = crtk_fix(dd, n.b_dd, joint(n), a, n.spec.lambda);

    // Oracle: the fixed estimate is K [code; phase - lambda a]; a +1 on row 2 shifts it by -lambda K e_{m+2}.
    const Eigen::Index m = n.b_dd.rows();
    Eigen::MatrixXd g2(2 * m, n.b_dd.cols());
    g2 << n.b_dd, n.b_dd;
    const Eigen::MatrixXd rinv = testing::gauss_jordan_inverse(joint(n).dense);
    const Eigen::MatrixXd gain = testing::gauss_jordan_inverse(g2.transpose() * rinv * g2) * g2.transpose() * rinv;
    const Eigen::VectorXd expected = -n.spec.lambda * gain.col(m + 2);
    const Eigen::VectorXd bias = bad.stacked_states() - good.stacked_states();
    CHECK((bias - expected).norm() <= 1e-6 * expected.norm());
    CHECK(bias.norm() > 0.01);
    CHECK(bad.residual_norm > 100.0 * good.residual_norm);
}

TEST_CASE("estimators reject wrong inputs") {
    const auto n = make_net();
    const auto truth = sample_truth(n.spec, n.g, 1);
    const auto sd = sd_obs(n, truth, 1);
    CHECK_THROWS_AS(crtk_float(sd, n.b_dd, n.b_dd, joint(n)), DimensionError);
    const auto dd = to_dd(sd, n.layout.pivot);
    CHECK_THROWS_AS(cdgnss_wls(dd, n.h_sd, n.sd_code, Eigen::VectorXd::Zero(n.h_sd.cols())), DimensionError);
    CHECK_THROWS_AS(crtk_fix(dd, n.b_dd, joint(n), IntVector::Zero(2), n.spec.lambda), DimensionError);
    Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(4, 2);
    singular.col(0).setOnes();
    CHECK_THROWS_AS(WlsSolver(singular, Eigen::MatrixXd::Identity(4, 4)), NumericalError);
}
