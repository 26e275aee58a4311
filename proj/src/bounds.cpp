#include "coopdgnss/bounds.hpp"

#include "coopdgnss/errors.hpp"
#include "coopdgnss/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace coopdgnss {

Eigen::MatrixXd fim(const Eigen::MatrixXd& g, const Eigen::MatrixXd& r) {
    if (r.rows() != g.rows() || r.cols() != g.rows()) throw DimensionError("fim: covariance does not match design");
    Eigen::MatrixXd j = g.transpose() * SpdSolver(r, "fim: observation covariance").solve(g);
    return 0.5 * (j + j.transpose());
}

Eigen::MatrixXd fim(const Eigen::MatrixXd& g, const StructuredCovariance& r) { return fim(g, r.dense); }

Eigen::Matrix3d crb_block(const Eigen::MatrixXd& j, int user, int stride) {
    if (stride < 3 || user < 0 || (user + 1) * stride > j.rows()) throw DimensionError("crb_block: user out of range");
    const Eigen::MatrixXd inv = spd_inverse(j, "crb_block: Fisher information");
    return inv.block<3, 3>(static_cast<Eigen::Index>(user) * stride, static_cast<Eigen::Index>(user) * stride);
}

double rmse_bound(const Eigen::MatrixXd& j, int user, int stride) { return std::sqrt(crb_block(j, user, stride).trace()); }

double position_rmse(const Eigen::MatrixXd& crb) { return std::sqrt(crb.topLeftCorner(3, 3).trace()); }

Eigen::MatrixXd crtk_float_fim(const Eigen::MatrixXd& b_rho, const Eigen::MatrixXd& a_phi,
                               const Eigen::MatrixXd& sigma_rho_dd, const Eigen::MatrixXd& sigma_phi_dd) {
    if (a_phi.rows() != b_rho.rows()) throw DimensionError("crtk_float_fim: A and B row counts differ");
    const Eigen::MatrixXd rho_inv = spd_inverse(sigma_rho_dd, "crtk_float_fim: code covariance");
    const Eigen::MatrixXd phi_inv = spd_inverse(sigma_phi_dd, "crtk_float_fim: phase covariance");
    const auto nb = b_rho.cols();
    const auto na = a_phi.cols();
    Eigen::MatrixXd j(nb + na, nb + na);
    j.topLeftCorner(nb, nb) = b_rho.transpose() * (rho_inv + phi_inv) * b_rho;
    j.topRightCorner(nb, na) = b_rho.transpose() * phi_inv * a_phi;
    j.bottomLeftCorner(na, nb) = j.topRightCorner(nb, na).transpose();
    j.bottomRightCorner(na, na) = a_phi.transpose() * phi_inv * a_phi;
    return j;
}

Eigen::MatrixXd crtk_float_crb(const Eigen::MatrixXd& b_rho, const Eigen::MatrixXd& sigma_rho_dd) {
    return spd_inverse(fim(b_rho, sigma_rho_dd), "crtk_float_crb: code information");
}

FixBounds crtk_fix_crb(const Eigen::MatrixXd& b_rho, const Eigen::MatrixXd& sigma_phi_dd,
                       const Eigen::MatrixXd& sigma_rho_dd) {
    const Eigen::MatrixXd j_rho = fim(b_rho, sigma_rho_dd);
    const Eigen::MatrixXd j_phi = fim(b_rho, sigma_phi_dd);
    return {spd_inverse(j_rho + j_phi, "crtk_fix_crb: joint information"),
            spd_inverse(j_phi, "crtk_fix_crb: phase information")};
}

ClusterFims cluster_fims(const Eigen::MatrixXd& g_c, const Eigen::MatrixXd& g_o, const Eigen::MatrixXd& r_c,
                         const Eigen::MatrixXd& r_o) {
    ClusterFims out;
    out.common = fim(g_c, r_c);
    out.exclusive = g_o.rows() == 0 ? Eigen::MatrixXd::Zero(g_c.cols(), g_c.cols()) : fim(g_o, r_o);
    return out;
}

Eigen::MatrixXd parameterized_fim(const Eigen::MatrixXd& j_c, const Eigen::MatrixXd& j_o, int n_aiding, double alpha) {
    if (j_c.rows() != j_o.rows() || j_c.cols() != j_o.cols()) throw DimensionError("parameterized_fim: J_c and J_o differ in size");
    const BetaSet b = beta(alpha, n_aiding);
    const auto m = j_c.rows();
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(m * (n_aiding + 1), m * (n_aiding + 1));
    j.topLeftCorner(m, m) = b.beta1 * j_c;
    const Eigen::MatrixXd diag_block = (1.0 + b.beta2) * j_c + (1.0 + b.beta5) * j_o;
    const Eigen::MatrixXd off_block = b.beta2 * j_c + b.beta5 * j_o;
    for (int a = 0; a < n_aiding; ++a) {
        const auto off = m * (a + 1);
        j.block(0, off, m, m) = b.beta2 * j_c;
        j.block(off, 0, m, m) = b.beta2 * j_c;
        for (int c = 0; c < n_aiding; ++c) j.block(m * (c + 1), off, m, m) = (a == c) ? diag_block : off_block;
    }
    return j;
}

Eigen::MatrixXd constrained_user_crb(const Eigen::MatrixXd& j_c, const Eigen::MatrixXd& j_o, int n_aiding,
                                     double alpha) {
    if (j_c.rows() != j_o.rows() || j_c.cols() != j_o.cols()) throw DimensionError("constrained_user_crb: size mismatch");
    const BetaSet b = beta(alpha, n_aiding);
    Eigen::MatrixXd schur = b.beta1 * j_c;
    if (n_aiding > 0) {
        const Eigen::MatrixXd a = j_c + j_o;
        // Eigenvalues of the aiding block are those of A (multiplicity N_o - 1) and A + N_o B.
        if (n_aiding > 1) SpdSolver(a, "constrained_user_crb: aiding block");
        const Eigen::MatrixXd collective = a + n_aiding * (b.beta2 * j_c + b.beta5 * j_o);
        const SpdSolver solver(0.5 * (collective + collective.transpose()), "constrained_user_crb: aiding block");
        schur -= (b.beta2 * b.beta2 * n_aiding) * (j_c * solver.solve(j_c));
    }
    return spd_inverse(0.5 * (schur + schur.transpose()), "constrained_user_crb: Schur complement");
}

Benchmarks benchmarks(const Eigen::MatrixXd& j_c, double alpha) {
    const Eigen::MatrixXd inv = spd_inverse(j_c, "benchmarks: J_c");
    return {(1.0 + alpha) * inv, inv};
}

Eigen::MatrixXd asymptotic_bound(const Eigen::MatrixXd& j_c, double alpha, int n_aiding) {
    return spd_inverse(j_c, "asymptotic_bound: J_c") / beta(alpha, n_aiding).beta1;
}

Eigen::MatrixXd disjoint_fim(const Eigen::MatrixXd& j_c, const Eigen::MatrixXd& j_o, int n_aiding, double alpha) {
    const BetaSet b = beta(alpha, n_aiding);
    Eigen::MatrixXd omega = Eigen::MatrixXd::Identity(n_aiding, n_aiding);
    omega.array() += b.beta5;
    return blkdiag({j_c / (1.0 + alpha), kron(omega, j_o)});
}

AsymptoticReport asymptotic_suite(const Eigen::MatrixXd& j_c, const Eigen::MatrixXd& j_o, double alpha, int n_max) {
    AsymptoticReport rep;
    for (int n : {0, 1, 2, 3, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000, 20000, 50000, 100000})
        if (n <= n_max) rep.n_grid.push_back(n);
    if (rep.n_grid.empty() || rep.n_grid.back() != n_max) rep.n_grid.push_back(n_max);

    const Benchmarks bm = benchmarks(j_c, alpha);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(j_c.rows(), j_c.cols());

    rep.scale_factors = {1e4, 1e6, 1e8};
    rep.informative_dev.assign(rep.scale_factors.size(), 0.0);
    for (int n : rep.n_grid) {
        const Eigen::MatrixXd target = asymptotic_bound(j_c, alpha, n);
        std::vector<Eigen::MatrixXd> at_scale;
        for (std::size_t i = 0; i < rep.scale_factors.size(); ++i) {
            at_scale.push_back(constrained_user_crb(j_c, rep.scale_factors[i] * j_o, n, alpha));
            rep.informative_dev[i] = std::max(rep.informative_dev[i], rel_frobenius(at_scale.back(), target));
        }
        // First-order Richardson step on the two largest scales (deviation ~ 1/t).
        const double t1 = rep.scale_factors[1], t2 = rep.scale_factors[2];
        const Eigen::MatrixXd extrapolated = (t2 * at_scale[2] - t1 * at_scale[1]) / (t2 - t1);
        rep.informative_extrapolated_dev = std::max(rep.informative_extrapolated_dev, rel_frobenius(extrapolated, target));
        rep.informative_rmse.push_back(position_rmse(at_scale.back()));

        rep.no_exclusive_dev =
            std::max(rep.no_exclusive_dev, rel_frobenius(constrained_user_crb(j_c, zero, n, alpha), bm.noncoop));

        if (n <= 50) {
            const Eigen::MatrixXd inv = spd_inverse(disjoint_fim(j_c, j_o, n, alpha), "asymptotic_suite: disjoint FIM");
            rep.disjoint_dev =
                std::max(rep.disjoint_dev, rel_frobenius(inv.topLeftCorner(j_c.rows(), j_c.cols()), bm.noncoop));
        }
        rep.many_users_rmse.push_back(position_rmse(constrained_user_crb(j_c, j_o, n, alpha)));
    }
    const double ideal = position_rmse(bm.ideal);
    rep.many_users_dev = std::abs(rep.many_users_rmse.back() - ideal) / ideal;
    return rep;
}

}  // namespace coopdgnss
