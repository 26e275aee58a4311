#pragma once

#include "coopdgnss/netmodel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace coopdgnss {

struct BoundReport {
    Eigen::MatrixXd fim;
    std::vector<Eigen::Matrix3d> crb_user_blocks;  ///< m^2
    std::vector<double> rmse_per_user;             ///< m
    double benchmark_noncoop = 0.0;                ///< m
    double benchmark_ideal = 0.0;                  ///< m
    double benchmark_asymptotic = 0.0;             ///< m
};

/// G^T R^-1 G.
Eigen::MatrixXd fim(const Eigen::MatrixXd& g, const Eigen::MatrixXd& r);
Eigen::MatrixXd fim(const Eigen::MatrixXd& g, const StructuredCovariance& r);

/**
 * @brief 3x3 position block of J^-1 for one user.
 *
 * `stride` is the number of states per user (3 for baselines, 4 when a
 * clock is estimated); the position sits at the start of each user's slot.
 */
Eigen::Matrix3d crb_block(const Eigen::MatrixXd& j, int user, int stride = 3);

double rmse_bound(const Eigen::MatrixXd& j, int user, int stride = 3);

/// sqrt(trace) of the top-left 3x3 block.
double position_rmse(const Eigen::MatrixXd& crb);

/// Float FIM over [baselines; ambiguities] for code-only B and phase [B, A].
Eigen::MatrixXd crtk_float_fim(const Eigen::MatrixXd& b_rho, const Eigen::MatrixXd& a_phi,
                               const Eigen::MatrixXd& sigma_rho_dd, const Eigen::MatrixXd& sigma_phi_dd);

/// (B^T Sigma_rho^-1 B)^-1.
Eigen::MatrixXd crtk_float_crb(const Eigen::MatrixXd& b_rho, const Eigen::MatrixXd& sigma_rho_dd);

struct FixBounds {
    Eigen::MatrixXd exact;        ///< (B^T (Sigma_rho^-1 + Sigma_phi^-1) B)^-1
    Eigen::MatrixXd phase_only;   ///< (B^T Sigma_phi^-1 B)^-1
};

FixBounds crtk_fix_crb(const Eigen::MatrixXd& b_rho, const Eigen::MatrixXd& sigma_phi_dd,
                       const Eigen::MatrixXd& sigma_rho_dd);

struct ClusterFims {
    Eigen::MatrixXd common;     ///< J_c
    Eigen::MatrixXd exclusive;  ///< J_o (zero when no exclusive satellites)
};

ClusterFims cluster_fims(const Eigen::MatrixXd& g_c, const Eigen::MatrixXd& g_o, const Eigen::MatrixXd& r_c,
                         const Eigen::MatrixXd& r_o);

/// Dense FIM of the one-constrained-user cluster model assembled from beta coefficients.
Eigen::MatrixXd parameterized_fim(const Eigen::MatrixXd& j_c, const Eigen::MatrixXd& j_o, int n_aiding, double alpha);

/**
 * @brief Constrained user's CRB (full state block) by the Schur complement.
 *
 * The aiding block is a Kronecker sum I (x) A + ones (x) B, so its action on
 * the constant coupling columns reduces to one solve with A + N_o B.
 */
Eigen::MatrixXd constrained_user_crb(const Eigen::MatrixXd& j_c, const Eigen::MatrixXd& j_o, int n_aiding,
                                     double alpha);

struct Benchmarks {
    Eigen::MatrixXd noncoop;  ///< (1 + alpha) J_c^-1
    Eigen::MatrixXd ideal;    ///< J_c^-1
};

Benchmarks benchmarks(const Eigen::MatrixXd& j_c, double alpha);

/// beta1^-1 J_c^-1: the limit for unboundedly informative aiding users.
Eigen::MatrixXd asymptotic_bound(const Eigen::MatrixXd& j_c, double alpha, int n_aiding);

/// FIM when the aiding users see none of the constrained user's satellites.
Eigen::MatrixXd disjoint_fim(const Eigen::MatrixXd& j_c, const Eigen::MatrixXd& j_o, int n_aiding, double alpha);

struct AsymptoticReport {
    std::vector<int> n_grid;
    /// Regime (i): relative deviation from beta1^-1 J_c^-1 with J_o scaled by 1e4, 1e6, 1e8
    /// (max over n_grid), and for the Richardson extrapolation of the last two scales.
    std::vector<double> scale_factors;
    std::vector<double> informative_dev;
    double informative_extrapolated_dev = 0.0;
    double no_exclusive_dev = 0.0;  ///< regime (ii): vs (1 + alpha) J_c^-1
    double disjoint_dev = 0.0;      ///< regime (iii): vs (1 + alpha) J_c^-1
    double many_users_dev = 0.0;    ///< regime (iv): rmse at N_o_max vs ideal rmse
    std::vector<double> many_users_rmse;  ///< regime (iv) curve over n_grid
    std::vector<double> informative_rmse; ///< regime (i) curve (largest scale) over n_grid
};

AsymptoticReport asymptotic_suite(const Eigen::MatrixXd& j_c, const Eigen::MatrixXd& j_o, double alpha, int n_max);

}  // namespace coopdgnss
