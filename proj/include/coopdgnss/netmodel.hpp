#pragma once

#include "coopdgnss/geometry.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace coopdgnss {

enum class Weighting { identity, elevation };

/// Cluster sizes, visibility split, noise levels and carrier wavelength.
struct NetworkSpec {
    int N_c = 1;               ///< constrained (aided) users
    int N_o = 0;               ///< aiding users
    int K_c = 4;               ///< satellites seen by everyone
    int K_o = 0;               ///< satellites seen only by aiding users and the base
    double alpha = 1.0;        ///< base noise variance / user noise variance
    double sigma_rho = 1.0;    ///< code std-dev (m)
    double sigma_phi = 0.01;   ///< phase std-dev (m)
    double lambda = 0.19029367279836487;  ///< GPS L1 wavelength (m)
    Weighting weighting = Weighting::identity;

    int users() const { return N_c + N_o; }
    int satellites() const { return K_c + K_o; }

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

enum class CovTag { raw, sd_code, sd_phase, dd_code, dd_phase, clustered };

struct BlockLayout {
    std::vector<int> sizes;  ///< rows (= cols) of each diagonal block, in order
    int count() const { return static_cast<int>(sizes.size()); }
};

/// Dense symmetric covariance with its block partition.
struct StructuredCovariance {
    Eigen::MatrixXd dense;
    BlockLayout layout;
    CovTag tag = CovTag::raw;

    /// Symmetry to 1e-12 and the PSD eigenvalue floor.
    bool well_formed() const;
};

// ==== Operators ====

/// [-1_N (x) I_m, I_N (x) I_m]: maps [base; users] to user minus base.
Eigen::MatrixXd sd_operator(int receivers, int m);

/// I_N (x) D_p where D_p has -1 in the pivot column and identity elsewhere.
Eigen::MatrixXd dd_operator(int receivers, int m, int pivot = 0);

// ==== Covariances ====

Eigen::MatrixXd per_receiver_cov(double sigma2, const Eigen::VectorXd& weights);

/// sin^2(elevation) per satellite.
Eigen::VectorXd elevation_weights(const SatelliteGeometry& g);

/// Weight vector for the chosen model (ones for identity weighting).
Eigen::VectorXd weights_for(const SatelliteGeometry& g, Weighting w);

StructuredCovariance sd_covariance(const std::vector<Eigen::MatrixXd>& user_covs, const Eigen::MatrixXd& base_cov);

/// (I_N + alpha * ones) (x) block.
StructuredCovariance alpha_cov(int receivers, double alpha, const Eigen::MatrixXd& block);

StructuredCovariance dd_covariance(const StructuredCovariance& sd_cov, int receivers, int sats, int pivot = 0);

// ==== Two-cluster model (one constrained user) ====

Eigen::MatrixXd clustered_obs(const Eigen::MatrixXd& g_c, const Eigen::MatrixXd& g_o, int n_aiding);

StructuredCovariance clustered_cov(int n_aiding, double alpha, const Eigen::MatrixXd& r_c, const Eigen::MatrixXd& r_o);

struct BetaSet {
    double beta0, beta1, beta2, beta3, beta4, beta5;
};

BetaSet beta(double alpha, int n_aiding);

StructuredCovariance closed_form_inverse(int n_aiding, double alpha, const Eigen::MatrixXd& r_c,
                                         const Eigen::MatrixXd& r_o);

// ==== Heterogeneous-visibility network ====

/**
 * @brief Which satellites each user tracks. The base tracks all K.
 *
 * Users are ordered constrained cluster first. Single differences of user r
 * follow visible[r]; double differences drop the pivot from that list.
 */
struct NetworkLayout {
    int K = 0;
    int pivot = 0;
    std::vector<std::vector<int>> visible;

    int users() const { return static_cast<int>(visible.size()); }
    std::vector<int> counts() const;
    int sd_rows() const;
    int dd_rows() const;
    std::vector<int> dd_satellites(int user) const;
};

NetworkLayout full_layout(int users, int sats, int pivot = 0);
NetworkLayout cluster_layout(const VisibilitySplit& split, int n_constrained, int n_aiding, int pivot);

/// Maps stacked raw [base; users] (K each) to per-user single differences.
Eigen::MatrixXd sd_selection_operator(const NetworkLayout& layout);

/// Maps layout single differences to double differences against the pivot.
Eigen::MatrixXd dd_selection_operator(const NetworkLayout& layout);

/// Single-difference covariance for per-receiver K x K covariances.
StructuredCovariance network_sd_covariance(const NetworkLayout& layout, const std::vector<Eigen::MatrixXd>& user_covs,
                                           const Eigen::MatrixXd& base_cov, CovTag tag = CovTag::sd_code);

StructuredCovariance network_dd_covariance(const NetworkLayout& layout, const StructuredCovariance& sd_cov,
                                           CovTag tag = CovTag::dd_code);

/// blkdiag over users of H restricted to the visible rows.
Eigen::MatrixXd network_sd_geometry(const NetworkLayout& layout, const Eigen::MatrixXd& h);

/// blkdiag over users of D_p E restricted to visible satellites.
Eigen::MatrixXd network_dd_geometry(const NetworkLayout& layout, const Eigen::MatrixXd& e);

}  // namespace coopdgnss
