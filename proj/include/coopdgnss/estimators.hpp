#pragma once

#include "coopdgnss/linalg.hpp"
#include "coopdgnss/netmodel.hpp"
#include "coopdgnss/simulator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace coopdgnss {

struct EstimateReport {
    std::vector<Eigen::VectorXd> states;  ///< per user: position (m) and clock (m) where estimated
    Eigen::VectorXd float_ambiguities;    ///< cycles
    IntVector fixed_ambiguities;          ///< cycles
    bool fixed = false;
    bool converged = false;
    int iterations = 0;
    double residual_norm = 0.0;  ///< Euclidean norm of y - G w at the solution (m)
    Eigen::MatrixXd covariance;  ///< inverse normal matrix of the solved model

    Eigen::VectorXd stacked_states() const;
};

/// Every user tracks >= 4 satellites and the total covers 4 unknowns per user.
bool solvability_check(const std::vector<int>& per_user_sat_counts);

struct GaussNewtonOptions {
    int max_iters = 10;
    double tol = 1e-8;  ///< on the update norm (m)
};

/**
 * @brief Weighted least squares on y = G w + e, e ~ N(0, R).
 *
 * The normal matrix is factorized once; each Gauss-Newton step is a gain
 * product on the current residual, so one solver serves many trials.
 */
class WlsSolver {
public:
    WlsSolver(const Eigen::MatrixXd& g, const Eigen::MatrixXd& r);

    struct Result {
        Eigen::VectorXd w;
        int iterations = 0;
        bool converged = false;
        double residual_norm = 0.0;
    };

    Result solve(const Eigen::VectorXd& y, const Eigen::VectorXd& init, const GaussNewtonOptions& opt = {}) const;

    /// (G^T R^-1 G)^-1.
    Eigen::MatrixXd covariance() const { return normal_.inverse(); }
    const Eigen::MatrixXd& design() const { return g_; }

private:
    Eigen::MatrixXd g_;
    Eigen::MatrixXd gain_;  ///< (G^T R^-1 G)^-1 G^T R^-1
    SpdSolver normal_;
};

EstimateReport cdgnss_wls(const ObservationSet& sd_obs, const Eigen::MatrixXd& g, const StructuredCovariance& r,
                          const Eigen::VectorXd& init, int max_iters = 10, double tol = 1e-8);

/// Design [[B, 0], [B, A]] for stacked [code; phase] double differences.
Eigen::MatrixXd crtk_design(const Eigen::MatrixXd& b, const Eigen::MatrixXd& a);

/// Joint float solution over baselines and real-valued ambiguities. R covers [code; phase].
EstimateReport crtk_float(const ObservationSet& dd_obs, const Eigen::MatrixXd& b, const Eigen::MatrixXd& a,
                          const StructuredCovariance& r);

/// Baselines re-solved with the phase ambiguities held at fixed_a.
EstimateReport crtk_fix(const ObservationSet& dd_obs, const Eigen::MatrixXd& b, const StructuredCovariance& r,
                        const IntVector& fixed_a, double lambda);

// ==== Integer ambiguity resolution ====

enum class IntegerMethod { round, bootstrap, ils };

/// ||a_float - a||^2 in the metric of q^-1.
double ambiguity_cost(const Eigen::VectorXd& a_float, const IntVector& a, const Eigen::MatrixXd& q);

/**
 * @brief Integer estimator with the covariance work done once.
 *
 * Bootstrapping rounds sequentially on the L^T D L factors of Q. The ILS
 * search runs on an integer-decorrelated problem and enumerates depth first
 * with a shrinking ellipsoid; it stops after max_nodes visits and then keeps
 * the best vector found so far (reported through `truncated`).
 */
class IntegerResolver {
public:
    static constexpr std::int64_t kDefaultMaxNodes = 2'000'000;

    IntegerResolver(const Eigen::MatrixXd& q, IntegerMethod method, std::int64_t max_nodes = kDefaultMaxNodes);

    IntVector resolve(const Eigen::VectorXd& a_float, bool* truncated = nullptr) const;
    IntegerMethod method() const { return method_; }

private:
    IntVector bootstrap(const Eigen::VectorXd& a_float) const;
    IntVector search(const Eigen::VectorXd& z_float, bool* truncated) const;
    double cost(const Eigen::VectorXd& a_float, const IntVector& a) const;

    IntegerMethod method_;
    std::int64_t max_nodes_;
    Eigen::MatrixXd l_, zl_;   ///< unit lower factors (original, decorrelated)
    Eigen::VectorXd d_, zd_;   ///< diagonal factors (original, decorrelated)
    Eigen::MatrixXd zt_, izt_; ///< z = Zt a,  a = iZt z  (integer entries)
    Eigen::LLT<Eigen::MatrixXd> q_llt_;
};

IntVector resolve_ambiguities(const Eigen::VectorXd& a_float, const Eigen::MatrixXd& q, IntegerMethod method);

/// Q = L^T diag(d) L with L unit lower triangular. Throws NumericalError when Q is not PD.
void ltdl(const Eigen::MatrixXd& q, Eigen::MatrixXd& l, Eigen::VectorXd& d);

}  // namespace coopdgnss
