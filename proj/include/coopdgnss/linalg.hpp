#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace coopdgnss {

/// Matrices whose estimated condition number exceeds this are rejected.
inline constexpr double kConditionLimit = 1e12;

/// Relative floor on the smallest eigenvalue for a matrix to count as PSD.
inline constexpr double kPsdTolerance = 1e-10;

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
Eigen::MatrixXd blkdiag(const std::vector<Eigen::MatrixXd>& blocks);

/// 2-norm condition number of a symmetric matrix (eigenvalue based).
double condition_number(const Eigen::MatrixXd& sym);

bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-12);

/// True when the smallest eigenvalue is >= -kPsdTolerance * largest.
bool is_psd(const Eigen::MatrixXd& sym);

/// Relative Frobenius distance ||a - b|| / max(||b||, tiny).
double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/**
 * @brief Symmetric positive definite factorization with a conditioning guard.
 *
 * Throws NumericalError when the matrix is not positive definite or its
 * reciprocal condition estimate falls below 1/kConditionLimit.
 */
class SpdSolver {
public:
    SpdSolver() = default;
    SpdSolver(const Eigen::MatrixXd& a, const std::string& what);

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return ldlt_.solve(rhs); }
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return ldlt_.solve(rhs); }
    Eigen::MatrixXd inverse() const;
    Eigen::Index size() const { return ldlt_.rows(); }

private:
    Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

/// Inverse of an SPD matrix through SpdSolver, symmetrized.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const std::string& what);

}  // namespace coopdgnss
