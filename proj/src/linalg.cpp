#include "coopdgnss/linalg.hpp"

#include "coopdgnss/errors.hpp"

#include <cmath>
#include <limits>

namespace coopdgnss {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::MatrixXd blkdiag(const std::vector<Eigen::MatrixXd>& blocks) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

double condition_number(const Eigen::MatrixXd& sym) {
    if (sym.size() == 0) return 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double lo = ev.cwiseAbs().minCoeff();
    const double hi = ev.cwiseAbs().maxCoeff();
    if (lo == 0.0 || ev.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

bool is_symmetric(const Eigen::MatrixXd& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_psd(const Eigen::MatrixXd& sym) {
    if (sym.size() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    return es.eigenvalues().minCoeff() >= -kPsdTolerance * hi;
}

double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double denom = std::max(b.norm(), std::numeric_limits<double>::min());
    return (a - b).norm() / denom;
}

SpdSolver::SpdSolver(const Eigen::MatrixXd& a, const std::string& what) {
    if (a.rows() != a.cols()) throw DimensionError(what + ": matrix is not square");
    ldlt_.compute(a);
    if (ldlt_.info() != Eigen::Success || !ldlt_.isPositive())
        throw NumericalError(what + ": matrix is not positive definite");
    const auto d = ldlt_.vectorD();
    if (d.size() > 0 && (d.minCoeff() <= 0.0 || d.maxCoeff() / d.minCoeff() > kConditionLimit))
        throw NumericalError(what + ": condition number exceeds limit");
    const double rc = ldlt_.rcond();
    if (!(rc * kConditionLimit >= 1.0))
        throw NumericalError(what + ": condition number exceeds limit");
}

Eigen::MatrixXd SpdSolver::inverse() const {
    Eigen::MatrixXd inv = ldlt_.solve(Eigen::MatrixXd::Identity(size(), size()));
    return 0.5 * (inv + inv.transpose());
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const std::string& what) {
    return SpdSolver(a, what).inverse();
}

}  // namespace coopdgnss
