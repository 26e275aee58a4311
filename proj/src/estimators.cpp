#include "coopdgnss/estimators.hpp"

#include "coopdgnss/errors.hpp"

#include <numeric>

namespace coopdgnss {

Eigen::VectorXd EstimateReport::stacked_states() const {
    Eigen::Index n = 0;
    for (const auto& s : states) n += s.size();
    Eigen::VectorXd out(n);
    Eigen::Index off = 0;
    for (const auto& s : states) {
        out.segment(off, s.size()) = s;
        off += s.size();
    }
    return out;
}

bool solvability_check(const std::vector<int>& per_user_sat_counts) {
    const long total = std::accumulate(per_user_sat_counts.begin(), per_user_sat_counts.end(), 0L);
    for (int c : per_user_sat_counts)
        if (c < 4) return false;
    return total >= 4L * static_cast<long>(per_user_sat_counts.size());
}

WlsSolver::WlsSolver(const Eigen::MatrixXd& g, const Eigen::MatrixXd& r) : g_(g) {
    if (r.rows() != g.rows() || r.cols() != g.rows()) throw DimensionError("WLS: covariance does not match design rows");
    const SpdSolver r_solver(r, "WLS observation covariance");
    const Eigen::MatrixXd rinv_g = r_solver.solve(g);
    Eigen::MatrixXd normal = g.transpose() * rinv_g;
    normal = 0.5 * (normal + normal.transpose());
    normal_ = SpdSolver(normal, "WLS normal matrix");
    gain_ = normal_.solve(Eigen::MatrixXd(rinv_g.transpose()));
}

WlsSolver::Result WlsSolver::solve(const Eigen::VectorXd& y, const Eigen::VectorXd& init,
                                   const GaussNewtonOptions& opt) const {
    if (y.size() != g_.rows() || init.size() != g_.cols()) throw DimensionError("WLS: vector sizes do not match design");
    Result res;
    res.w = init;
    for (int k = 1; k <= opt.max_iters; ++k) {
        const Eigen::VectorXd delta = gain_ * (y - g_ * res.w);
        res.w += delta;
        res.iterations = k;
        if (delta.norm() < opt.tol) {
            res.converged = true;
            break;
        }
    }
    res.residual_norm = (y - g_ * res.w).norm();
    return res;
}

namespace {

std::vector<Eigen::VectorXd> split_states(const Eigen::VectorXd& w, int users, int per_user) {
    std::vector<Eigen::VectorXd> out;
    for (int r = 0; r < users; ++r) out.emplace_back(w.segment(r * per_user, per_user));
    return out;
}

}  // namespace

EstimateReport cdgnss_wls(const ObservationSet& sd_obs, const Eigen::MatrixXd& g, const StructuredCovariance& r,
                          const Eigen::VectorXd& init, int max_iters, double tol) {
    if (sd_obs.level != Level::sd) throw DimensionError("cdgnss_wls: observations must be single-differenced");
    const int users = sd_obs.layout.users();
    if (users < 1 || g.cols() % users != 0) throw DimensionError("cdgnss_wls: design columns not divisible by users");
    if (!solvability_check(sd_obs.layout.counts())) throw NumericalError("cdgnss_wls: network is not solvable");
    const WlsSolver solver(g, r.dense);
    const auto res = solver.solve(sd_obs.total_code(), init, {max_iters, tol});
    EstimateReport rep;
    rep.states = split_states(res.w, users, static_cast<int>(g.cols() / users));
    rep.iterations = res.iterations;
    rep.converged = res.converged;
    rep.residual_norm = res.residual_norm;
    rep.covariance = solver.covariance();
    return rep;
}

Eigen::MatrixXd crtk_design(const Eigen::MatrixXd& b, const Eigen::MatrixXd& a) {
    if (a.rows() != b.rows()) throw DimensionError("crtk_design: B and A row counts differ");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * b.rows(), b.cols() + a.cols());
    g.topLeftCorner(b.rows(), b.cols()) = b;
    g.bottomLeftCorner(b.rows(), b.cols()) = b;
    g.bottomRightCorner(a.rows(), a.cols()) = a;
    return g;
}

EstimateReport crtk_float(const ObservationSet& dd_obs, const Eigen::MatrixXd& b, const Eigen::MatrixXd& a,
                          const StructuredCovariance& r) {
    if (dd_obs.level != Level::dd) throw DimensionError("crtk_float: observations must be double-differenced");
    const int users = dd_obs.layout.users();
    if (b.rows() != dd_obs.code.size() || b.cols() % users != 0) throw DimensionError("crtk_float: B shape mismatch");
    Eigen::VectorXd y(2 * b.rows());
    y << dd_obs.total_code(), dd_obs.total_phase();
    const WlsSolver solver(crtk_design(b, a), r.dense);
    const auto res = solver.solve(y, Eigen::VectorXd::Zero(b.cols() + a.cols()));
    EstimateReport rep;
    rep.states = split_states(res.w.head(b.cols()), users, static_cast<int>(b.cols() / users));
    rep.float_ambiguities = res.w.tail(a.cols());
    rep.iterations = res.iterations;
    rep.converged = res.converged;
    rep.residual_norm = res.residual_norm;
    rep.covariance = solver.covariance();
    return rep;
}

EstimateReport crtk_fix(const ObservationSet& dd_obs, const Eigen::MatrixXd& b, const StructuredCovariance& r,
                        const IntVector& fixed_a, double lambda) {
    if (dd_obs.level != Level::dd) throw DimensionError("crtk_fix: observations must be double-differenced");
    const int users = dd_obs.layout.users();
    if (fixed_a.size() != b.rows()) throw DimensionError("crtk_fix: one ambiguity per double difference required");
    Eigen::MatrixXd g(2 * b.rows(), b.cols());
    g << b, b;
    Eigen::VectorXd y(2 * b.rows());
    y << dd_obs.total_code(), dd_obs.total_phase() - lambda * fixed_a.cast<double>();
    const WlsSolver solver(g, r.dense);
    const auto res = solver.solve(y, Eigen::VectorXd::Zero(b.cols()));
    EstimateReport rep;
    rep.states = split_states(res.w, users, static_cast<int>(b.cols() / users));
    rep.fixed_ambiguities = fixed_a;
    rep.fixed = true;
    rep.iterations = res.iterations;
    rep.converged = res.converged;
    rep.residual_norm = res.residual_norm;
    rep.covariance = solver.covariance();
    return rep;
}

}  // namespace coopdgnss
