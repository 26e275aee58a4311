#include "coopdgnss/errors.hpp"
#include "coopdgnss/estimators.hpp"

#include <cmath>
#include <limits>

namespace coopdgnss {

void ltdl(const Eigen::MatrixXd& q, Eigen::MatrixXd& l, Eigen::VectorXd& d) {
    const Eigen::Index n = q.rows();
    if (q.cols() != n) throw DimensionError("ltdl: matrix is not square");
    Eigen::MatrixXd a = q;
    l = Eigen::MatrixXd::Zero(n, n);
    d.resize(n);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        d(i) = a(i, i);
        if (!(d(i) > 0.0)) throw NumericalError("ambiguity covariance is not positive definite");
        const double root = std::sqrt(a(i, i));
        l.row(i).head(i + 1) = a.row(i).head(i + 1) / root;
        for (Eigen::Index j = 0; j < i; ++j) a.row(j).head(j + 1) -= l.row(i).head(j + 1) * l(i, j);
        l.row(i).head(i + 1) /= l(i, i);
    }
}

namespace {

// Integer Gauss transformations and adjacent swaps until the conditional
// variances are ordered; zt and izt track the unimodular transform.
void decorrelate(Eigen::MatrixXd& l, Eigen::VectorXd& d, Eigen::MatrixXd& zt, Eigen::MatrixXd& izt) {
    const Eigen::Index n = d.size();
    zt = Eigen::MatrixXd::Identity(n, n);
    izt = Eigen::MatrixXd::Identity(n, n);
    Eigen::Index i1 = n - 2;
    bool swapped = true;
    while (swapped) {
        Eigen::Index i = n - 1;
        swapped = false;
        while (!swapped && i > 0) {
            --i;
            if (i <= i1) {
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    const double mu = std::round(l(j, i));
                    if (mu != 0.0) {
                        l.col(i).tail(n - j) -= mu * l.col(j).tail(n - j);
                        izt.col(j) += mu * izt.col(i);
                        zt.row(i) -= mu * zt.row(j);
                    }
                }
            }
            const double delta = d(i) + l(i + 1, i) * l(i + 1, i) * d(i + 1);
            if (delta < d(i + 1)) {
                const double lam = d(i + 1) * l(i + 1, i) / delta;
                const double eta = d(i) / delta;
                d(i) = eta * d(i + 1);
                d(i + 1) = delta;
                if (i > 0) {
                    const Eigen::MatrixXd head = l.block(i, 0, 2, i);
                    Eigen::Matrix2d m;
                    m << -l(i + 1, i), 1.0, eta, lam;
                    l.block(i, 0, 2, i) = m * head;
                }
                l(i + 1, i) = lam;
                if (i + 2 < n) l.col(i).tail(n - i - 2).swap(l.col(i + 1).tail(n - i - 2));
                izt.col(i).swap(izt.col(i + 1));
                zt.row(i).swap(zt.row(i + 1));
                i1 = i;
                swapped = true;
            }
        }
    }
}

}  // namespace

double ambiguity_cost(const Eigen::VectorXd& a_float, const IntVector& a, const Eigen::MatrixXd& q) {
    const Eigen::VectorXd e = a_float - a.cast<double>();
    return e.dot(SpdSolver(q, "ambiguity covariance").solve(e));
}

IntegerResolver::IntegerResolver(const Eigen::MatrixXd& q, IntegerMethod method, std::int64_t max_nodes)
    : method_(method), max_nodes_(max_nodes) {
    if (q.rows() != q.cols() || q.rows() == 0) throw DimensionError("integer resolver: covariance must be square");
    if (!is_symmetric(q, 1e-9)) throw NumericalError("ambiguity covariance is not symmetric");
    ltdl(q, l_, d_);
    if (method_ == IntegerMethod::ils) {
        zl_ = l_;
        zd_ = d_;
        decorrelate(zl_, zd_, zt_, izt_);
        q_llt_.compute(q);
        if (q_llt_.info() != Eigen::Success) throw NumericalError("ambiguity covariance is not positive definite");
    }
}

IntVector IntegerResolver::bootstrap(const Eigen::VectorXd& a_float) const {
    const Eigen::MatrixXd& l = l_;
    const Eigen::Index n = a_float.size();
    Eigen::VectorXd cond(n), fixed(n);
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        double c = a_float(k);
        for (Eigen::Index j = k + 1; j < n; ++j) c += (fixed(j) - cond(j)) * l(j, k);
        cond(k) = c;
        fixed(k) = std::round(c);
    }
    return fixed.cast<std::int64_t>();
}

double IntegerResolver::cost(const Eigen::VectorXd& a_float, const IntVector& a) const {
    const Eigen::VectorXd w = q_llt_.matrixL().solve(a_float - a.cast<double>());
    return w.squaredNorm();
}

IntVector IntegerResolver::search(const Eigen::VectorXd& z_float, bool* truncated) const {
    const Eigen::Index n = z_float.size();
    const Eigen::MatrixXd& l = zl_;
    const Eigen::VectorXd& d = zd_;
    Eigen::VectorXd dist = Eigen::VectorXd::Zero(n), acond(n), zcond(n), step(n), best(n);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n + 1, n);
    double chi2 = std::numeric_limits<double>::infinity();
    bool found = false;
    std::int64_t nodes = 0;

    Eigen::Index k = n - 1;
    acond(k) = z_float(k);
    zcond(k) = std::round(acond(k));
    double left = acond(k) - zcond(k);
    step(k) = left >= 0.0 ? 1.0 : -1.0;

    while (true) {
        if (++nodes > max_nodes_ && found) {
            if (truncated) *truncated = true;
            break;
        }
        const double newdist = dist(k) + left * left / d(k);
        if (newdist < chi2) {
            if (k != 0) {
                --k;
                dist(k) = newdist;
                s.row(k).head(k + 1) = s.row(k + 1).head(k + 1) + (zcond(k + 1) - acond(k + 1)) * l.row(k + 1).head(k + 1);
                acond(k) = z_float(k) + s(k, k);
                zcond(k) = std::round(acond(k));
                left = acond(k) - zcond(k);
                step(k) = left >= 0.0 ? 1.0 : -1.0;
            } else {
                best = zcond;
                chi2 = newdist;
                found = true;
                zcond(0) += step(0);
                left = acond(0) - zcond(0);
                step(0) = -step(0) - (step(0) > 0 ? 1.0 : -1.0);
            }
        } else {
            if (k == n - 1) break;
            ++k;
            zcond(k) += step(k);
            left = acond(k) - zcond(k);
            step(k) = -step(k) - (step(k) > 0 ? 1.0 : -1.0);
        }
    }
    return best.cast<std::int64_t>();
}

IntVector IntegerResolver::resolve(const Eigen::VectorXd& a_float, bool* truncated) const {
    if (a_float.size() != d_.size()) throw DimensionError("integer resolver: float vector size mismatch");
    if (truncated) *truncated = false;
    switch (method_) {
        case IntegerMethod::round: {
            IntVector out(a_float.size());
            for (Eigen::Index i = 0; i < a_float.size(); ++i) out(i) = static_cast<std::int64_t>(std::round(a_float(i)));
            return out;
        }
        case IntegerMethod::bootstrap:
            return bootstrap(a_float);
        case IntegerMethod::ils: {
            const Eigen::VectorXd z_float = zt_ * a_float;
            const IntVector z = search(z_float, truncated);
            const Eigen::VectorXd a_d = izt_ * z.cast<double>();
            IntVector a(a_d.size());
            for (Eigen::Index i = 0; i < a_d.size(); ++i) a(i) = static_cast<std::int64_t>(std::llround(a_d(i)));
            const IntVector boot = bootstrap(a_float);
            if (boot != a && cost(a_float, boot) <= cost(a_float, a)) return boot;
            return a;
        }
    }
    return {};
}

IntVector resolve_ambiguities(const Eigen::VectorXd& a_float, const Eigen::MatrixXd& q, IntegerMethod method) {
    return IntegerResolver(q, method).resolve(a_float);
}

}  // namespace coopdgnss
