#include "coopdgnss/netmodel.hpp"

#include "coopdgnss/errors.hpp"
#include "coopdgnss/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace coopdgnss {

void NetworkSpec::validate() const {
    if (N_c < 0 || N_o < 0 || N_c + N_o < 1) throw ConfigError("network: need N_c >= 0, N_o >= 0, N_c + N_o >= 1");
    if (K_c < 1 || K_o < 0) throw ConfigError("network: need K_c >= 1 and K_o >= 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("network: alpha must be finite and >= 0");
    if (!(sigma_rho > 0.0) || !std::isfinite(sigma_rho)) throw ConfigError("network: sigma_rho must be > 0");
    if (!(sigma_phi > 0.0) || !(sigma_phi < sigma_rho)) throw ConfigError("network: need 0 < sigma_phi < sigma_rho");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("network: lambda must be > 0");
}

bool StructuredCovariance::well_formed() const { return is_symmetric(dense, 1e-12) && is_psd(dense); }

// ==== Operators ====

Eigen::MatrixXd sd_operator(int receivers, int m) {
    if (receivers < 1 || m < 1) throw DimensionError("sd_operator: need N >= 1 and m >= 1");
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m * receivers, m * (receivers + 1));
    for (int r = 0; r < receivers; ++r)
        for (int i = 0; i < m; ++i) {
            d(r * m + i, i) = -1.0;
            d(r * m + i, (r + 1) * m + i) = 1.0;
        }
    return d;
}

Eigen::MatrixXd dd_operator(int receivers, int m, int pivot) {
    if (receivers < 1 || m < 2) throw DimensionError("dd_operator: need N >= 1 and m >= 2");
    if (pivot < 0 || pivot >= m) throw DimensionError("dd_operator: pivot out of range");
    Eigen::MatrixXd dp = Eigen::MatrixXd::Zero(m - 1, m);
    int row = 0;
    for (int s = 0; s < m; ++s) {
        if (s == pivot) continue;
        dp(row, pivot) = -1.0;
        dp(row, s) = 1.0;
        ++row;
    }
    return kron(Eigen::MatrixXd::Identity(receivers, receivers), dp);
}

// ==== Covariances ====

Eigen::MatrixXd per_receiver_cov(double sigma2, const Eigen::VectorXd& weights) {
    if (weights.size() > 0 && !(weights.minCoeff() > 0.0))
        throw DimensionError("per_receiver_cov: weights must be positive");
    return (sigma2 * weights.cwiseInverse()).asDiagonal();
}

Eigen::VectorXd elevation_weights(const SatelliteGeometry& g) {
    Eigen::VectorXd w(g.size());
    for (int s = 0; s < g.size(); ++s) w(s) = std::pow(std::sin(g.elevations[s]), 2);
    return w;
}

Eigen::VectorXd weights_for(const SatelliteGeometry& g, Weighting w) {
    return w == Weighting::elevation ? elevation_weights(g) : Eigen::VectorXd::Ones(g.size());
}

StructuredCovariance sd_covariance(const std::vector<Eigen::MatrixXd>& user_covs, const Eigen::MatrixXd& base_cov) {
    const auto k = base_cov.rows();
    if (base_cov.cols() != k) throw DimensionError("sd_covariance: base block not square");
    const auto n = static_cast<Eigen::Index>(user_covs.size());
    StructuredCovariance out;
    out.tag = CovTag::sd_code;
    out.layout.sizes.assign(user_covs.size(), static_cast<int>(k));
    out.dense.resize(n * k, n * k);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (user_covs[i].rows() != k || user_covs[i].cols() != k)
            throw DimensionError("sd_covariance: user block size mismatch");
        for (Eigen::Index j = 0; j < n; ++j)
            out.dense.block(i * k, j * k, k, k) = (i == j) ? Eigen::MatrixXd(user_covs[i] + base_cov) : base_cov;
    }
    return out;
}

StructuredCovariance alpha_cov(int receivers, double alpha, const Eigen::MatrixXd& block) {
    if (alpha < 0.0) throw DimensionError("alpha_cov: alpha must be >= 0");
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(receivers, receivers);
    c.array() += alpha;
    StructuredCovariance out;
    out.dense = kron(c, block);
    out.layout.sizes.assign(receivers, static_cast<int>(block.rows()));
    out.tag = CovTag::sd_code;
    return out;
}

StructuredCovariance dd_covariance(const StructuredCovariance& sd_cov, int receivers, int sats, int pivot) {
    if (sd_cov.dense.rows() != static_cast<Eigen::Index>(receivers) * sats || sd_cov.dense.cols() != sd_cov.dense.rows())
        throw DimensionError("dd_covariance: covariance is not KN x KN");
    const Eigen::MatrixXd d = dd_operator(receivers, sats, pivot);
    StructuredCovariance out;
    out.dense = d * sd_cov.dense * d.transpose();
    out.dense = 0.5 * (out.dense + out.dense.transpose());
    out.layout.sizes.assign(receivers, sats - 1);
    out.tag = sd_cov.tag == CovTag::sd_phase ? CovTag::dd_phase : CovTag::dd_code;
    return out;
}

// ==== Two-cluster model ====

Eigen::MatrixXd clustered_obs(const Eigen::MatrixXd& g_c, const Eigen::MatrixXd& g_o, int n_aiding) {
    if (g_o.rows() > 0 && g_o.cols() != g_c.cols()) throw DimensionError("clustered_obs: column counts differ");
    if (n_aiding < 0) throw DimensionError("clustered_obs: negative aiding count");
    Eigen::MatrixXd g(g_c.rows() + g_o.rows(), g_c.cols());
    g << g_c, g_o;
    std::vector<Eigen::MatrixXd> blocks{g_c};
    for (int j = 0; j < n_aiding; ++j) blocks.push_back(g);
    return blkdiag(blocks);
}

StructuredCovariance clustered_cov(int n_aiding, double alpha, const Eigen::MatrixXd& r_c, const Eigen::MatrixXd& r_o) {
    if (n_aiding < 0 || alpha < 0.0) throw DimensionError("clustered_cov: need N_o >= 0 and alpha >= 0");
    const auto kc = r_c.rows();
    const auto ko = r_o.rows();
    const auto k = kc + ko;
    const Eigen::MatrixXd r = blkdiag({r_c, r_o});
    StructuredCovariance out;
    out.tag = CovTag::clustered;
    out.layout.sizes.push_back(static_cast<int>(kc));
    out.layout.sizes.insert(out.layout.sizes.end(), n_aiding, static_cast<int>(k));
    out.dense = Eigen::MatrixXd::Zero(kc + n_aiding * k, kc + n_aiding * k);
    out.dense.topLeftCorner(kc, kc) = (1.0 + alpha) * r_c;
    for (int j = 0; j < n_aiding; ++j) {
        const auto off = kc + j * k;
        out.dense.block(0, off, kc, kc) = alpha * r_c;
        out.dense.block(off, 0, kc, kc) = alpha * r_c;
        for (int i = 0; i < n_aiding; ++i)
            out.dense.block(kc + i * k, off, k, k) = (i == j ? 1.0 + alpha : alpha) * r;
    }
    return out;
}

BetaSet beta(double alpha, int n_aiding) {
    if (alpha < 0.0 || n_aiding < 0) throw DimensionError("beta: need alpha >= 0 and N_o >= 0");
    const double an = alpha * n_aiding;
    BetaSet b{};
    b.beta0 = 1.0 / (1.0 + an);
    b.beta2 = -alpha / (an + alpha + 1.0);
    b.beta1 = b.beta2 + 1.0;
    b.beta3 = -(alpha * alpha) / ((1.0 + an) * (an + alpha + 1.0));
    b.beta5 = -alpha / (an + 1.0);
    b.beta4 = b.beta5 + 1.0;
    return b;
}

StructuredCovariance closed_form_inverse(int n_aiding, double alpha, const Eigen::MatrixXd& r_c,
                                         const Eigen::MatrixXd& r_o) {
    const Eigen::MatrixXd rc_inv = spd_inverse(r_c, "closed_form_inverse: R_c");
    const Eigen::MatrixXd ro_inv = r_o.rows() > 0 ? spd_inverse(r_o, "closed_form_inverse: R_o") : Eigen::MatrixXd(0, 0);
    const BetaSet b = beta(alpha, n_aiding);
    const auto kc = r_c.rows();
    const auto k = kc + r_o.rows();
    const Eigen::MatrixXd diag_block = blkdiag({b.beta1 * rc_inv, b.beta4 * ro_inv});
    const Eigen::MatrixXd off_block = blkdiag({b.beta2 * rc_inv, b.beta5 * ro_inv});

    StructuredCovariance out;
    out.tag = CovTag::clustered;
    out.layout.sizes.push_back(static_cast<int>(kc));
    out.layout.sizes.insert(out.layout.sizes.end(), n_aiding, static_cast<int>(k));
    out.dense = Eigen::MatrixXd::Zero(kc + n_aiding * k, kc + n_aiding * k);
    out.dense.topLeftCorner(kc, kc) = b.beta1 * rc_inv;
    for (int j = 0; j < n_aiding; ++j) {
        const auto off = kc + j * k;
        out.dense.block(0, off, kc, kc) = b.beta2 * rc_inv;
        out.dense.block(off, 0, kc, kc) = b.beta2 * rc_inv;
        for (int i = 0; i < n_aiding; ++i)
            out.dense.block(kc + i * k, off, k, k) = (i == j) ? diag_block : off_block;
    }
    return out;
}

// ==== Heterogeneous-visibility network ====

std::vector<int> NetworkLayout::counts() const {
    std::vector<int> c;
    for (const auto& v : visible) c.push_back(static_cast<int>(v.size()));
    return c;
}

int NetworkLayout::sd_rows() const {
    int n = 0;
    for (const auto& v : visible) n += static_cast<int>(v.size());
    return n;
}

int NetworkLayout::dd_rows() const { return sd_rows() - users(); }

std::vector<int> NetworkLayout::dd_satellites(int user) const {
    std::vector<int> out;
    for (int s : visible.at(user))
        if (s != pivot) out.push_back(s);
    return out;
}

NetworkLayout full_layout(int users, int sats, int pivot) {
    NetworkLayout l;
    l.K = sats;
    l.pivot = pivot;
    std::vector<int> all(sats);
    for (int s = 0; s < sats; ++s) all[s] = s;
    l.visible.assign(users, all);
    return l;
}

NetworkLayout cluster_layout(const VisibilitySplit& split, int n_constrained, int n_aiding, int pivot) {
    if (std::find(split.common.begin(), split.common.end(), pivot) == split.common.end())
        throw DimensionError("cluster_layout: pivot must be a common satellite");
    NetworkLayout l;
    l.K = split.total();
    l.pivot = pivot;
    std::vector<int> wide = split.common;
    wide.insert(wide.end(), split.exclusive.begin(), split.exclusive.end());
    std::sort(wide.begin(), wide.end());
    std::vector<int> narrow = split.common;
    std::sort(narrow.begin(), narrow.end());
    l.visible.assign(n_constrained, narrow);
    l.visible.insert(l.visible.end(), n_aiding, wide);
    return l;
}

Eigen::MatrixXd sd_selection_operator(const NetworkLayout& layout) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(layout.sd_rows(), layout.K * (layout.users() + 1));
    int row = 0;
    for (int r = 0; r < layout.users(); ++r)
        for (int s : layout.visible[r]) {
            d(row, s) = -1.0;
            d(row, (r + 1) * layout.K + s) = 1.0;
            ++row;
        }
    return d;
}

Eigen::MatrixXd dd_selection_operator(const NetworkLayout& layout) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(layout.dd_rows(), layout.sd_rows());
    int row = 0, base = 0;
    for (int r = 0; r < layout.users(); ++r) {
        const auto& vis = layout.visible[r];
        const auto it = std::find(vis.begin(), vis.end(), layout.pivot);
        if (it == vis.end()) throw DimensionError("dd_selection_operator: user does not track the pivot");
        const int pivot_col = base + static_cast<int>(it - vis.begin());
        for (std::size_t i = 0; i < vis.size(); ++i) {
            if (vis[i] == layout.pivot) continue;
            d(row, pivot_col) = -1.0;
            d(row, base + static_cast<int>(i)) = 1.0;
            ++row;
        }
        base += static_cast<int>(vis.size());
    }
    return d;
}

StructuredCovariance network_sd_covariance(const NetworkLayout& layout, const std::vector<Eigen::MatrixXd>& user_covs,
                                           const Eigen::MatrixXd& base_cov, CovTag tag) {
    if (static_cast<int>(user_covs.size()) != layout.users())
        throw DimensionError("network_sd_covariance: one covariance per user required");
    if (base_cov.rows() != layout.K || base_cov.cols() != layout.K)
        throw DimensionError("network_sd_covariance: base covariance must be K x K");
    for (const auto& c : user_covs)
        if (c.rows() != layout.K || c.cols() != layout.K)
            throw DimensionError("network_sd_covariance: user covariance must be K x K");

    StructuredCovariance out;
    out.tag = tag;
    out.layout.sizes = layout.counts();
    out.dense.resize(layout.sd_rows(), layout.sd_rows());
    int ri = 0;
    for (int r = 0; r < layout.users(); ++r) {
        for (int s : layout.visible[r]) {
            int ci = 0;
            for (int q = 0; q < layout.users(); ++q)
                for (int t : layout.visible[q]) {
                    out.dense(ri, ci) = base_cov(s, t) + (r == q ? user_covs[r](s, t) : 0.0);
                    ++ci;
                }
            ++ri;
        }
    }
    return out;
}

StructuredCovariance network_dd_covariance(const NetworkLayout& layout, const StructuredCovariance& sd_cov,
                                           CovTag tag) {
    if (sd_cov.dense.rows() != layout.sd_rows()) throw DimensionError("network_dd_covariance: size mismatch");
    const Eigen::MatrixXd d = dd_selection_operator(layout);
    StructuredCovariance out;
    out.tag = tag;
    out.dense = d * sd_cov.dense * d.transpose();
    out.dense = 0.5 * (out.dense + out.dense.transpose());
    for (int c : layout.counts()) out.layout.sizes.push_back(c - 1);
    return out;
}

Eigen::MatrixXd network_sd_geometry(const NetworkLayout& layout, const Eigen::MatrixXd& h) {
    std::vector<Eigen::MatrixXd> blocks;
    for (const auto& vis : layout.visible) blocks.push_back(select_rows(h, vis));
    return blkdiag(blocks);
}

Eigen::MatrixXd network_dd_geometry(const NetworkLayout& layout, const Eigen::MatrixXd& e) {
    std::vector<Eigen::MatrixXd> blocks;
    for (const auto& vis : layout.visible) {
        const auto it = std::find(vis.begin(), vis.end(), layout.pivot);
        if (it == vis.end()) throw DimensionError("network_dd_geometry: user does not track the pivot");
        blocks.push_back(dd_geometry(select_rows(e, vis), static_cast<int>(it - vis.begin())));
    }
    return blkdiag(blocks);
}

}  // namespace coopdgnss
