#include "coopdgnss/errors.hpp"
#include "coopdgnss/experiments.hpp"
#include "coopdgnss/linalg.hpp"
#include "coopdgnss/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <thread>

namespace coopdgnss {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-receiver covariances on all K satellites (users first, then the base).
std::pair<std::vector<Eigen::MatrixXd>, Eigen::MatrixXd> receiver_covs(const NetworkSpec& spec, const SatelliteGeometry& g,
                                                                       double sigma, int users) {
    const Eigen::MatrixXd user = per_receiver_cov(sigma * sigma, weights_for(g, spec.weighting));
    return {std::vector<Eigen::MatrixXd>(users, user), spec.alpha * user};
}

Eigen::MatrixXd blkdiag2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return blkdiag({a, b}); }

}  // namespace

Scenario::Scenario(const NetworkSpec& spec, const SatelliteGeometry& geometry, Mode mode, IntegerMethod method,
                   std::int64_t max_nodes)
    : spec_(spec), mode_(mode) {
    spec_.validate();
    if (geometry.size() < spec.satellites()) throw ConfigError("scenario: geometry has too few satellites");
    split_ = make_split(spec.K_c, spec.K_o);
    geom_ = geometry.prefix(spec.satellites());
    geom_.pivot = common_pivot(geom_, split_);
    layout_ = cluster_layout(split_, spec.N_c, spec.N_o, geom_.pivot);
    solvable_ = solvability_check(layout_.counts());
    if (!solvable_) return;

    const int n = spec.users();
    const Eigen::VectorXd w = weights_for(geom_, spec.weighting);
    const Eigen::MatrixXd r_user = per_receiver_cov(spec.sigma_rho * spec.sigma_rho, w);
    const Eigen::MatrixXd r_common = select_rows(Eigen::MatrixXd(select_rows(r_user, split_.common).transpose()), split_.common);
    const auto [code_users, code_base] = receiver_covs(spec, geom_, spec.sigma_rho, n);
    const StructuredCovariance sd_code = network_sd_covariance(layout_, code_users, code_base, CovTag::sd_code);

    const BetaSet b = beta(spec.alpha, spec.N_o);
    if (mode_ == Mode::cdgnss) {
        stride_ = 4;
        const Eigen::MatrixXd h = observation_matrix(geom_);
        design_ = network_sd_geometry(layout_, h);
        cov_ = sd_code.dense;
        fim_ = fim(design_, cov_);
        solver_.emplace(design_, cov_);
        j_c_ = fim(select_rows(h, split_.common), r_common);
    } else {
        stride_ = 3;
        const Eigen::MatrixXd e = geometry_matrix(geom_);
        design_ = network_dd_geometry(layout_, e);
        const auto [phase_users, phase_base] = receiver_covs(spec, geom_, spec.sigma_phi, n);
        const StructuredCovariance sd_phase = network_sd_covariance(layout_, phase_users, phase_base, CovTag::sd_phase);
        const Eigen::MatrixXd dd_code = network_dd_covariance(layout_, sd_code, CovTag::dd_code).dense;
        const Eigen::MatrixXd dd_phase = network_dd_covariance(layout_, sd_phase, CovTag::dd_phase).dense;
        cov_ = blkdiag2(dd_code, dd_phase);
        const Eigen::Index m = design_.rows();
        const Eigen::MatrixXd amb = spec.lambda * Eigen::MatrixXd::Identity(m, m);
        fim_ = fim(design_, dd_code);
        solver_.emplace(crtk_design(design_, amb), cov_);
        Eigen::MatrixXd fixed_design(2 * m, design_.cols());
        fixed_design << design_, design_;
        fix_solver_.emplace(fixed_design, cov_);
        const Eigen::MatrixXd q_full = solver_->covariance();
        Eigen::MatrixXd q = q_full.bottomRightCorner(m, m);
        q = 0.5 * (q + q.transpose());
        resolver_.emplace(q, method, max_nodes);
        constrained_dd_ = static_cast<int>(layout_.dd_satellites(0).size());
        rmse_fix_crb_ = std::sqrt(spd_inverse(fim(fixed_design, cov_), "fixed information").topLeftCorner(3, 3).trace());

        // Constrained user alone on the common satellites, double differenced.
        const auto& common = split_.common;
        const auto pit = std::find(common.begin(), common.end(), geom_.pivot);
        const int local_pivot = static_cast<int>(pit - common.begin());
        const Eigen::MatrixXd d = dd_operator(1, static_cast<int>(common.size()), local_pivot);
        j_c_ = fim(dd_geometry(select_rows(e, common), local_pivot), Eigen::MatrixXd(d * r_common * d.transpose()));
    }

    rmse_crb_ = rmse_bound(fim_, 0, stride_);
    const Benchmarks bm = benchmarks(j_c_, spec.alpha);
    rmse_noncoop_ = position_rmse(bm.noncoop);
    rmse_ideal_ = position_rmse(bm.ideal);
    rmse_asym_ = position_rmse(bm.ideal / b.beta1);
}

BoundReport Scenario::bound_report() const {
    if (!solvable_) throw NumericalError("bound report: network is not solvable");
    BoundReport rep;
    rep.fim = fim_;
    const Eigen::MatrixXd inv = spd_inverse(fim_, "bound report: Fisher information");
    for (int u = 0; u < layout_.users(); ++u) {
        const Eigen::Matrix3d blk = inv.block<3, 3>(u * stride_, u * stride_);
        rep.crb_user_blocks.push_back(blk);
        rep.rmse_per_user.push_back(std::sqrt(blk.trace()));
    }
    rep.benchmark_noncoop = rmse_noncoop_;
    rep.benchmark_ideal = rmse_ideal_;
    rep.benchmark_asymptotic = rmse_asym_;
    return rep;
}

TrialOutcome Scenario::run_trial(std::uint64_t seed, ObservationDump* dump) const {
    if (!solvable_) throw NumericalError("trial: network is not solvable");
    const TruthState truth = sample_truth(spec_, geom_, substream_seed({seed, 0}));
    const ObservationSet raw = synthesize_raw(geom_, spec_, truth, substream_seed({seed, 1}));
    const ObservationSet sd = to_sd(raw, layout_);
    const int n = layout_.users();
    const Eigen::VectorXd truth_b = truth.baselines();

    TrialOutcome out;
    out.user_errors.resize(n);
    if (mode_ == Mode::cdgnss) {
        if (dump) {
            dump->sets = {raw, sd};
            if (layout_.K >= 2) dump->sets.push_back(to_dd(sd, layout_.pivot));
        }
        const auto res = solver_->solve(sd.total_code(), Eigen::VectorXd::Zero(design_.cols()));
        for (int u = 0; u < n; ++u) out.user_errors[u] = res.w.segment<3>(4 * u) - truth_b.segment<3>(3 * u);
        out.sq_err = out.user_errors[0].squaredNorm();
        out.sq_err_float = out.sq_err;
        out.iterations = res.iterations;
        out.residual_norm = res.residual_norm;
        return out;
    }

    const ObservationSet dd = to_dd(sd, layout_.pivot);
    if (dump) dump->sets = {raw, sd, dd};
    const Eigen::Index m = design_.rows();
    const Eigen::Index nb = design_.cols();
    Eigen::VectorXd y(2 * m);
    y << dd.total_code(), dd.total_phase();
    const auto flt = solver_->solve(y, Eigen::VectorXd::Zero(nb + m));
    const IntVector fixed = resolver_->resolve(flt.w.tail(m), &out.truncated);
    const IntVector truth_a = dd_ambiguities(truth, layout_);

    Eigen::VectorXd y_fix = y;
    y_fix.tail(m) -= spec_.lambda * fixed.cast<double>();
    const auto fix = fix_solver_->solve(y_fix, Eigen::VectorXd::Zero(nb));

    out.user_success.resize(n);
    int row = 0;
    for (int u = 0; u < n; ++u) {
        const int cnt = static_cast<int>(layout_.dd_satellites(u).size());
        out.user_success[u] = fixed.segment(row, cnt) == truth_a.segment(row, cnt);
        row += cnt;
        const Eigen::VectorXd& w = out.user_success[u] ? fix.w : flt.w;
        out.user_errors[u] = w.segment<3>(3 * u) - truth_b.segment<3>(3 * u);
    }
    out.success = out.user_success[0];
    out.sq_err_float = (flt.w.head<3>() - truth_b.head<3>()).squaredNorm();
    out.sq_err_fixed = (fix.w.head<3>() - truth_b.head<3>()).squaredNorm();
    out.sq_err = out.user_errors[0].squaredNorm();
    out.iterations = flt.iterations;
    out.residual_norm = (out.success ? fix : flt).residual_norm;
    return out;
}

void parallel_for(int n, int threads, const std::function<void(int)>& f) {
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, std::max(n, 1));
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            while (!failed) {
                const int i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

namespace {

SweepRow run_point(const SweepConfig& cfg, const NetworkSpec& spec, const SatelliteGeometry& geo, std::uint64_t point,
                   ObservationDump* dump) {
    SweepRow row;
    row.trials = 0;
    const Scenario sc(spec, geo, cfg.mode, cfg.ils_method, cfg.max_search_nodes);
    if (!sc.solvable()) {
        row.solvable = false;
        row.rmse_wls = row.rmse_crb = row.rmse_noncoop = row.rmse_ideal = row.rmse_asymptotic = kNaN;
        row.success_rate = row.rmse_float_wls = row.rmse_fixed_wls = row.rmse_fix_crb = kNaN;
        return row;
    }
    row.rmse_crb = sc.rmse_crb();
    row.rmse_noncoop = sc.rmse_noncoop();
    row.rmse_ideal = sc.rmse_ideal();
    row.rmse_asymptotic = sc.rmse_asymptotic();

    std::vector<TrialOutcome> outcomes(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](int t) {
        outcomes[t] = sc.run_trial(substream_seed({cfg.master_seed, point, static_cast<std::uint64_t>(t)}),
                                   (dump && t == 0) ? dump : nullptr);
        outcomes[t].user_errors.clear();
        outcomes[t].user_success.clear();
    });

    // Ordered reduction keeps the sums independent of scheduling.
    double sq = 0.0, sq_float = 0.0, sq_fixed = 0.0;
    int successes = 0, truncated = 0;
    for (const auto& o : outcomes) {
        sq += o.sq_err;
        sq_float += o.sq_err_float;
        if (o.success) {
            ++successes;
            sq_fixed += o.sq_err_fixed;
        }
        if (o.truncated) ++truncated;
    }
    const double m = cfg.trials;
    row.trials = cfg.trials;
    row.rmse_wls = std::sqrt(sq / m);
    row.rmse_float_wls = std::sqrt(sq_float / m);
    if (cfg.mode == Mode::crtk) {
        row.success_rate = successes / m;
        row.rmse_fixed_wls = successes > 0 ? std::sqrt(sq_fixed / successes) : kNaN;
        row.rmse_fix_crb = sc.rmse_fix_crb();
        row.truncated_searches = truncated;
    } else {
        row.success_rate = kNaN;
        row.rmse_fixed_wls = kNaN;
        row.rmse_fix_crb = kNaN;
    }
    return row;
}

std::vector<SweepRow> run_table(const SweepConfig& cfg, const SatelliteGeometry& geo, std::optional<double> family_value,
                                ObservationDump* dump) {
    NetworkSpec spec = cfg.base;
    if (cfg.family && family_value) spec = apply_param(cfg, spec, cfg.family->param, *family_value);
    std::vector<SweepRow> rows;
    if (!cfg.vary) {
        SweepRow row = run_point(cfg, spec, geo, 0, dump);
        row.swept_param = "none";
        row.swept_value = kNaN;
        rows.push_back(row);
        return rows;
    }
    for (std::size_t i = 0; i < cfg.vary->values.size(); ++i) {
        const double v = cfg.vary->values[i];
        // Same sweep index across family members: common random numbers between curves.
        SweepRow row = run_point(cfg, apply_param(cfg, spec, cfg.vary->param, v), geo, i, i == 0 ? dump : nullptr);
        row.swept_param = to_string(cfg.vary->param);
        row.swept_value = v;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

std::vector<SweepRow> run_cdgnss_sweep(const SweepConfig& cfg) {
    SweepConfig c = cfg;
    c.mode = Mode::cdgnss;
    c.family.reset();
    return run_table(c, resolve_geometry(c), std::nullopt, nullptr);
}

std::vector<SweepRow> run_crtk_sweep(const SweepConfig& cfg) {
    SweepConfig c = cfg;
    c.mode = Mode::crtk;
    c.family.reset();
    return run_table(c, resolve_geometry(c), std::nullopt, nullptr);
}

SweepResult run_sweep(const SweepConfig& cfg, ObservationDump* dump) {
    const SatelliteGeometry geo = resolve_geometry(cfg);
    SweepResult res;
    res.family = cfg.family;
    if (!cfg.family) {
        res.family_values = {kNaN};
        res.tables.push_back(run_table(cfg, geo, std::nullopt, dump));
        return res;
    }
    for (std::size_t f = 0; f < cfg.family->values.size(); ++f) {
        res.family_values.push_back(cfg.family->values[f]);
        res.tables.push_back(run_table(cfg, geo, cfg.family->values[f], f == 0 ? dump : nullptr));
    }
    return res;
}

std::string family_path(const std::string& out, const std::optional<SweepAxis>& family, double value) {
    if (!family) return out;
    const std::filesystem::path p(out);
    const std::string name = p.stem().string() + "_" + to_string(family->param) + format_number(value) + p.extension().string();
    return (p.parent_path() / name).string();
}

SimulationRun run_simulation(const SweepConfig& cfg) {
    const SatelliteGeometry geo = resolve_geometry(cfg);
    const Scenario sc(cfg.base, geo, cfg.mode, cfg.ils_method, cfg.max_search_nodes);
    if (!sc.solvable()) throw NumericalError("simulate: network is not solvable");
    SimulationRun run;
    run.mode = cfg.mode;
    run.trials.resize(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](int t) {
        run.trials[t] = sc.run_trial(substream_seed({cfg.master_seed, 0, static_cast<std::uint64_t>(t)}));
    });
    return run;
}

}  // namespace coopdgnss
