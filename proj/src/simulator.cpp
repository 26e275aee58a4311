#include "coopdgnss/simulator.hpp"

#include "coopdgnss/errors.hpp"
#include "coopdgnss/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace coopdgnss {

Eigen::VectorXd TruthState::sd_states() const {
    const int n = users();
    Eigen::VectorXd x(4 * n);
    for (int r = 0; r < n; ++r) {
        x.segment<3>(4 * r) = positions[r + 1] - positions[0];
        x(4 * r + 3) = clock_offsets(r + 1) - clock_offsets(0);
    }
    return x;
}

Eigen::VectorXd TruthState::baselines() const {
    const int n = users();
    Eigen::VectorXd b(3 * n);
    for (int r = 0; r < n; ++r) b.segment<3>(3 * r) = positions[r + 1] - positions[0];
    return b;
}

Eigen::VectorXd ObservationSet::total_code() const {
    Eigen::VectorXd t = code;
    const auto rr = rows();
    for (std::size_t i = 0; i < rr.size(); ++i) {
        const auto [rx, sat] = rr[i];
        if (level == Level::raw) t(i) += rx_clock(rx) + sat_code(sat);
        else if (level == Level::sd) t(i) += rx_clock(rx - 1);
    }
    return t;
}

Eigen::VectorXd ObservationSet::total_phase() const {
    Eigen::VectorXd t = phase;
    const auto rr = rows();
    for (std::size_t i = 0; i < rr.size(); ++i) {
        const auto [rx, sat] = rr[i];
        if (level == Level::raw) t(i) += rx_clock(rx) + sat_phase(sat);
        else if (level == Level::sd) t(i) += rx_clock(rx - 1);
    }
    return t;
}

std::vector<std::pair<int, int>> ObservationSet::rows() const {
    std::vector<std::pair<int, int>> out;
    if (level == Level::raw) {
        for (int r = 0; r <= N; ++r)
            for (int s = 0; s < K; ++s) out.emplace_back(r, s);
    } else {
        for (int r = 0; r < layout.users(); ++r) {
            const auto sats = level == Level::sd ? layout.visible[r] : layout.dd_satellites(r);
            for (int s : sats) out.emplace_back(r + 1, s);
        }
    }
    return out;
}

TruthState sample_truth(const NetworkSpec& spec, const SatelliteGeometry& g, std::uint64_t seed) {
    const int n = spec.users();
    const int k = g.size();
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> cube(-5.0, 5.0);
    std::uniform_real_distribution<double> clock(-100.0, 100.0);
    std::uniform_int_distribution<std::int64_t> amb(-100, 100);
    std::uniform_real_distribution<double> sat_clk(-3.0e5, 3.0e5);
    std::uniform_real_distribution<double> tropo(2.3, 10.0);
    std::uniform_real_distribution<double> iono(1.0, 15.0);

    TruthState t;
    t.positions.assign(n + 1, Eigen::Vector3d::Zero());
    t.clock_offsets = Eigen::VectorXd::Zero(n + 1);
    for (int r = 1; r <= n; ++r) {
        for (int i = 0; i < 3; ++i) t.positions[r](i) = cube(eng);
        t.clock_offsets(r) = clock(eng);
    }
    t.ambiguities.resize(n + 1, k);
    for (int r = 0; r <= n; ++r)
        for (int s = 0; s < k; ++s) t.ambiguities(r, s) = amb(eng);
    t.sat_clock.resize(k);
    t.tropo.resize(k);
    t.iono.resize(k);
    for (int s = 0; s < k; ++s) {
        t.sat_clock(s) = sat_clk(eng);
        t.tropo(s) = tropo(eng);
        t.iono(s) = iono(eng);
    }
    return t;
}

ObservationSet synthesize_raw(const SatelliteGeometry& g, const NetworkSpec& spec, const TruthState& truth,
                              std::uint64_t seed) {
    const int n = truth.users();
    const int k = g.size();
    if (truth.satellites() != k || truth.ambiguities.rows() != n + 1 || truth.ambiguities.cols() != k)
        throw DimensionError("synthesize_raw: truth does not match geometry");

    const Eigen::MatrixXd e = geometry_matrix(g);
    const Eigen::VectorXd w = weights_for(g, spec.weighting);
    const Eigen::VectorXd code_sd = (spec.sigma_rho * spec.sigma_rho * w.cwiseInverse()).cwiseSqrt();
    const Eigen::VectorXd phase_sd = (spec.sigma_phi * spec.sigma_phi * w.cwiseInverse()).cwiseSqrt();
    const double base_scale = std::sqrt(spec.alpha);

    ObservationSet obs;
    obs.level = Level::raw;
    obs.N = n;
    obs.K = k;
    obs.seed = seed;
    obs.layout = full_layout(n, k, g.pivot);
    obs.code.resize((n + 1) * k);
    obs.phase.resize((n + 1) * k);
    obs.rx_clock = truth.clock_offsets;
    obs.sat_code = truth.sat_clock + truth.tropo + truth.iono;
    obs.sat_phase = truth.sat_clock + truth.tropo - truth.iono;

    std::normal_distribution<double> normal(0.0, 1.0);
    for (int r = 0; r <= n; ++r) {
        // Separate code/phase substreams per receiver keep draws stable when K or N change.
        std::mt19937_64 code_eng(substream_seed({seed, 2 * static_cast<std::uint64_t>(r)}));
        std::mt19937_64 phase_eng(substream_seed({seed, 2 * static_cast<std::uint64_t>(r) + 1}));
        normal.reset();
        const double scale = r == 0 ? base_scale : 1.0;
        const Eigen::Vector3d& p = truth.positions[r];
        for (int s = 0; s < k; ++s) {
            const double geo = e.row(s).dot(p);
            obs.code(r * k + s) = geo + scale * code_sd(s) * normal(code_eng);
        }
        normal.reset();
        for (int s = 0; s < k; ++s) {
            const double geo = e.row(s).dot(p);
            obs.phase(r * k + s) = geo + spec.lambda * static_cast<double>(truth.ambiguities(r, s)) +
                                   scale * phase_sd(s) * normal(phase_eng);
        }
    }
    return obs;
}

ObservationSet to_sd(const ObservationSet& raw) { return to_sd(raw, full_layout(raw.N, raw.K, raw.layout.pivot)); }

ObservationSet to_sd(const ObservationSet& raw, const NetworkLayout& layout) {
    if (raw.level != Level::raw) throw DimensionError("to_sd: input is not raw");
    if (layout.users() != raw.N || layout.K != raw.K) throw DimensionError("to_sd: layout does not match observations");
    ObservationSet sd;
    sd.level = Level::sd;
    sd.N = raw.N;
    sd.K = raw.K;
    sd.seed = raw.seed;
    sd.layout = layout;
    sd.code.resize(layout.sd_rows());
    sd.phase.resize(layout.sd_rows());
    sd.rx_clock.resize(raw.N);
    const int k = raw.K;
    int row = 0;
    for (int r = 0; r < raw.N; ++r) {
        sd.rx_clock(r) = raw.rx_clock(r + 1) - raw.rx_clock(0);
        for (int s : layout.visible[r]) {
            // The satellite-common parts are the same number for user and base; their difference is zero.
            sd.code(row) = (raw.code((r + 1) * k + s) - raw.code(s)) + (raw.sat_code(s) - raw.sat_code(s));
            sd.phase(row) = (raw.phase((r + 1) * k + s) - raw.phase(s)) + (raw.sat_phase(s) - raw.sat_phase(s));
            ++row;
        }
    }
    return sd;
}

ObservationSet to_dd(const ObservationSet& sd, int pivot) {
    if (sd.level != Level::sd) throw DimensionError("to_dd: input is not single-differenced");
    if (sd.K < 2) throw DimensionError("to_dd: need at least two satellites");
    ObservationSet dd;
    dd.level = Level::dd;
    dd.N = sd.N;
    dd.K = sd.K;
    dd.seed = sd.seed;
    dd.layout = sd.layout;
    dd.layout.pivot = pivot;
    dd.code.resize(dd.layout.dd_rows());
    dd.phase.resize(dd.layout.dd_rows());
    int row = 0, base = 0;
    for (int r = 0; r < sd.N; ++r) {
        const auto& vis = sd.layout.visible[r];
        const auto it = std::find(vis.begin(), vis.end(), pivot);
        if (it == vis.end()) throw DimensionError("to_dd: user does not track the pivot");
        const int p = base + static_cast<int>(it - vis.begin());
        for (std::size_t i = 0; i < vis.size(); ++i) {
            if (vis[i] == pivot) continue;
            const int s = base + static_cast<int>(i);
            dd.code(row) = (sd.code(s) - sd.code(p)) + (sd.rx_clock(r) - sd.rx_clock(r));
            dd.phase(row) = (sd.phase(s) - sd.phase(p)) + (sd.rx_clock(r) - sd.rx_clock(r));
            ++row;
        }
        base += static_cast<int>(vis.size());
    }
    return dd;
}

IntVector dd_ambiguities(const TruthState& truth, const NetworkLayout& layout) {
    IntVector a(layout.dd_rows());
    const int p = layout.pivot;
    int row = 0;
    for (int r = 0; r < layout.users(); ++r)
        for (int s : layout.dd_satellites(r))
            a(row++) = truth.ambiguities(r + 1, s) - truth.ambiguities(r + 1, p) -
                       (truth.ambiguities(0, s) - truth.ambiguities(0, p));
    return a;
}

}  // namespace coopdgnss
