#pragma once

#include "coopdgnss/geometry.hpp"
#include "coopdgnss/netmodel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

namespace coopdgnss {

using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Index 0 is the base station, users follow in layout order.
struct TruthState {
    std::vector<Eigen::Vector3d> positions;  ///< increments about the linearization points (m)
    Eigen::VectorXd clock_offsets;           ///< c*dt per receiver (m)
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> ambiguities;  ///< (N+1) x K cycles
    Eigen::VectorXd sat_clock, tropo, iono;  ///< per satellite (m)

    int users() const { return static_cast<int>(positions.size()) - 1; }
    int satellites() const { return static_cast<int>(sat_clock.size()); }

    /// Per-user [position; clock - base clock] state vectors stacked.
    Eigen::VectorXd sd_states() const;
    /// Per-user position increments stacked (3 per user).
    Eigen::VectorXd baselines() const;
};

enum class Level { raw, sd, dd };

/**
 * @brief Stacked observed-minus-computed code and phase.
 *
 * Terms shared by all receivers for a satellite (sat_code/sat_phase, raw level
 * only) and terms shared by all satellites of a receiver (rx_clock) are held
 * apart from the receiver-specific part, so differencing removes them exactly.
 * total_code()/total_phase() give the observable sums.
 */
struct ObservationSet {
    Level level = Level::raw;
    int N = 0;  ///< users
    int K = 0;  ///< satellites tracked by the base
    std::uint64_t seed = 0;
    NetworkLayout layout;  ///< raw level: every receiver tracks all K

    Eigen::VectorXd code, phase;
    Eigen::VectorXd sat_code, sat_phase;
    Eigen::VectorXd rx_clock;

    Eigen::VectorXd total_code() const;
    Eigen::VectorXd total_phase() const;

    /// (receiver, satellite) per row. Raw receivers count the base as 0;
    /// differenced levels number users from 1.
    std::vector<std::pair<int, int>> rows() const;
};

TruthState sample_truth(const NetworkSpec& spec, const SatelliteGeometry& g, std::uint64_t seed);

/// Raw residuals for the base and every user on all K satellites.
ObservationSet synthesize_raw(const SatelliteGeometry& g, const NetworkSpec& spec, const TruthState& truth,
                              std::uint64_t seed);

ObservationSet to_sd(const ObservationSet& raw);
ObservationSet to_sd(const ObservationSet& raw, const NetworkLayout& layout);
ObservationSet to_dd(const ObservationSet& sd, int pivot);

/// N^s_r - N^p_r - (N^s_b - N^p_b) for every double-difference row of the layout.
IntVector dd_ambiguities(const TruthState& truth, const NetworkLayout& layout);

}  // namespace coopdgnss
