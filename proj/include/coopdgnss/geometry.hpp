#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace coopdgnss {

/// Line-of-sight set shared by every receiver of the network (local ENU).
struct SatelliteGeometry {
    std::vector<Eigen::Vector3d> los;  ///< unit vectors, receiver towards satellite
    std::vector<double> elevations;    ///< radians
    int pivot = 0;                     ///< reference satellite for double differencing

    int size() const { return static_cast<int>(los.size()); }

    /// Throws DimensionError when a stored invariant is violated.
    void validate(double mask = 0.0) const;

    /// Geometry restricted to the first `count` satellites; pivot is remapped
    /// to the highest satellite of the subset when it falls outside.
    SatelliteGeometry prefix(int count) const;
};

/// Satellites seen by everyone vs. only by the aiding users and the base.
struct VisibilitySplit {
    std::vector<int> common;
    std::vector<int> exclusive;

    int total() const { return static_cast<int>(common.size() + exclusive.size()); }
};

/// Common set is satellites [0, K_c), exclusive set is [K_c, K_c + K_o).
VisibilitySplit make_split(int common_count, int exclusive_count);

/// Highest-elevation satellite among the common set.
int common_pivot(const SatelliteGeometry& g, const VisibilitySplit& split);

SatelliteGeometry generate_constellation(int count, double mask, std::uint64_t seed);

/// Rows are -los^T.
Eigen::MatrixXd geometry_matrix(const SatelliteGeometry& g);

/// [E | 1].
Eigen::MatrixXd observation_matrix(const SatelliteGeometry& g);

/// sqrt(trace((H^T H)^-1)); NumericalError on singular geometry.
double gdop(const Eigen::MatrixXd& h);

/// D_p * E: row for satellite s is E_s - E_pivot, pivot row omitted.
Eigen::MatrixXd dd_geometry(const Eigen::MatrixXd& e, int pivot);

/// Selects the listed rows of a matrix, in order.
Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows);

SatelliteGeometry load_geometry(const std::string& path);
void save_geometry(const SatelliteGeometry& g, const std::string& path);
std::string geometry_to_json(const SatelliteGeometry& g);
SatelliteGeometry geometry_from_json(const std::string& text);

/**
 * @brief Seeded rejection search for a regime fixture.
 *
 * Draws constellations of `total` satellites with consecutive seeds from
 * `first_seed` until the first `common` satellites reach a GDOP within
 * `tol` of `target` and the global pivot lies in that common set.
 */
SatelliteGeometry find_regime_geometry(int common, int total, double target, double tol,
                                       double mask, std::uint64_t first_seed,
                                       std::uint64_t* used_seed = nullptr);

}  // namespace coopdgnss
