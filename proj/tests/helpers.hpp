#pragma once

#include "coopdgnss/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& eng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(eng);
    return m;
}

/// Well-conditioned SPD matrix: A A^T / k + shift I.
inline Eigen::MatrixXd random_spd(std::mt19937_64& eng, Eigen::Index k, double shift = 0.5) {
    if (k == 0) return Eigen::MatrixXd(0, 0);
    const Eigen::MatrixXd a = random_matrix(eng, k, k);
    return a * a.transpose() / static_cast<double>(k) + shift * Eigen::MatrixXd::Identity(k, k);
}

/// Inverse by Gauss-Jordan elimination with partial pivoting; independent of the library path.
inline Eigen::MatrixXd gauss_jordan_inverse(Eigen::MatrixXd a) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index p = c;
        for (Eigen::Index r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
        a.row(c).swap(a.row(p));
        inv.row(c).swap(inv.row(p));
        const double d = a(c, c);
        a.row(c) /= d;
        inv.row(c) /= d;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a(r, c);
            if (f == 0.0) continue;
            a.row(r) -= f * a.row(c);
            inv.row(r) -= f * inv.row(c);
        }
    }
    return inv;
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

inline coopdgnss::SatelliteGeometry sky(int count, std::uint64_t seed) {
    return coopdgnss::generate_constellation(count, 15.0 * std::acos(-1.0) / 180.0, seed);
}

}  // namespace testing
