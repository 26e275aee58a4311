#include "coopdgnss/geometry.hpp"

#include "coopdgnss/errors.hpp"
#include "coopdgnss/linalg.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace coopdgnss {

using json = nlohmann::json;

void SatelliteGeometry::validate(double mask) const {
    if (los.empty()) throw DimensionError("geometry: no satellites");
    if (elevations.size() != los.size()) throw DimensionError("geometry: elevation count mismatch");
    if (pivot < 0 || pivot >= size()) throw DimensionError("geometry: pivot out of range");
    for (int s = 0; s < size(); ++s) {
        if (std::abs(los[s].norm() - 1.0) > 1e-12)
            throw DimensionError("geometry: line-of-sight vector " + std::to_string(s) + " is not unit length");
        if (elevations[s] < mask) throw DimensionError("geometry: satellite below mask");
    }
}

SatelliteGeometry SatelliteGeometry::prefix(int count) const {
    if (count < 1 || count > size()) throw DimensionError("geometry: prefix size out of range");
    SatelliteGeometry out;
    out.los.assign(los.begin(), los.begin() + count);
    out.elevations.assign(elevations.begin(), elevations.begin() + count);
    if (pivot < count) {
        out.pivot = pivot;
    } else {
        out.pivot = static_cast<int>(std::max_element(out.elevations.begin(), out.elevations.end()) -
                                     out.elevations.begin());
    }
    return out;
}

VisibilitySplit make_split(int common_count, int exclusive_count) {
    if (common_count < 1 || exclusive_count < 0) throw ConfigError("visibility split: need K_c >= 1, K_o >= 0");
    VisibilitySplit v;
    for (int s = 0; s < common_count; ++s) v.common.push_back(s);
    for (int s = 0; s < exclusive_count; ++s) v.exclusive.push_back(common_count + s);
    return v;
}

int common_pivot(const SatelliteGeometry& g, const VisibilitySplit& split) {
    if (split.common.empty()) throw DimensionError("common pivot: empty common set");
    if (std::find(split.common.begin(), split.common.end(), g.pivot) != split.common.end()) return g.pivot;
    int best = split.common.front();
    for (int s : split.common)
        if (g.elevations.at(s) > g.elevations.at(best)) best = s;
    return best;
}

SatelliteGeometry generate_constellation(int count, double mask, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> az_dist(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> el_dist(mask, std::numbers::pi / 2.0);
    SatelliteGeometry g;
    for (int s = 0; s < count; ++s) {
        const double az = az_dist(eng);
        const double el = el_dist(eng);
        Eigen::Vector3d u(std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el));
        g.los.push_back(u.normalized());
        g.elevations.push_back(el);
    }
    g.pivot = static_cast<int>(std::max_element(g.elevations.begin(), g.elevations.end()) - g.elevations.begin());
    return g;
}

Eigen::MatrixXd geometry_matrix(const SatelliteGeometry& g) {
    Eigen::MatrixXd e(g.size(), 3);
    for (int s = 0; s < g.size(); ++s) e.row(s) = -g.los[s].transpose();
    return e;
}

Eigen::MatrixXd observation_matrix(const SatelliteGeometry& g) {
    Eigen::MatrixXd h(g.size(), 4);
    h.leftCols(3) = geometry_matrix(g);
    h.col(3).setOnes();
    return h;
}

double gdop(const Eigen::MatrixXd& h) {
    const Eigen::MatrixXd n = h.transpose() * h;
    if (condition_number(n) > kConditionLimit) throw NumericalError("gdop: singular geometry");
    return std::sqrt(n.inverse().trace());
}

Eigen::MatrixXd dd_geometry(const Eigen::MatrixXd& e, int pivot) {
    if (e.rows() < 2) throw DimensionError("dd_geometry: need at least two satellites");
    if (pivot < 0 || pivot >= e.rows()) throw DimensionError("dd_geometry: pivot out of range");
    Eigen::MatrixXd out(e.rows() - 1, e.cols());
    Eigen::Index row = 0;
    for (Eigen::Index s = 0; s < e.rows(); ++s) {
        if (s == pivot) continue;
        out.row(row++) = e.row(s) - e.row(pivot);
    }
    return out;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

std::string geometry_to_json(const SatelliteGeometry& g) {
    json j;
    j["los"] = json::array();
    for (const auto& u : g.los) j["los"].push_back({u.x(), u.y(), u.z()});
    j["elevations_rad"] = g.elevations;
    j["pivot"] = g.pivot;
    return j.dump(2);
}

SatelliteGeometry geometry_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("geometry fixture: ") + ex.what());
    }
    if (!j.is_object()) throw ConfigError("geometry fixture: expected an object");
    for (const auto& [key, value] : j.items())
        if (key != "los" && key != "elevations_rad" && key != "pivot")
            throw ConfigError("geometry fixture: unknown key '" + key + "'");
    SatelliteGeometry g;
    try {
        for (const auto& v : j.at("los")) {
            if (v.size() != 3) throw ConfigError("geometry fixture: los entries need 3 components");
            g.los.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
        }
        g.elevations = j.at("elevations_rad").get<std::vector<double>>();
        g.pivot = j.at("pivot").get<int>();
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("geometry fixture: ") + ex.what());
    }
    try {
        g.validate();
    } catch (const DimensionError& ex) {
        throw ConfigError(ex.what());
    }
    return g;
}

SatelliteGeometry load_geometry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open geometry fixture '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return geometry_from_json(ss.str());
}

void save_geometry(const SatelliteGeometry& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write geometry fixture '" + path + "'");
    out << geometry_to_json(g) << '\n';
}

SatelliteGeometry find_regime_geometry(int common, int total, double target, double tol, double mask,
                                       std::uint64_t first_seed, std::uint64_t* used_seed) {
    if (common < 4 || total < common) throw ConfigError("regime search: need 4 <= common <= total");
    for (std::uint64_t seed = first_seed; seed < first_seed + 10'000'000; ++seed) {
        SatelliteGeometry g = generate_constellation(total, mask, seed);
        if (g.pivot >= common) continue;
        const Eigen::MatrixXd h = observation_matrix(g.prefix(common));
        double value = 0.0;
        try {
            value = gdop(h);
        } catch (const NumericalError&) {
            continue;
        }
        if (std::abs(value - target) <= tol) {
            if (used_seed) *used_seed = seed;
            return g;
        }
    }
    throw NumericalError("regime search: no geometry found");
}

}  // namespace coopdgnss
