#pragma once

#include "coopdgnss/bounds.hpp"
#include "coopdgnss/estimators.hpp"
#include "coopdgnss/geometry.hpp"
#include "coopdgnss/netmodel.hpp"
#include "coopdgnss/simulator.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace coopdgnss {

enum class Mode { cdgnss, crtk };
enum class SweepParam { alpha, N_o, K_o, sigma_rho };

std::string to_string(SweepParam p);
std::string to_string(Mode m);

struct GeometrySource {
    std::string fixture;  ///< path (resolved against the config directory) or empty
    std::string builtin;  ///< name of a fixture compiled into the library, or empty
    std::uint64_t seed = 1;
    double mask_deg = 20.0;
};

struct SweepAxis {
    SweepParam param = SweepParam::alpha;
    std::vector<double> values;
};

struct SweepConfig {
    NetworkSpec base;
    std::optional<double> sigma_phi_ratio;  ///< when set, sigma_phi follows sigma_rho
    GeometrySource geometry;
    std::optional<SweepAxis> vary;
    std::optional<SweepAxis> family;  ///< one output file per value
    Mode mode = Mode::cdgnss;
    int trials = 1000;
    std::uint64_t master_seed = 1;
    IntegerMethod ils_method = IntegerMethod::ils;
    int threads = 0;  ///< 0: hardware concurrency
    std::int64_t max_search_nodes = IntegerResolver::kDefaultMaxNodes;
    std::string base_dir = ".";
};

/// Parses the {network, geometry, sweep, montecarlo} document. Unknown keys throw ConfigError.
SweepConfig parse_config(const nlohmann::json& doc, const std::string& base_dir);
nlohmann::json load_config_json(const std::string& path);
nlohmann::json preset_json(const std::string& name);
std::vector<std::string> preset_names();
std::string builtin_fixture(const std::string& name);

/// Geometry named by the config (fixture, builtin, or seeded constellation sized for the sweep).
SatelliteGeometry resolve_geometry(const SweepConfig& cfg);

/// Network spec with one sweep/family parameter applied.
NetworkSpec apply_param(const SweepConfig& cfg, NetworkSpec spec, SweepParam p, double value);

// ==== One network scenario ====

struct TrialOutcome {
    double sq_err = 0.0;        ///< reported solution, first constrained user (m^2)
    double sq_err_float = 0.0;  ///< float solution (crtk)
    double sq_err_fixed = 0.0;  ///< fixed solution (crtk)
    bool success = false;       ///< constrained user's integers exact (crtk)
    bool truncated = false;     ///< integer search hit its node limit
    std::vector<Eigen::Vector3d> user_errors;  ///< reported position error per user
    std::vector<bool> user_success;            ///< per user integer vector exact (crtk)
    int iterations = 0;
    double residual_norm = 0.0;
};

struct ObservationDump {
    std::vector<ObservationSet> sets;  ///< raw, sd and (crtk or K >= 2) dd
};

/**
 * @brief Model matrices, solvers and bounds for one network configuration.
 *
 * Users are ordered constrained cluster first; the reported user is index 0.
 */
class Scenario {
public:
    Scenario(const NetworkSpec& spec, const SatelliteGeometry& geometry, Mode mode, IntegerMethod method,
             std::int64_t max_nodes);

    bool solvable() const { return solvable_; }
    const NetworkLayout& layout() const { return layout_; }
    const SatelliteGeometry& geometry() const { return geom_; }

    double rmse_crb() const { return rmse_crb_; }
    double rmse_noncoop() const { return rmse_noncoop_; }
    double rmse_ideal() const { return rmse_ideal_; }
    double rmse_asymptotic() const { return rmse_asym_; }
    double rmse_fix_crb() const { return rmse_fix_crb_; }

    BoundReport bound_report() const;

    TrialOutcome run_trial(std::uint64_t seed, ObservationDump* dump = nullptr) const;

private:
    NetworkSpec spec_;
    Mode mode_;
    SatelliteGeometry geom_;
    VisibilitySplit split_;
    NetworkLayout layout_;
    bool solvable_ = false;
    int stride_ = 4;

    Eigen::MatrixXd design_;  ///< single-difference H blocks (cdgnss) or DD geometry B (crtk)
    Eigen::MatrixXd cov_;     ///< sd code (cdgnss) or joint [code; phase] DD covariance (crtk)
    Eigen::MatrixXd fim_;
    Eigen::MatrixXd j_c_;
    std::optional<WlsSolver> solver_;      ///< cdgnss WLS or crtk float
    std::optional<WlsSolver> fix_solver_;  ///< crtk fixed
    std::optional<IntegerResolver> resolver_;
    int constrained_dd_ = 0;

    double rmse_crb_ = 0, rmse_noncoop_ = 0, rmse_ideal_ = 0, rmse_asym_ = 0, rmse_fix_crb_ = 0;
};

// ==== Sweeps ====

struct SweepRow {
    std::string swept_param;
    double swept_value = 0.0;
    double rmse_wls = 0.0;
    double rmse_crb = 0.0;
    double rmse_noncoop = 0.0;
    double rmse_ideal = 0.0;
    double rmse_asymptotic = 0.0;
    double success_rate = 0.0;  ///< NaN when not applicable
    int trials = 0;

    // Not serialized.
    bool solvable = true;
    double rmse_float_wls = 0.0;
    double rmse_fixed_wls = 0.0;  ///< over trials whose integers were exact
    double rmse_fix_crb = 0.0;
    int truncated_searches = 0;
};

struct SweepResult {
    std::optional<SweepAxis> family;
    std::vector<double> family_values;    ///< one entry per table (a single NaN without a family)
    std::vector<std::vector<SweepRow>> tables;
};

std::vector<SweepRow> run_cdgnss_sweep(const SweepConfig& cfg);
std::vector<SweepRow> run_crtk_sweep(const SweepConfig& cfg);

/// All family tables of a config; optionally captures trial 0 observations of the first point.
SweepResult run_sweep(const SweepConfig& cfg, ObservationDump* dump = nullptr);

/// Output path for one family member: "<stem>_<param><value><ext>", or `out` without a family.
std::string family_path(const std::string& out, const std::optional<SweepAxis>& family, double value);

// ==== CSV ====

std::string format_number(double v);

std::string sweep_csv(const std::vector<SweepRow>& rows);
void emit_csv(const std::vector<SweepRow>& rows, const std::string& path);
std::vector<SweepRow> parse_csv(const std::string& text);

std::string bounds_csv(const BoundReport& report, int constrained_users);
void emit_bounds_csv(const BoundReport& report, int constrained_users, const std::string& path);

std::string observations_csv(const std::vector<ObservationSet>& sets);

struct SimulationRun {
    std::vector<TrialOutcome> trials;
    Mode mode = Mode::cdgnss;
};

SimulationRun run_simulation(const SweepConfig& cfg);
std::string runs_csv(const SimulationRun& run);

/// Runs f(i) for i in [0, n) on `threads` workers; rethrows the first failure.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

}  // namespace coopdgnss
