#include "coopdgnss/errors.hpp"
#include "coopdgnss/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace coopdgnss {

using json = nlohmann::json;

// Defined in the generated presets source.
const std::map<std::string, std::string>& preset_table();
const std::map<std::string, std::string>& fixture_table();

std::string to_string(SweepParam p) {
    switch (p) {
        case SweepParam::alpha: return "alpha";
        case SweepParam::N_o: return "N_o";
        case SweepParam::K_o: return "K_o";
        case SweepParam::sigma_rho: return "sigma_rho";
    }
    return "?";
}

std::string to_string(Mode m) { return m == Mode::cdgnss ? "cdgnss" : "crtk"; }

namespace {

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
T get(const json& obj, const std::string& where, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

int get_count(const json& obj, const std::string& where, const std::string& key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(where + "." + key + ": expected a non-negative integer");
    return v.get<int>();
}

SweepParam parse_param(const std::string& name) {
    if (name == "alpha") return SweepParam::alpha;
    if (name == "N_o") return SweepParam::N_o;
    if (name == "K_o") return SweepParam::K_o;
    if (name == "sigma_rho") return SweepParam::sigma_rho;
    throw ConfigError("sweep: unknown parameter '" + name + "' (alpha, N_o, K_o, sigma_rho)");
}

void check_axis_values(const SweepAxis& axis, const std::string& where) {
    if (axis.values.empty()) throw ConfigError(where + ": empty range");
    for (double v : axis.values) {
        if (!std::isfinite(v)) throw ConfigError(where + ": non-finite value");
        if ((axis.param == SweepParam::N_o || axis.param == SweepParam::K_o) && (v < 0 || v != std::floor(v)))
            throw ConfigError(where + ": " + to_string(axis.param) + " values must be non-negative integers");
        if (axis.param == SweepParam::alpha && v < 0) throw ConfigError(where + ": alpha must be >= 0");
        if (axis.param == SweepParam::sigma_rho && !(v > 0)) throw ConfigError(where + ": sigma_rho must be > 0");
    }
}

SweepAxis parse_axis(const json& obj, const std::string& where, const std::string& param_key) {
    SweepAxis axis;
    axis.param = parse_param(get<std::string>(obj, where, param_key, ""));
    const bool has_values = obj.contains("values");
    const bool has_range = obj.contains("start") || obj.contains("stop") || obj.contains("steps");
    if (has_values == has_range) throw ConfigError(where + ": give either values or start/stop/steps");
    if (has_values) {
        axis.values = get<std::vector<double>>(obj, where, "values", {});
    } else {
        if (!obj.contains("start") || !obj.contains("stop") || !obj.contains("steps"))
            throw ConfigError(where + ": start, stop and steps are all required");
        const double start = get<double>(obj, where, "start", 0.0);
        const double stop = get<double>(obj, where, "stop", 0.0);
        const int steps = get_count(obj, where, "steps", 0);
        if (steps < 1) throw ConfigError(where + ": steps must be >= 1");
        for (int i = 0; i < steps; ++i)
            axis.values.push_back(steps == 1 ? start : start + (stop - start) * i / (steps - 1));
    }
    check_axis_values(axis, where);
    return axis;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

SweepConfig parse_config(const json& doc, const std::string& base_dir) {
    require_keys(doc, "config", {"network", "geometry", "sweep", "montecarlo"});
    SweepConfig cfg;
    cfg.base_dir = base_dir;

    const json net = doc.value("network", json::object());
    require_keys(net, "network",
                 {"N_c", "N_o", "K_c", "K_o", "alpha", "sigma_rho", "sigma_phi", "sigma_phi_ratio", "lambda", "weighting"});
    NetworkSpec& s = cfg.base;
    s.N_c = get_count(net, "network", "N_c", s.N_c);
    s.N_o = get_count(net, "network", "N_o", s.N_o);
    s.K_c = get_count(net, "network", "K_c", s.K_c);
    s.K_o = get_count(net, "network", "K_o", s.K_o);
    s.alpha = get<double>(net, "network", "alpha", s.alpha);
    s.sigma_rho = get<double>(net, "network", "sigma_rho", s.sigma_rho);
    s.lambda = get<double>(net, "network", "lambda", s.lambda);
    if (net.contains("sigma_phi") && net.contains("sigma_phi_ratio"))
        throw ConfigError("network: give sigma_phi or sigma_phi_ratio, not both");
    if (net.contains("sigma_phi_ratio")) {
        const double ratio = get<double>(net, "network", "sigma_phi_ratio", 0.0);
        if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("network.sigma_phi_ratio: must lie in (0, 1)");
        cfg.sigma_phi_ratio = ratio;
        s.sigma_phi = ratio * s.sigma_rho;
    } else {
        s.sigma_phi = get<double>(net, "network", "sigma_phi", s.sigma_phi);
    }
    const auto weighting = get<std::string>(net, "network", "weighting", "identity");
    if (weighting == "identity") s.weighting = Weighting::identity;
    else if (weighting == "elevation") s.weighting = Weighting::elevation;
    else throw ConfigError("network.weighting: expected identity or elevation");
    s.validate();

    const json geo = doc.value("geometry", json::object());
    require_keys(geo, "geometry", {"fixture", "builtin", "seed", "mask_deg"});
    cfg.geometry.fixture = get<std::string>(geo, "geometry", "fixture", "");
    cfg.geometry.builtin = get<std::string>(geo, "geometry", "builtin", "");
    if (!cfg.geometry.fixture.empty() && !cfg.geometry.builtin.empty())
        throw ConfigError("geometry: give fixture or builtin, not both");
    if (geo.contains("seed")) {
        if (!geo.at("seed").is_number_unsigned()) throw ConfigError("geometry.seed: expected a non-negative integer");
        cfg.geometry.seed = geo.at("seed").get<std::uint64_t>();
    }
    cfg.geometry.mask_deg = get<double>(geo, "geometry", "mask_deg", cfg.geometry.mask_deg);
    if (!(cfg.geometry.mask_deg >= 0.0 && cfg.geometry.mask_deg < 90.0))
        throw ConfigError("geometry.mask_deg: must lie in [0, 90)");
    if (!cfg.geometry.builtin.empty() && !fixture_table().count(cfg.geometry.builtin))
        throw ConfigError("geometry.builtin: unknown fixture '" + cfg.geometry.builtin + "'");

    if (doc.contains("sweep")) {
        const json& sw = doc.at("sweep");
        require_keys(sw, "sweep", {"vary", "start", "stop", "steps", "values", "family"});
        json axis = sw;
        axis.erase("family");
        cfg.vary = parse_axis(axis, "sweep", "vary");
        if (sw.contains("family")) {
            require_keys(sw.at("family"), "sweep.family", {"param", "values"});
            cfg.family = parse_axis(sw.at("family"), "sweep.family", "param");
            if (cfg.family->param == cfg.vary->param) throw ConfigError("sweep.family: must differ from the swept parameter");
        }
    }

    const json mc = doc.value("montecarlo", json::object());
    require_keys(mc, "montecarlo", {"mode", "trials", "master_seed", "ils_method", "threads", "max_search_nodes"});
    const auto mode = get<std::string>(mc, "montecarlo", "mode", "cdgnss");
    if (mode == "cdgnss") cfg.mode = Mode::cdgnss;
    else if (mode == "crtk") cfg.mode = Mode::crtk;
    else throw ConfigError("montecarlo.mode: expected cdgnss or crtk");
    cfg.trials = get_count(mc, "montecarlo", "trials", cfg.trials);
    if (cfg.trials < 1) throw ConfigError("montecarlo.trials: must be >= 1");
    if (mc.contains("master_seed")) {
        if (!mc.at("master_seed").is_number_unsigned()) throw ConfigError("montecarlo.master_seed: expected a non-negative integer");
        cfg.master_seed = mc.at("master_seed").get<std::uint64_t>();
    }
    const auto method = get<std::string>(mc, "montecarlo", "ils_method", "ils");
    if (method == "round") cfg.ils_method = IntegerMethod::round;
    else if (method == "bootstrap") cfg.ils_method = IntegerMethod::bootstrap;
    else if (method == "ils") cfg.ils_method = IntegerMethod::ils;
    else throw ConfigError("montecarlo.ils_method: expected round, bootstrap or ils");
    cfg.threads = get_count(mc, "montecarlo", "threads", cfg.threads);
    if (mc.contains("max_search_nodes")) {
        const auto& v = mc.at("max_search_nodes");
        if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError("montecarlo.max_search_nodes: expected a positive integer");
        cfg.max_search_nodes = v.get<std::int64_t>();
    }

    // Every point of the grid must give a valid network.
    std::vector<double> vary_vals = cfg.vary ? cfg.vary->values : std::vector<double>{NAN};
    std::vector<double> fam_vals = cfg.family ? cfg.family->values : std::vector<double>{NAN};
    for (double f : fam_vals)
        for (double v : vary_vals) {
            NetworkSpec p = cfg.base;
            if (cfg.family) p = apply_param(cfg, p, cfg.family->param, f);
            if (cfg.vary) p = apply_param(cfg, p, cfg.vary->param, v);
            p.validate();
        }
    return cfg;
}

NetworkSpec apply_param(const SweepConfig& cfg, NetworkSpec spec, SweepParam p, double value) {
    switch (p) {
        case SweepParam::alpha: spec.alpha = value; break;
        case SweepParam::N_o: spec.N_o = static_cast<int>(value); break;
        case SweepParam::K_o: spec.K_o = static_cast<int>(value); break;
        case SweepParam::sigma_rho:
            spec.sigma_rho = value;
            if (cfg.sigma_phi_ratio) spec.sigma_phi = *cfg.sigma_phi_ratio * value;
            break;
    }
    return spec;
}

json load_config_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& ex) {
        throw ConfigError("'" + path + "': " + ex.what());
    }
}

json preset_json(const std::string& name) {
    const auto& table = preset_table();
    const auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown preset '" + name + "'");
    return json::parse(it->second);
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [name, body] : preset_table()) out.push_back(name);
    return out;
}

std::string builtin_fixture(const std::string& name) {
    const auto& table = fixture_table();
    const auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown builtin fixture '" + name + "'");
    return it->second;
}

SatelliteGeometry resolve_geometry(const SweepConfig& cfg) {
    int needed = cfg.base.satellites();
    const auto grow = [&](const std::optional<SweepAxis>& axis) {
        if (axis && axis->param == SweepParam::K_o)
            for (double v : axis->values) needed = std::max(needed, cfg.base.K_c + static_cast<int>(v));
    };
    grow(cfg.vary);
    grow(cfg.family);

    SatelliteGeometry g;
    if (!cfg.geometry.builtin.empty()) {
        g = geometry_from_json(builtin_fixture(cfg.geometry.builtin));
    } else if (!cfg.geometry.fixture.empty()) {
        std::filesystem::path p(cfg.geometry.fixture);
        if (p.is_relative()) p = std::filesystem::path(cfg.base_dir) / p;
        g = load_geometry(p.string());
    } else {
        g = generate_constellation(needed, cfg.geometry.mask_deg * std::acos(-1.0) / 180.0, cfg.geometry.seed);
    }
    if (g.size() < needed)
        throw ConfigError("geometry provides " + std::to_string(g.size()) + " satellites, the configuration needs " +
                          std::to_string(needed));
    return g;
}

}  // namespace coopdgnss
