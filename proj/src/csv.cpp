#include "coopdgnss/errors.hpp"
#include "coopdgnss/experiments.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace coopdgnss {

namespace {

const char* const kSweepHeader =
    "swept_param,swept_value,rmse_wls_m,rmse_crb_m,rmse_noncoop_m,rmse_ideal_m,rmse_asymptotic_m,success_rate,trials";

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

double parse_number(const std::string& field) {
    if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw std::runtime_error("csv: bad number '" + field + "'");
    return v;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

// Shortest representation that parses back to the same double; NaN is an empty field.
std::string format_number(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << kSweepHeader << '\n';
    for (const auto& r : rows)
        out << r.swept_param << ',' << format_number(r.swept_value) << ',' << format_number(r.rmse_wls) << ','
            << format_number(r.rmse_crb) << ',' << format_number(r.rmse_noncoop) << ',' << format_number(r.rmse_ideal)
            << ',' << format_number(r.rmse_asymptotic) << ',' << format_number(r.success_rate) << ',' << r.trials << '\n';
    return out.str();
}

void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) { write_file(path, sweep_csv(rows)); }

std::vector<SweepRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split_fields(line) != split_fields(kSweepHeader))
        throw std::runtime_error("csv: unexpected header");
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 9) throw std::runtime_error("csv: expected 9 fields");
        SweepRow r;
        r.swept_param = f[0];
        r.swept_value = parse_number(f[1]);
        r.rmse_wls = parse_number(f[2]);
        r.rmse_crb = parse_number(f[3]);
        r.rmse_noncoop = parse_number(f[4]);
        r.rmse_ideal = parse_number(f[5]);
        r.rmse_asymptotic = parse_number(f[6]);
        r.success_rate = parse_number(f[7]);
        r.trials = static_cast<int>(parse_number(f[8]));
        r.solvable = r.trials > 0;
        rows.push_back(r);
    }
    return rows;
}

std::string bounds_csv(const BoundReport& report, int constrained_users) {
    std::ostringstream out;
    out << "kind,user,rmse_m,crb_ee_m2,crb_en_m2,crb_eu_m2,crb_nn_m2,crb_nu_m2,crb_uu_m2\n";
    for (std::size_t u = 0; u < report.crb_user_blocks.size(); ++u) {
        const auto& c = report.crb_user_blocks[u];
        out << (static_cast<int>(u) < constrained_users ? "constrained" : "aiding") << ',' << u + 1 << ','
            << format_number(report.rmse_per_user[u]) << ',' << format_number(c(0, 0)) << ',' << format_number(c(0, 1))
            << ',' << format_number(c(0, 2)) << ',' << format_number(c(1, 1)) << ',' << format_number(c(1, 2)) << ','
            << format_number(c(2, 2)) << '\n';
    }
    out << "noncoop,," << format_number(report.benchmark_noncoop) << ",,,,,,\n";
    out << "ideal,," << format_number(report.benchmark_ideal) << ",,,,,,\n";
    out << "asymptotic,," << format_number(report.benchmark_asymptotic) << ",,,,,,\n";
    return out.str();
}

void emit_bounds_csv(const BoundReport& report, int constrained_users, const std::string& path) {
    write_file(path, bounds_csv(report, constrained_users));
}

std::string observations_csv(const std::vector<ObservationSet>& sets) {
    std::ostringstream out;
    out << "level,receiver,satellite,code_m,phase_m\n";
    for (const auto& s : sets) {
        const char* level = s.level == Level::raw ? "raw" : s.level == Level::sd ? "sd" : "dd";
        const Eigen::VectorXd code = s.total_code();
        const Eigen::VectorXd phase = s.total_phase();
        const auto rows = s.rows();
        for (std::size_t i = 0; i < rows.size(); ++i)
            out << level << ',' << rows[i].first << ',' << rows[i].second << ',' << format_number(code(i)) << ','
                << format_number(phase(i)) << '\n';
    }
    return out.str();
}

std::string runs_csv(const SimulationRun& run) {
    std::ostringstream out;
    out << "trial,user,err_e_m,err_n_m,err_u_m,err_3d_m,success,truncated,iterations,residual_norm_m\n";
    for (std::size_t t = 0; t < run.trials.size(); ++t) {
        const auto& o = run.trials[t];
        for (std::size_t u = 0; u < o.user_errors.size(); ++u) {
            const auto& e = o.user_errors[u];
            out << t << ',' << u + 1 << ',' << format_number(e(0)) << ',' << format_number(e(1)) << ','
                << format_number(e(2)) << ',' << format_number(e.norm()) << ',';
            if (run.mode == Mode::crtk) out << (o.user_success[u] ? 1 : 0);
            out << ',' << (o.truncated ? 1 : 0) << ',' << o.iterations << ',' << format_number(o.residual_norm) << '\n';
        }
    }
    return out.str();
}

}  // namespace coopdgnss
