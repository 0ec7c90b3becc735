#include "ste/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ste {

namespace {

using json = nlohmann::json;

constexpr int kConfigVersion = 1;

double deg2rad(double deg) { return deg * pi / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / pi; }

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
    throw Error(Errc::InvalidArgument, "config", path + ": " + what);
}

const json& require(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object() || !obj.contains(key))
        config_error(path + "." + key, "missing field");
    return obj.at(key);
}

double require_number(const json& obj, const std::string& path, const char* key) {
    const json& v = require(obj, path, key);
    if (!v.is_number()) config_error(path + "." + key, "expected a number");
    return v.get<double>();
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ArrayLayout layout_from_json(const json& j, const std::string& path) {
    const json& kind_j = require(j, path, "kind");
    if (!kind_j.is_string()) config_error(path + ".kind", "expected \"dipole\" or \"loop\"");
    const std::string kind_s = kind_j.get<std::string>();
    TriadKind kind;
    if (kind_s == "dipole")
        kind = TriadKind::DipoleTriad;
    else if (kind_s == "loop")
        kind = TriadKind::LoopTriad;
    else
        config_error(path + ".kind", "expected \"dipole\" or \"loop\"");

    const double dy = require_number(j, path, "delta_y");
    const double dx = require_number(j, path, "delta_x");
    if (j.contains("d1") || j.contains("d2"))
        return make_layout_from_spacings(kind, dy, dx, require_number(j, path, "d1"),
                                         require_number(j, path, "d2"));
    const double m1 = require_number(j, path, "m1");
    const double m2 = require_number(j, path, "m2");
    if (m1 != std::floor(m1) || m2 != std::floor(m2))
        config_error(path + ".m1", "m1/m2 must be integers");
    return make_layout(kind, dy, dx, static_cast<int>(m1), static_cast<int>(m2));
}

}  // namespace

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::InvalidArgument, "config", std::string("JSON parse error: ") + e.what());
    }
    const std::string root = "config";
    const double version = require_number(j, root, "version");
    if (version != kConfigVersion) config_error(root + ".version", "unsupported schema version");

    Scenario s;
    s.layout = layout_from_json(require(j, root, "layout"), root + ".layout");

    const json& sources = require(j, root, "sources");
    if (!sources.is_array() || sources.empty())
        config_error(root + ".sources", "expected a non-empty array");
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const std::string path = root + ".sources[" + std::to_string(i) + "]";
        const json& sj = sources.at(i);
        SourceTruth src;
        src.params.theta1 = deg2rad(require_number(sj, path, "theta1_deg"));
        src.params.theta2 = deg2rad(require_number(sj, path, "theta2_deg"));
        src.params.theta3 = deg2rad(require_number(sj, path, "theta3_deg"));
        src.params.theta4 = deg2rad(require_number(sj, path, "theta4_deg"));
        src.digital_frequency = require_number(sj, path, "frequency");
        if (sj.contains("initial_phase_deg"))
            src.initial_phase = deg2rad(require_number(sj, path, "initial_phase_deg"));
        s.sources.push_back(std::move(src));
    }

    const double snapshots = require_number(j, root, "snapshots");
    if (snapshots != std::floor(snapshots) || snapshots < 1)
        config_error(root + ".snapshots", "expected a positive integer");
    s.snapshots = static_cast<int>(snapshots);

    s.noiseless = j.value("noiseless", false);
    if (!s.noiseless) s.snr_db = require_number(j, root, "snr_db");
    else s.snr_db = j.value("snr_db", 0.0);

    const json& seed = require(j, root, "seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer())
        config_error(root + ".seed", "expected an integer");
    s.seed = seed.get<std::uint64_t>();

    return resolve_wavelengths(s);
}

std::string scenario_to_json(const Scenario& scenario) {
    json layout = {
        {"kind", scenario.layout.kind == TriadKind::DipoleTriad ? "dipole" : "loop"},
        {"delta_y", scenario.layout.delta_y},
        {"delta_x", scenario.layout.delta_x},
        {"m1", scenario.layout.m1},
        {"m2", scenario.layout.m2},
        {"d1", scenario.layout.d1()},
        {"d2", scenario.layout.d2()},
    };
    json sources = json::array();
    for (const auto& src : scenario.sources) {
        json sj = {
            {"theta1_deg", rad2deg(src.params.theta1)},
            {"theta2_deg", rad2deg(src.params.theta2)},
            {"theta3_deg", rad2deg(src.params.theta3)},
            {"theta4_deg", rad2deg(src.params.theta4)},
            {"frequency", src.digital_frequency},
            {"wavelength", src.params.wavelength},
        };
        if (src.initial_phase) sj["initial_phase_deg"] = rad2deg(*src.initial_phase);
        sources.push_back(std::move(sj));
    }
    json j = {
        {"version", kConfigVersion},
        {"layout", std::move(layout)},
        {"sources", std::move(sources)},
        {"snapshots", scenario.snapshots},
        {"snr_db", scenario.snr_db},
        {"noiseless", scenario.noiseless},
        {"seed", scenario.seed},
    };
    return j.dump(2) + "\n";
}

std::string estimation_result_to_json(const EstimationResult& result) {
    json sources = json::array();
    for (const auto& s : result.sources) {
        sources.push_back({
            {"theta1_deg", rad2deg(s.theta1)},
            {"theta2_deg", rad2deg(s.theta2)},
            {"theta3_deg", rad2deg(s.theta3)},
            {"theta4_deg", rad2deg(s.theta4)},
            {"u_x", s.u_x_final},
            {"u_y", s.u_y_final},
            {"u_x_fine", s.u_x_fine},
            {"u_y_fine", s.u_y_fine},
            {"u_x_coarse", s.u_x_coarse},
            {"u_y_coarse", s.u_y_coarse},
            {"coarse",
             {{"theta1_deg", rad2deg(s.coarse.theta1)},
              {"theta2_deg", rad2deg(s.coarse.theta2)},
              {"theta3_deg", rad2deg(s.coarse.theta3)},
              {"theta4_deg", rad2deg(s.coarse.theta4)}}},
            {"wavelength", s.wavelength},
            {"paired_index", s.paired_index},
            {"n_y", s.n_y},
            {"n_x", s.n_x},
            {"zenith_degenerate", s.zenith_degenerate},
        });
    }
    json j = {{"sources", std::move(sources)}};
    json eigs = json::array();
    for (Eigen::Index i = 0; i < result.signal_eigenvalues.size(); ++i)
        eigs.push_back(result.signal_eigenvalues(i));
    j["signal_eigenvalues"] = std::move(eigs);
    if (!result.estimated_frequencies.empty())
        j["estimated_frequencies"] = result.estimated_frequencies;
    return j.dump(2) + "\n";
}

std::string error_to_json(const Error& err) {
    json j = {{"error",
               {{"code", to_string(err.code())}, {"stage", err.stage()}, {"message", err.what()}}}};
    return j.dump(2) + "\n";
}

std::string sweep_spec_to_json(const SweepSpec& spec) {
    json j = {
        {"param", spec.param == SweepParam::SnrDb ? "snr" : "spacing"},
        {"grid", spec.grid},
        {"trials", spec.trials},
        {"snapshots", spec.snapshots},
        {"master_seed", spec.master_seed},
        {"wavelength_mode",
         spec.mode.kind == WavelengthMode::Kind::Known ? "known" : "estimate"},
        {"base_scenario", json::parse(scenario_to_json(spec.base))},
    };
    return j.dump(2) + "\n";
}

std::string snapshots_to_csv(const Eigen::Ref<const CMat>& y) {
    std::string out;
    for (Eigen::Index m = 0; m < y.cols(); ++m) {
        if (m > 0) out += ',';
        out += "m" + std::to_string(m) + "_re,m" + std::to_string(m) + "_im";
    }
    out += '\n';
    for (Eigen::Index row = 0; row < y.rows(); ++row) {
        for (Eigen::Index m = 0; m < y.cols(); ++m) {
            if (m > 0) out += ',';
            out += fmt17(y(row, m).real());
            out += ',';
            out += fmt17(y(row, m).imag());
        }
        out += '\n';
    }
    return out;
}

CMat snapshots_from_csv(const std::string& text) {
    constexpr const char* stage = "snapshots_from_csv";
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("m0_re", 0) == 0) continue;  // header row
        }
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ls, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(Errc::IoFailure, stage, "non-numeric cell: " + cell);
            }
        }
        rows.push_back(std::move(vals));
    }
    if (rows.size() != 9) throw Error(Errc::IoFailure, stage, "expected 9 antenna rows");
    const std::size_t w = rows[0].size();
    if (w == 0 || w % 2 != 0)
        throw Error(Errc::IoFailure, stage, "expected re/im interleaved columns");
    for (const auto& r : rows)
        if (r.size() != w) throw Error(Errc::IoFailure, stage, "ragged rows");
    CMat y(9, static_cast<Eigen::Index>(w / 2));
    for (std::size_t r = 0; r < 9; ++r)
        for (std::size_t m = 0; m < w / 2; ++m)
            y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m)) =
                cxd(rows[r][2 * m], rows[r][2 * m + 1]);
    if (!y.allFinite()) throw Error(Errc::IoFailure, stage, "non-finite sample");
    return y;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, "read_file", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw Error(Errc::IoFailure, "read_file", "read failed: " + path);
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoFailure, "write_file", "cannot open " + path);
    out << contents;
    if (!out.good()) throw Error(Errc::IoFailure, "write_file", "write failed: " + path);
}

}  // namespace ste
