// SPDX-License-Identifier: Apache-2.0

#include "uaris/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "uaris/csv.hpp"

namespace uaris {

const char* to_string(SweepVar s) {
    switch (s) {
        case SweepVar::DSr: return "d_sr";
        case SweepVar::Xi: return "xi";
        case SweepVar::PTotal: return "p_total";
        case SweepVar::M: return "M";
        default: return "none";
    }
}

double dbm_to_w(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

long to_long(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d != std::floor(d)) throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return static_cast<long>(d);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const unsigned long long u = std::stoull(v, &used);
        if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
}

Position3D to_position(const std::string& key, const std::string& v) {
    const auto parts = split(v, ',');
    if (parts.size() != 3) throw ConfigError("key '" + key + "': expected x,y,z");
    return {to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])};
}

std::vector<Position3D> to_positions(const std::string& key, const std::string& v) {
    std::vector<Position3D> out;
    for (const auto& p : split(v, ';'))
        if (!p.empty()) out.push_back(to_position(key, p));
    if (out.empty()) throw ConfigError("key '" + key + "': expected at least one position");
    return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& p : split(v, ','))
        if (!p.empty()) out.push_back(to_double(key, p));
    return out;
}

Eigen::Vector3d to_axis(const std::string& key, const std::string& v) {
    const Position3D p = to_position(key, v);
    Eigen::Vector3d a = p.vec();
    if (!(a.norm() > 0)) throw ConfigError("key '" + key + "': axis must be non-zero");
    return a.normalized();
}

std::string pos_str(const Position3D& p) {
    return format_double(p.x) + "," + format_double(p.y) + "," + format_double(p.z);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> m = {
        {"freq_khz", [](auto& c, auto& k, auto& v) { c.params.freq_khz = to_double(k, v); }},
        {"prop_factor", [](auto& c, auto& k, auto& v) { c.params.prop_factor = to_double(k, v); }},
        {"seabed_reflection", [](auto& c, auto& k, auto& v) { c.params.seabed_reflection = to_double(k, v); }},
        {"bg_noise_dbm", [](auto& c, auto& k, auto& v) { c.params.bg_noise_power = dbm_to_w(to_double(k, v)); }},
        {"bg_noise_w", [](auto& c, auto& k, auto& v) { c.params.bg_noise_power = to_double(k, v); }},
        {"an_base_dbm", [](auto& c, auto& k, auto& v) { c.params.an_base_power = dbm_to_w(to_double(k, v)); }},
        {"an_base_w", [](auto& c, auto& k, auto& v) { c.params.an_base_power = to_double(k, v); }},
        {"sample_interval_s", [](auto& c, auto& k, auto& v) { c.params.sample_interval_s = to_double(k, v); }},
        {"n_samples", [](auto& c, auto& k, auto& v) { c.params.n_samples = static_cast<int>(to_long(k, v)); }},
        {"sound_speed_mps", [](auto& c, auto& k, auto& v) { c.geom.sound_speed_mps = to_double(k, v); }},
        {"seabed_depth_m", [](auto& c, auto& k, auto& v) { c.geom.seabed_depth_m = to_double(k, v); }},
        {"pos_source", [](auto& c, auto& k, auto& v) { c.geom.source = to_position(k, v); }},
        {"pos_uaris", [](auto& c, auto& k, auto& v) { c.geom.uaris = to_position(k, v); }},
        {"pos_receivers",
         [](auto& c, auto& k, auto& v) {
             c.geom.receivers = to_positions(k, v);
             c.explicit_receivers = true;
         }},
        {"pos_eavesdroppers",
         [](auto& c, auto& k, auto& v) {
             c.geom.eavesdroppers = to_positions(k, v);
             c.explicit_eavesdroppers = true;
         }},
        {"source_array_axis", [](auto& c, auto& k, auto& v) { c.geom.source_array_axis = to_axis(k, v); }},
        {"uaris_array_axis", [](auto& c, auto& k, auto& v) { c.geom.uaris_array_axis = to_axis(k, v); }},
        {"n_antennas", [](auto& c, auto& k, auto& v) { c.dims.T = static_cast<int>(to_long(k, v)); }},
        {"n_elements", [](auto& c, auto& k, auto& v) { c.dims.M = static_cast<int>(to_long(k, v)); }},
        {"n_receivers", [](auto& c, auto& k, auto& v) { c.dims.K = static_cast<int>(to_long(k, v)); }},
        {"n_eavesdroppers", [](auto& c, auto& k, auto& v) { c.dims.J = static_cast<int>(to_long(k, v)); }},
        {"d_sr_m", [](auto& c, auto& k, auto& v) { c.d_sr_m = to_double(k, v); }},
        {"d_er_m", [](auto& c, auto& k, auto& v) { c.d_er_m = to_double(k, v); }},
        {"rn_sphere_radius_m", [](auto& c, auto& k, auto& v) { c.rn_sphere_radius_m = to_double(k, v); }},
        {"rn_center_depth_m", [](auto& c, auto& k, auto& v) { c.rn_center_depth_m = to_double(k, v); }},
        {"rn_bearing_offset_deg", [](auto& c, auto& k, auto& v) { c.rn_bearing_offset_deg = to_double(k, v); }},
        {"rn_placement",
         [](auto& c, auto& k, auto& v) {
             if (v == "random")
                 c.rn_placement = Placement::Random;
             else if (v == "even")
                 c.rn_placement = Placement::Even;
             else
                 throw ConfigError("key '" + k + "': expected random or even");
         }},
        {"xi", [](auto& c, auto& k, auto& v) { c.xi = to_double(k, v); }},
        {"p_total_dbm", [](auto& c, auto& k, auto& v) { c.p_total_dbm = to_double(k, v); }},
        {"power_split",
         [](auto& c, auto& k, auto& v) {
             const auto d = to_doubles(k, v);
             if (d.size() != 2) throw ConfigError("key '" + k + "': expected source,uaris fractions");
             c.source_fraction = d[0];
             c.uaris_fraction = d[1];
         }},
        {"fp_form", [](auto& c, auto&, auto& v) { c.fp_form = fp_form_from_string(v); }},
        {"max_iters", [](auto& c, auto& k, auto& v) { c.solver.max_iters = static_cast<int>(to_long(k, v)); }},
        {"rel_tol", [](auto& c, auto& k, auto& v) { c.solver.rel_tol = to_double(k, v); }},
        {"mu_tol", [](auto& c, auto& k, auto& v) { c.solver.mu_tol = to_double(k, v); }},
        {"qcqp_tol", [](auto& c, auto& k, auto& v) { c.solver.qcqp_tol = to_double(k, v); }},
        {"joint_eta_theta",
         [](auto& c, auto& k, auto& v) {
             if (v == "true")
                 c.solver.joint_eta_theta = true;
             else if (v == "false")
                 c.solver.joint_eta_theta = false;
             else
                 throw ConfigError("key '" + k + "': expected true or false");
         }},
        {"sweep",
         [](auto& c, auto& k, auto& v) {
             static const std::map<std::string, SweepVar> names = {{"none", SweepVar::None},
                                                                   {"d_sr", SweepVar::DSr},
                                                                   {"xi", SweepVar::Xi},
                                                                   {"p_total", SweepVar::PTotal},
                                                                   {"M", SweepVar::M}};
             const auto it = names.find(v);
             if (it == names.end()) throw ConfigError("key '" + k + "': expected none, d_sr, xi, p_total or M");
             c.sweep = it->second;
         }},
        {"sweep_values", [](auto& c, auto& k, auto& v) { c.sweep_values = to_doubles(k, v); }},
        {"trials", [](auto& c, auto& k, auto& v) { c.trials = static_cast<int>(to_long(k, v)); }},
        {"variants",
         [](auto& c, auto&, auto& v) {
             c.variants.clear();
             for (const auto& s : split(v, ',')) c.variants.push_back(variant_from_string(s));
         }},
        {"root_seed", [](auto& c, auto& k, auto& v) { c.root_seed = to_u64(k, v); }},
        {"workers", [](auto& c, auto& k, auto& v) { c.workers = static_cast<int>(to_long(k, v)); }},
        {"output_dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
        {"sbl_resolution", [](auto& c, auto& k, auto& v) { c.sbl_resolution = static_cast<int>(to_long(k, v)); }},
        {"sbl_region_m", [](auto& c, auto& k, auto& v) { c.sbl_region_m = to_double(k, v); }},
        {"sbl_score",
         [](auto& c, auto& k, auto& v) {
             if (v == "eigen")
                 c.sbl_normalize = false;
             else if (v == "normalized")
                 c.sbl_normalize = true;
             else
                 throw ConfigError("key '" + k + "': expected eigen or normalized");
         }},
        {"ellipsoid_estimates",
         [](auto& c, auto& k, auto& v) { c.ellipsoid_estimates = static_cast<int>(to_long(k, v)); }},
    };
    return m;
}

}  // namespace

double ExperimentConfig::p_total_w() const { return dbm_to_w(p_total_dbm); }

ObjectiveWeights ExperimentConfig::weights(double sweep_value) const {
    ObjectiveWeights w;
    w.xi = xi;
    double pt = p_total_w();
    if (!std::isnan(sweep_value)) {
        if (sweep == SweepVar::Xi) w.xi = sweep_value;
        if (sweep == SweepVar::PTotal) pt = dbm_to_w(sweep_value);
    }
    w.p_s_max = source_fraction * pt;
    w.p_u_max = uaris_fraction * pt;
    w.bg_noise = params.bg_noise_power;
    w.form = fp_form;
    return w;
}

void ExperimentConfig::validate() const {
    try {
        params.validate();
        dims.validate();
        solver.validate();
        weights(std::numeric_limits<double>::quiet_NaN()).validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (!(geom.seabed_depth_m > 0) || !(geom.sound_speed_mps > 0))
        throw ConfigError("seabed depth and sound speed must be positive");
    if (explicit_receivers && static_cast<int>(geom.receivers.size()) != dims.K)
        throw ConfigError("pos_receivers count must equal n_receivers");
    if (explicit_eavesdroppers && static_cast<int>(geom.eavesdroppers.size()) != dims.J)
        throw ConfigError("pos_eavesdroppers count must equal n_eavesdroppers");
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (variants.empty()) throw ConfigError("at least one variant is required");
    if (std::abs(source_fraction + uaris_fraction - 1.0) > 1e-9) throw ConfigError("power_split must sum to 1");
    if (!(source_fraction > 0 && uaris_fraction > 0)) throw ConfigError("power_split fractions must be positive");
    if (sweep != SweepVar::None && sweep_values.empty()) throw ConfigError("sweep_values required for a sweep");
    if (!std::is_sorted(sweep_values.begin(), sweep_values.end()) ||
        std::adjacent_find(sweep_values.begin(), sweep_values.end()) != sweep_values.end())
        throw ConfigError("sweep_values must be strictly ascending");
    if (sweep == SweepVar::M)
        for (double v : sweep_values)
            if (v < 1 || v != std::floor(v)) throw ConfigError("M sweep values must be positive integers");
    if (sweep == SweepVar::Xi)
        for (double v : sweep_values)
            if (!(v >= 0 && v < 1)) throw ConfigError("xi sweep values must lie in [0,1)");
    if (sweep == SweepVar::DSr)
        for (double v : sweep_values)
            if (!(v > 0)) throw ConfigError("d_sr sweep values must be positive");
    if (!(d_sr_m > 0 && d_er_m > 0 && rn_sphere_radius_m >= 0)) throw ConfigError("placement distances must be positive");
    if (!(rn_center_depth_m >= 0 && rn_center_depth_m <= geom.seabed_depth_m))
        throw ConfigError("rn_center_depth_m must lie in the water column");
    if (sbl_resolution < 2) throw ConfigError("sbl_resolution must be at least 2");
    if (!(sbl_region_m > 0)) throw ConfigError("sbl_region_m must be positive");
    if (ellipsoid_estimates < 1) throw ConfigError("ellipsoid_estimates must be positive");
    if (!geom.in_water_column(geom.source) || !geom.in_water_column(geom.uaris))
        throw ConfigError("source and UARIS must lie in the water column");
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream o;
    auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << "\n"; };
    auto num = [&](const std::string& k, double v) { kv(k, format_double(v)); };
    num("freq_khz", params.freq_khz);
    num("prop_factor", params.prop_factor);
    num("seabed_reflection", params.seabed_reflection);
    num("bg_noise_w", params.bg_noise_power);
    num("an_base_w", params.an_base_power);
    num("sample_interval_s", params.sample_interval_s);
    num("n_samples", params.n_samples);
    num("sound_speed_mps", geom.sound_speed_mps);
    num("seabed_depth_m", geom.seabed_depth_m);
    kv("pos_source", pos_str(geom.source));
    kv("pos_uaris", pos_str(geom.uaris));
    auto list = [&](const std::vector<Position3D>& ps) {
        std::string s;
        for (std::size_t i = 0; i < ps.size(); ++i) s += (i ? "; " : "") + pos_str(ps[i]);
        return s;
    };
    if (explicit_receivers) kv("pos_receivers", list(geom.receivers));
    if (explicit_eavesdroppers) kv("pos_eavesdroppers", list(geom.eavesdroppers));
    kv("source_array_axis", pos_str(Position3D::from(geom.source_array_axis)));
    kv("uaris_array_axis", pos_str(Position3D::from(geom.uaris_array_axis)));
    num("n_antennas", dims.T);
    num("n_elements", dims.M);
    num("n_receivers", dims.K);
    num("n_eavesdroppers", dims.J);
    num("d_sr_m", d_sr_m);
    num("d_er_m", d_er_m);
    num("rn_sphere_radius_m", rn_sphere_radius_m);
    num("rn_center_depth_m", rn_center_depth_m);
    num("rn_bearing_offset_deg", rn_bearing_offset_deg);
    kv("rn_placement", rn_placement == Placement::Random ? "random" : "even");
    num("xi", xi);
    num("p_total_dbm", p_total_dbm);
    kv("power_split", format_double(source_fraction) + "," + format_double(uaris_fraction));
    kv("fp_form", to_string(fp_form));
    num("max_iters", solver.max_iters);
    num("rel_tol", solver.rel_tol);
    num("mu_tol", solver.mu_tol);
    num("qcqp_tol", solver.qcqp_tol);
    kv("joint_eta_theta", solver.joint_eta_theta ? "true" : "false");
    kv("sweep", to_string(sweep));
    if (!sweep_values.empty()) {
        std::string s;
        for (std::size_t i = 0; i < sweep_values.size(); ++i) s += (i ? "," : "") + format_double(sweep_values[i]);
        kv("sweep_values", s);
    }
    num("trials", trials);
    {
        std::string s;
        for (std::size_t i = 0; i < variants.size(); ++i) s += std::string(i ? "," : "") + to_string(variants[i]);
        kv("variants", s);
    }
    kv("root_seed", std::to_string(root_seed));
    num("workers", workers);
    kv("output_dir", output_dir);
    num("sbl_resolution", sbl_resolution);
    num("sbl_region_m", sbl_region_m);
    kv("sbl_score", sbl_normalize ? "normalized" : "eigen");
    num("ellipsoid_estimates", ellipsoid_estimates);
    return o.str();
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    // Reference scenario defaults.
    c.geom.source = {200.7, 140.6, 50.2};
    c.geom.uaris = {500.0, 210.0, 30.0};
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (!seen.insert(key).second)
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
        it->second(c, key, value);
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

}  // namespace uaris
