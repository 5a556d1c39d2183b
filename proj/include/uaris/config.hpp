// SPDX-License-Identifier: Apache-2.0
//
// Plain-text `key = value` experiment configuration.

#ifndef UARIS_CONFIG_HPP
#define UARIS_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "uaris/fp_optimizer.hpp"

namespace uaris {

enum class SweepVar { None, DSr, Xi, PTotal, M };
const char* to_string(SweepVar s);

enum class Placement { Random, Even };

struct ExperimentConfig {
    // Scenario
    ScenarioGeometry geom;  // receivers / eavesdroppers filled per trial unless explicit
    AcousticParams params;
    Dims dims;
    bool explicit_receivers = false;
    bool explicit_eavesdroppers = false;
    double d_sr_m = 300.0;
    double d_er_m = 20.0;
    double rn_sphere_radius_m = 10.0;
    double rn_center_depth_m = 40.0;
    double rn_bearing_offset_deg = 10.0;
    Placement rn_placement = Placement::Random;

    // Optimization
    double xi = 0.02;
    double p_total_dbm = 30.0;
    double source_fraction = 0.9;
    double uaris_fraction = 0.1;
    FpForm fp_form = FpForm::Exact;
    SolverSettings solver;

    // Experiment
    SweepVar sweep = SweepVar::None;
    std::vector<double> sweep_values;
    int trials = 10;
    std::vector<Variant> variants{Variant::M1, Variant::M2, Variant::M3};
    std::uint64_t root_seed = 1;
    int workers = 1;
    std::string output_dir = "out";
    int sbl_resolution = 15;
    double sbl_region_m = 100.0;
    // Scale each sample index to unit energy across eavesdroppers before scoring.
    bool sbl_normalize = true;
    int ellipsoid_estimates = 200;

    void validate() const;
    double p_total_w() const;
    /// Objective weights after applying a sweep value (NaN means no override).
    ObjectiveWeights weights(double sweep_value) const;
    /// Text form that parses back to the same configuration.
    std::string serialize() const;
};

double dbm_to_w(double dbm);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace uaris

#endif
