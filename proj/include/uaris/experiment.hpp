// SPDX-License-Identifier: Apache-2.0
//
// Seeded Monte Carlo experiments over the downlink, the optimizer and the
// eavesdropper localizer, with CSV and plot-script output.

#ifndef UARIS_EXPERIMENT_HPP
#define UARIS_EXPERIMENT_HPP

#include <cstdint>
#include <map>
#include <string>

#include "uaris/config.hpp"
#include "uaris/fim_crlb.hpp"
#include "uaris/sbl_localizer.hpp"

namespace uaris {

inline constexpr const char* kVersion = "uaris-sim 1.0.0";

/// splitmix64 step; used to derive independent sub-streams from a trial seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Sub-stream identifiers of one trial.
enum class Stream : std::uint64_t { Placement = 1, Channels = 2, Theta = 3, Waveform = 4, Noise = 5, Search = 6 };
std::uint64_t trial_seed(std::uint64_t root_seed, int trial);
std::uint64_t stream_seed(std::uint64_t trial_seed, Stream s, std::uint64_t index = 0);

/// Receiver sphere centre p_R0 for a source-receiver distance d_sr.
Position3D receiver_center(const ExperimentConfig& cfg, double d_sr);

/// Geometry and sizes of one trial at one sweep value.
struct TrialScenario {
    ScenarioGeometry geom;
    AcousticParams params;
    Dims dims;
    ObjectiveWeights weights;
};
TrialScenario make_scenario(const ExperimentConfig& cfg, double sweep_value, std::uint64_t tseed);

/// Budgets seen by one scheme: without the surface the source may spend the
/// whole total power.
ObjectiveWeights scheme_weights(const ObjectiveWeights& w, Variant v);

/// Localizer cube of side sbl_region_m around the source, its centre moved by
/// a seeded uniform offset of up to a quarter side per axis so the truth is
/// not a lattice point.
SearchRegion search_region(const ExperimentConfig& cfg, const TrialScenario& sc, std::uint64_t tseed);

struct TrialRecord {
    double sweep_value = 0.0;
    Variant variant = Variant::M3;
    int trial = 0;
    bool ok = false;
    std::string failure;  // empty when ok
    double sum_rate = 0.0;
    double r3 = 0.0;
    double eta = 1.0;
    int iterations = 0;
    Position3D p_true;
    Position3D p_hat;
    double miss_m = 0.0;
    double crlb_position_bound = 0.0;
    bool crlb_ill_conditioned = false;
};

struct ResultRecord {
    double sweep_value = 0.0;
    Variant variant = Variant::M3;
    double mean_sum_rate = 0.0;
    double stderr_sum_rate = 0.0;
    double rms_miss_distance = 0.0;
    double stderr_rms_miss = 0.0;
    double mean_crlb_position_bound = 0.0;
    double mean_eta = 1.0;
    int trials_used = 0;
    std::map<std::string, int> failures;  // cause -> count
    int failures_total() const;
};

/// One full trial: channels, optimization, observation, localization, bound.
TrialRecord run_trial(const ExperimentConfig& cfg, double sweep_value, Variant variant, int trial);

struct ExperimentOutput {
    std::vector<ResultRecord> records;
    std::vector<TrialRecord> trials;
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

std::vector<ResultRecord> aggregate(const std::vector<TrialRecord>& trials, const ExperimentConfig& cfg);

/// The failure causes reported as columns, in order.
const std::vector<std::string>& failure_causes();

std::string results_csv(const std::vector<ResultRecord>& records);
std::string trials_csv(const std::vector<TrialRecord>& trials);
std::string plot_script(const ExperimentConfig& cfg);
std::string run_meta(const ExperimentConfig& cfg);

/// Writes results.csv, trials.csv, plot.gp and run.meta into cfg.output_dir.
void emit_outputs(const ExperimentOutput& out, const ExperimentConfig& cfg);

struct EllipsoidVariantResult {
    Variant variant = Variant::M3;
    CrlbResult bound;
    std::vector<Position3D> estimates;
    std::vector<bool> inside;
    double coverage = 0.0;
    double eta = 1.0;
    int failures = 0;
};

struct EllipsoidStudy {
    Position3D p_true;
    std::vector<EllipsoidVariantResult> variants;
};

/// Fixed scenario (trial 0); one optimized operating point per variant, then
/// `ellipsoid_estimates` localizations under independent noise draws.
EllipsoidStudy run_ellipsoid_study(const ExperimentConfig& cfg);
void emit_ellipsoid_outputs(const EllipsoidStudy& study, const ExperimentConfig& cfg);

}  // namespace uaris

#endif
