// SPDX-License-Identifier: Apache-2.0
//
// The active reflecting surface: per-element complex gains, the artificial
// noise it injects, and its output power budget.

#ifndef UARIS_UARIS_MODEL_HPP
#define UARIS_UARIS_MODEL_HPP

#include "uaris/types.hpp"

namespace uaris {

/// Source beamformers w_1..w_K, each of length T.
struct BeamformerSet {
    std::vector<CVec> w;

    int K() const { return static_cast<int>(w.size()); }
    int T() const { return w.empty() ? 0 : static_cast<int>(w.front().size()); }
    double total_power() const;
    CVec sum() const;
    /// Stacked view [w_1; ...; w_K].
    CVec stacked() const;
    static BeamformerSet from_stacked(const CVec& v, int K, int T);
};

struct ReflectionConfig {
    CVec theta;                  // per-element gain p_m e^{j theta_m}
    double noise_factor = 1.0;   // eta >= 1
    double an_base_power = 1e-9; // sigma_v^2, W

    int M() const { return static_cast<int>(theta.size()); }
    double an_power() const { return noise_factor * an_base_power; }
    void validate() const;
};

/// Deterministic part of the re-radiated signal, theta_m * incident_m.
CVec reflect(const ReflectionConfig& config, const CVec& incident);

/// Per-sample noise variance at an eavesdropper with UARIS channel g:
/// eta sigma_v^2 sum_m |theta_m|^2 |g_m|^2 + sigma^2.
double en_noise_variance(const ReflectionConfig& config, const CVec& g, double bg_noise);

/// sum_k ||Theta H w_k||^2 + ||theta||^2 eta sigma_v^2.
double uaris_output_power(const ReflectionConfig& config, const CMat& H, const BeamformerSet& bf);

}  // namespace uaris

#endif
