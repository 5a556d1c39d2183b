// SPDX-License-Identifier: Apache-2.0
//
// What the eavesdropper coalition records: a spectrally flat waveform seen
// through four propagation paths, plus complex Gaussian noise.

#ifndef UARIS_EAVESDROPPER_HPP
#define UARIS_EAVESDROPPER_HPP

#include <cstdint>
#include <string>

#include "uaris/downlink.hpp"

namespace uaris {

using Coeffs4 = Eigen::Vector4cd;

/// s[n] = e^{j phi[n]} / sqrt(N) with phi[0] fixed to 0.
struct Waveform {
    CVec s;
    RVec phi;  // N-1 free phases, phi[1..N-1]

    int N() const { return static_cast<int>(s.size()); }
    static Waveform from_phases(const RVec& free_phases);
    static Waveform random(int n_samples, std::uint64_t seed);
};

struct EavesdropperObservation {
    std::vector<CVec> u;   // J x N
    RVec omega;            // N
    RVec noise_variances;  // J, total per-sample variance
    // Generating parameters, kept for bounds and diagnostics only.
    Position3D p_true;
    Eigen::MatrixXcd F;    // 4 x J
    Waveform waveform;

    int J() const { return static_cast<int>(u.size()); }
    int N() const { return static_cast<int>(omega.size()); }
};

/// T[n, a] = exp(-j omega_n tau_a(p)) for eavesdropper j.
CMat steering_matrix(const Position3D& p, int en_index, const ScenarioGeometry& geom, const AcousticParams& params);
CMat steering_matrix(const Position3D& p, int en_index, const ScenarioGeometry& geom, const RVec& omega);

/// Four-ray gains at eavesdropper j: direct, surface image, seabed image, UARIS.
Coeffs4 attenuation_coeffs(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf,
                           const ScenarioGeometry& geom, const AcousticParams& params, int en_index);

/// Noise-free samples s[n] * (T f)[n].
CVec observation_mean(const CMat& T, const Coeffs4& f, const CVec& s);

/// Deterministic per seed. With add_noise false the samples equal the mean.
EavesdropperObservation synthesize_observation(const Position3D& p_true, const ChannelSet& ch,
                                               const ReflectionConfig& cfg, const BeamformerSet& bf,
                                               const Waveform& waveform, const ScenarioGeometry& geom,
                                               const AcousticParams& params, std::uint64_t seed,
                                               bool add_noise = true);

/// One row per (en, n): en,n,omega,re,im.
void write_observation_csv(const EavesdropperObservation& obs, const std::string& path);

}  // namespace uaris

#endif
