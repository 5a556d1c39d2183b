// SPDX-License-Identifier: Apache-2.0

#include "uaris/eavesdropper.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "uaris/csv.hpp"

namespace uaris {

Waveform Waveform::from_phases(const RVec& free_phases) {
    Waveform w;
    const int n = static_cast<int>(free_phases.size()) + 1;
    w.phi = free_phases;
    w.s.resize(n);
    const double amp = 1.0 / std::sqrt(static_cast<double>(n));
    w.s(0) = amp;
    for (int i = 1; i < n; ++i) w.s(i) = std::polar(amp, free_phases(i - 1));
    return w;
}

Waveform Waveform::random(int n_samples, std::uint64_t seed) {
    if (n_samples < 2) throw DomainError("waveform needs at least 2 samples");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    RVec phi(n_samples - 1);
    for (int i = 0; i < n_samples - 1; ++i) phi(i) = u(rng);
    return from_phases(phi);
}

CMat steering_matrix(const Position3D& p, int en_index, const ScenarioGeometry& geom, const RVec& omega) {
    if (en_index < 0 || en_index >= static_cast<int>(geom.eavesdroppers.size()))
        throw DomainError("eavesdropper index out of range");
    const FourRayGeometry fr =
        four_ray_geometry(p, geom.eavesdroppers[en_index], geom.uaris, geom.seabed_depth_m, geom.sound_speed_mps);
    CMat T(omega.size(), 4);
    for (int n = 0; n < omega.size(); ++n)
        for (int a = 0; a < 4; ++a) T(n, a) = std::polar(1.0, -omega(n) * fr.delays_s[a]);
    return T;
}

CMat steering_matrix(const Position3D& p, int en_index, const ScenarioGeometry& geom, const AcousticParams& params) {
    return steering_matrix(p, en_index, geom, params.angular_frequencies());
}

Coeffs4 attenuation_coeffs(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf,
                           const ScenarioGeometry& geom, const AcousticParams& params, int en_index) {
    if (en_index < 0 || en_index >= static_cast<int>(ch.h_e_direct.size()))
        throw DomainError("eavesdropper index out of range");
    require_dim(bf.T() == ch.H_su.cols(), "beamformer length must equal T");
    require_dim(cfg.theta.size() == ch.H_su.rows(), "theta length must equal M");
    const CVec wsum = bf.sum();
    const Position3D& en = geom.eavesdroppers[en_index];
    const double lambda = params.wavelength_m(geom.sound_speed_mps);
    const FourRayGeometry fr = four_ray_geometry(geom.source, en, geom.uaris, geom.seabed_depth_m, geom.sound_speed_mps);

    // Bounce paths leave the source array toward the surface and seabed images.
    auto bounce = [&](const Position3D& image, double length) {
        const CVec a = ula_steering(static_cast<int>(wsum.size()), geom.source_array_axis, geom.source, image, lambda);
        const double amp = 1.0 / std::sqrt(attenuation(length, params.freq_khz, params.prop_factor));
        return amp * (a.transpose() * wsum)(0);
    };
    const Position3D surface{en.x, en.y, -en.z};
    const Position3D seabed{en.x, en.y, 2.0 * geom.seabed_depth_m - en.z};

    Coeffs4 f;
    f(0) = ch.h_e_direct[en_index].dot(wsum);
    f(1) = bounce(surface, fr.lengths_m[1]);
    f(2) = params.seabed_reflection * bounce(seabed, fr.lengths_m[2]);
    f(3) = ch.g_eu[en_index].dot(cfg.theta.cwiseProduct(ch.H_su * wsum));
    return f;
}

CVec observation_mean(const CMat& T, const Coeffs4& f, const CVec& s) {
    require_dim(T.rows() == s.size() && T.cols() == 4, "steering matrix must be N x 4");
    return s.cwiseProduct(T * f);
}

EavesdropperObservation synthesize_observation(const Position3D& p_true, const ChannelSet& ch,
                                               const ReflectionConfig& cfg, const BeamformerSet& bf,
                                               const Waveform& waveform, const ScenarioGeometry& geom,
                                               const AcousticParams& params, std::uint64_t seed, bool add_noise) {
    require_dim(waveform.N() == params.n_samples, "waveform length must equal n_samples");
    cfg.validate();
    const int J = static_cast<int>(geom.eavesdroppers.size());
    EavesdropperObservation obs;
    obs.omega = params.angular_frequencies();
    obs.noise_variances.resize(J);
    obs.F.resize(4, J);
    obs.p_true = p_true;
    obs.waveform = waveform;

    // The coefficients follow from the actual source geometry; the delays
    // are evaluated at p_true.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < J; ++j) {
        const Coeffs4 f = attenuation_coeffs(ch, cfg, bf, geom, params, j);
        obs.F.col(j) = f;
        const double var = en_noise_variance(cfg, ch.g_eu[j], params.bg_noise_power);
        obs.noise_variances(j) = var;
        CVec u = observation_mean(steering_matrix(p_true, j, geom, obs.omega), f, waveform.s);
        if (add_noise) {
            const double sd = std::sqrt(var / 2.0);
            for (int n = 0; n < u.size(); ++n) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                u(n) += cd(sd * re, sd * im);
            }
        }
        obs.u.push_back(std::move(u));
    }
    return obs;
}

void write_observation_csv(const EavesdropperObservation& obs, const std::string& path) {
    CsvTable t({"en", "n", "omega", "re", "im"});
    for (int j = 0; j < obs.J(); ++j)
        for (int n = 0; n < obs.N(); ++n)
            t.add_row({std::to_string(j), std::to_string(n), format_double(obs.omega(n)),
                       format_double(obs.u[j](n).real()), format_double(obs.u[j](n).imag())});
    write_file_atomic(path, t.str());
}

}  // namespace uaris
