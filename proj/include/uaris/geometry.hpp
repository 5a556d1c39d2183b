// SPDX-License-Identifier: Apache-2.0
//
// Scenario geometry, the Thorp attenuation law, four-ray path geometry and
// seeded synthesis of every channel matrix used by the downlink and the
// eavesdropper models.

#ifndef UARIS_GEOMETRY_HPP
#define UARIS_GEOMETRY_HPP

#include <array>
#include <cstdint>

#include "uaris/types.hpp"

namespace uaris {

/// Physical and sampling constants of the acoustic link.
struct AcousticParams {
    double freq_khz = 5.0;           // f
    double prop_factor = 1.5;        // spreading exponent
    double seabed_reflection = 0.85; // kappa_b
    double bg_noise_power = 1e-9;    // sigma^2, W
    double an_base_power = 1e-9;     // sigma_v^2, W
    double sample_interval_s = 1e-3; // T_s
    int n_samples = 64;              // N

    void validate() const;
    double wavelength_m(double sound_speed_mps) const { return sound_speed_mps / (freq_khz * 1e3); }
    /// omega_n = 2*pi*(n-1)/(N*T_s), n = 1..N.
    RVec angular_frequencies() const;
};

struct ScenarioGeometry {
    Position3D source;
    Position3D uaris;
    std::vector<Position3D> receivers;
    std::vector<Position3D> eavesdroppers;
    double seabed_depth_m = 100.0;
    double sound_speed_mps = 1500.0;
    // Unit axes of the uniform linear arrays at the source and at the UARIS.
    Eigen::Vector3d source_array_axis{0.0, 1.0, 0.0};
    Eigen::Vector3d uaris_array_axis{0.0, 1.0, 0.0};

    void validate() const;
    bool in_water_column(const Position3D& p) const { return p.z >= 0.0 && p.z <= seabed_depth_m; }
};

/// Array sizes: T source antennas, M UARIS elements, K receivers, J eavesdroppers.
struct Dims {
    int T = 4;
    int M = 64;
    int K = 4;
    int J = 4;
    void validate() const;
};

/// Thorp absorption in dB/km, f in kHz.
double thorp_absorption_db_per_km(double freq_khz);

/// Absorption as a linear power ratio per meter: 10^(alpha_dB_per_km / 10000).
double absorption_per_meter(double freq_khz);

/// Power loss d^eps * upsilon(f)^d for a link of length d meters.
double attenuation(double dist_m, double freq_khz, double prop_factor);

struct FourRayGeometry {
    std::array<double, 4> lengths_m{};  // direct, surface, seabed, UARIS
    std::array<double, 4> delays_s{};
    double horizontal_dist_m = 0.0;
};

/// Path lengths and delays from a candidate source position `p` to the
/// eavesdropper `en`, via the surface and seabed images and via the UARIS.
FourRayGeometry four_ray_geometry(const Position3D& p, const Position3D& en, const Position3D& uaris,
                                  double seabed_depth_m, double sound_speed_mps);

/// Gradient of the four path lengths with respect to the source position.
/// Row a holds dL_a/d(x,y,z).
Eigen::Matrix<double, 4, 3> four_ray_length_gradient(const Position3D& p, const Position3D& en,
                                                     const Position3D& uaris, double seabed_depth_m);

struct ChannelSet {
    std::vector<CVec> h_direct;   // K x (T)   source -> receiver k
    CMat H_su;                    // M x T     source -> UARIS
    std::vector<CVec> g_ru;       // K x (M)   UARIS -> receiver k
    std::vector<CVec> h_e_direct; // J x (T)   source -> eavesdropper j
    std::vector<CVec> g_eu;       // J x (M)   UARIS -> eavesdropper j

    Dims dims() const;
    void validate() const;
};

/// Far-field steering vector of an n-element half-wavelength ULA centred at
/// `from`, toward `to`. Entry m has phase -2*pi/lambda * (offset_m . u).
CVec ula_steering(int n, const Eigen::Vector3d& axis, const Position3D& from, const Position3D& to,
                  double wavelength_m);

/// Deterministic function of (geom, params, dims, seed). Every entry of a
/// link has magnitude attenuation(d)^(-1/2); the per-link global phase is
/// drawn uniformly from the seeded generator.
ChannelSet synthesize_channels(const ScenarioGeometry& geom, const AcousticParams& params, const Dims& dims,
                               std::uint64_t seed);

}  // namespace uaris

#endif
