// SPDX-License-Identifier: Apache-2.0

#include "uaris/geometry.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace uaris {

namespace {

void check_position(const ScenarioGeometry& g, const Position3D& p, const std::string& name) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
        throw DomainError(name + " has a non-finite coordinate");
    if (!g.in_water_column(p)) throw DomainError(name + " lies outside the water column");
}

}  // namespace

void AcousticParams::validate() const {
    if (!(freq_khz > 0)) throw DomainError("freq_khz must be positive");
    if (!(prop_factor >= 1)) throw DomainError("prop_factor must be >= 1");
    if (!(seabed_reflection >= 0 && seabed_reflection <= 1)) throw DomainError("seabed_reflection must lie in [0,1]");
    if (!(bg_noise_power > 0)) throw DomainError("bg_noise_power must be positive");
    if (!(an_base_power > 0)) throw DomainError("an_base_power must be positive");
    if (!(sample_interval_s > 0)) throw DomainError("sample_interval_s must be positive");
    if (n_samples < 2) throw DomainError("n_samples must be at least 2");
}

RVec AcousticParams::angular_frequencies() const {
    RVec omega(n_samples);
    for (int n = 0; n < n_samples; ++n)
        omega(n) = 2.0 * std::numbers::pi * n / (n_samples * sample_interval_s);
    return omega;
}

void ScenarioGeometry::validate() const {
    if (!(seabed_depth_m > 0)) throw DomainError("seabed depth must be positive");
    if (!(sound_speed_mps > 0)) throw DomainError("sound speed must be positive");
    if (receivers.empty()) throw DomainError("at least one receiver is required");
    if (eavesdroppers.empty()) throw DomainError("at least one eavesdropper is required");
    check_position(*this, source, "source");
    check_position(*this, uaris, "uaris");
    for (std::size_t k = 0; k < receivers.size(); ++k) check_position(*this, receivers[k], "receiver " + std::to_string(k));
    for (std::size_t j = 0; j < eavesdroppers.size(); ++j) {
        check_position(*this, eavesdroppers[j], "eavesdropper " + std::to_string(j));
        if (eavesdroppers[j] == source) throw DomainError("eavesdropper coincides with the source");
    }
    if (std::abs(source_array_axis.norm() - 1.0) > 1e-9 || std::abs(uaris_array_axis.norm() - 1.0) > 1e-9)
        throw DomainError("array axes must be unit vectors");
}

void Dims::validate() const {
    if (T < 1 || M < 1 || K < 1 || J < 1) throw DomainError("dimensions T, M, K, J must all be positive");
}

double thorp_absorption_db_per_km(double f) {
    if (!(f > 0)) throw DomainError("Thorp formula needs a positive frequency");
    const double f2 = f * f;
    return 0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003;
}

double absorption_per_meter(double freq_khz) {
    return std::pow(10.0, thorp_absorption_db_per_km(freq_khz) / 1e4);
}

double attenuation(double dist_m, double freq_khz, double prop_factor) {
    if (!(dist_m > 0)) throw DomainError("attenuation needs a positive distance");
    // d^eps * upsilon^d, computed in the log domain.
    const double log_ups = thorp_absorption_db_per_km(freq_khz) / 1e4 * std::log(10.0);
    return std::exp(prop_factor * std::log(dist_m) + dist_m * log_ups);
}

FourRayGeometry four_ray_geometry(const Position3D& p, const Position3D& en, const Position3D& uaris, double h,
                                  double c) {
    if (!(c > 0)) throw DomainError("sound speed must be positive");
    FourRayGeometry g;
    const double dx = p.x - en.x;
    const double dy = p.y - en.y;
    const double l2 = dx * dx + dy * dy;
    g.horizontal_dist_m = std::sqrt(l2);
    const double zs = p.z + en.z;
    const double zb = 2.0 * h - p.z - en.z;
    g.lengths_m[0] = distance(p, en);
    g.lengths_m[1] = std::sqrt(l2 + zs * zs);
    g.lengths_m[2] = std::sqrt(l2 + zb * zb);
    g.lengths_m[3] = distance(p, uaris) + distance(uaris, en);
    for (int a = 0; a < 4; ++a) g.delays_s[a] = g.lengths_m[a] / c;
    return g;
}

Eigen::Matrix<double, 4, 3> four_ray_length_gradient(const Position3D& p, const Position3D& en,
                                                     const Position3D& uaris, double h) {
    const FourRayGeometry g = four_ray_geometry(p, en, uaris, h, 1.0);
    const double L1 = g.lengths_m[0];
    const double L2 = g.lengths_m[1];
    const double L3 = g.lengths_m[2];
    const double Lsu = distance(p, uaris);
    if (!(L1 > 0)) throw DegenerateGeometryError("source coincides with an eavesdropper", -1);
    if (!(Lsu > 0)) throw DegenerateGeometryError("source coincides with the UARIS", -1);
    const double dx = p.x - en.x;
    const double dy = p.y - en.y;
    Eigen::Matrix<double, 4, 3> d;
    d.row(0) << dx / L1, dy / L1, (p.z - en.z) / L1;
    d.row(1) << dx / L2, dy / L2, (p.z + en.z) / L2;
    d.row(2) << dx / L3, dy / L3, -(2.0 * h - p.z - en.z) / L3;
    d.row(3) << (p.x - uaris.x) / Lsu, (p.y - uaris.y) / Lsu, (p.z - uaris.z) / Lsu;
    return d;
}

Dims ChannelSet::dims() const {
    return Dims{static_cast<int>(H_su.cols()), static_cast<int>(H_su.rows()), static_cast<int>(h_direct.size()),
                static_cast<int>(h_e_direct.size())};
}

void ChannelSet::validate() const {
    const Dims d = dims();
    require_dim(g_ru.size() == h_direct.size(), "g_ru and h_direct disagree on K");
    require_dim(g_eu.size() == h_e_direct.size(), "g_eu and h_e_direct disagree on J");
    for (const auto& v : h_direct) require_dim(v.size() == d.T, "h_k length must equal T");
    for (const auto& v : h_e_direct) require_dim(v.size() == d.T, "h_E,j length must equal T");
    for (const auto& v : g_ru) require_dim(v.size() == d.M, "g_k length must equal M");
    for (const auto& v : g_eu) require_dim(v.size() == d.M, "g_E,j length must equal M");
}

CVec ula_steering(int n, const Eigen::Vector3d& axis, const Position3D& from, const Position3D& to,
                  double wavelength_m) {
    const Eigen::Vector3d dir = to.vec() - from.vec();
    const double len = dir.norm();
    if (!(len > 0)) throw DomainError("zero-length link");
    const double spacing = 0.5 * wavelength_m;
    const double cos_angle = axis.dot(dir / len);
    const double k = 2.0 * std::numbers::pi / wavelength_m;
    CVec a(n);
    for (int m = 0; m < n; ++m) {
        const double offset = (m - 0.5 * (n - 1)) * spacing;
        a(m) = std::polar(1.0, -k * offset * cos_angle);
    }
    return a;
}

ChannelSet synthesize_channels(const ScenarioGeometry& geom, const AcousticParams& params, const Dims& dims,
                               std::uint64_t seed) {
    dims.validate();
    params.validate();
    require_dim(static_cast<int>(geom.receivers.size()) == dims.K, "receiver count must equal K");
    require_dim(static_cast<int>(geom.eavesdroppers.size()) == dims.J, "eavesdropper count must equal J");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double lambda = params.wavelength_m(geom.sound_speed_mps);

    auto amplitude = [&](const Position3D& a, const Position3D& b) {
        const double d = distance(a, b);
        if (!(d > 0)) throw DomainError("coincident positions on a channel link");
        return 1.0 / std::sqrt(attenuation(d, params.freq_khz, params.prop_factor));
    };
    // Gain vector from an array at `from` to a single-sensor node at `to`,
    // conjugated so that the received sample is vec^H x.
    auto node_link = [&](int n, const Eigen::Vector3d& axis, const Position3D& from, const Position3D& to) {
        const cd gain = std::polar(amplitude(from, to), phase(rng));
        CVec gains = gain * ula_steering(n, axis, from, to, lambda);
        return CVec(gains.conjugate());
    };

    ChannelSet ch;
    {
        const cd gain = std::polar(amplitude(geom.source, geom.uaris), phase(rng));
        const CVec a_u = ula_steering(dims.M, geom.uaris_array_axis, geom.uaris, geom.source, lambda);
        const CVec a_s = ula_steering(dims.T, geom.source_array_axis, geom.source, geom.uaris, lambda);
        ch.H_su = gain * a_u * a_s.transpose();
    }
    for (const auto& rn : geom.receivers) {
        ch.h_direct.push_back(node_link(dims.T, geom.source_array_axis, geom.source, rn));
        ch.g_ru.push_back(node_link(dims.M, geom.uaris_array_axis, geom.uaris, rn));
    }
    for (const auto& en : geom.eavesdroppers) {
        ch.h_e_direct.push_back(node_link(dims.T, geom.source_array_axis, geom.source, en));
        ch.g_eu.push_back(node_link(dims.M, geom.uaris_array_axis, geom.uaris, en));
    }
    return ch;
}

}  // namespace uaris
