// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "test_util.hpp"

using namespace uaris;

namespace {

struct Setup {
    ScenarioGeometry geom;
    AcousticParams params;
    ChannelSet ch;
    ReflectionConfig rc;
    BeamformerSet bf;
};

Setup make_setup(int J, std::uint64_t seed, int n_samples = 64) {
    std::mt19937_64 rng(seed);
    Setup s;
    s.geom = test::random_geometry(J, 2, rng);
    s.params.n_samples = n_samples;
    s.ch = synthesize_channels(s.geom, s.params, Dims{4, 8, 2, J}, seed + 1);
    s.rc.theta = test::random_cvec(8, rng, 1e3);
    s.rc.noise_factor = 2.0;
    s.bf = test::random_beamformers(2, 4, rng, 0.3);
    return s;
}

}  // namespace

TEST_CASE("waveform is unit norm with flat magnitude") {
    const Waveform w = Waveform::random(32, 9);
    CHECK(w.N() == 32);
    CHECK(w.phi.size() == 31);
    CHECK(w.s.norm() == doctest::Approx(1.0));
    for (int n = 0; n < 32; ++n) CHECK(std::abs(w.s(n)) == doctest::Approx(1.0 / std::sqrt(32.0)));
    CHECK(w.s(0).imag() == 0.0);
    CHECK(w.s(0).real() > 0.0);
    for (int n = 1; n < 32; ++n) CHECK(std::arg(w.s(n) / w.s(0)) == doctest::Approx(std::arg(std::polar(1.0, w.phi(n - 1)))));
    CHECK((Waveform::random(32, 9).s - w.s).norm() == 0.0);
    CHECK((Waveform::random(32, 10).s - w.s).norm() > 0.0);
    CHECK_THROWS_AS(Waveform::random(1, 0), DomainError);
}

TEST_CASE("steering matrix entries") {
    Setup s = make_setup(2, 20);
    const RVec omega = s.params.angular_frequencies();
    const Position3D p{150, 120, 40};
    const CMat T = steering_matrix(p, 1, s.geom, s.params);
    CHECK(T.rows() == 64);
    CHECK(T.cols() == 4);
    const auto fr = four_ray_geometry(p, s.geom.eavesdroppers[1], s.geom.uaris, 100.0, 1500.0);
    for (int n : {0, 5, 63})
        for (int a = 0; a < 4; ++a) CHECK(std::abs(T(n, a) - std::exp(cd(0, -omega(n) * fr.delays_s[a]))) < 1e-12);
    CHECK((T.row(0) - CRow::Ones(4)).norm() == 0.0);
    CHECK_THROWS_AS(steering_matrix(p, 2, s.geom, s.params), DomainError);
}

TEST_CASE("four-ray coefficients against an independent image construction") {
    Setup s = make_setup(3, 21);
    const double lambda = s.params.wavelength_m(s.geom.sound_speed_mps);
    const CVec wsum = s.bf.w[0] + s.bf.w[1];
    for (int j = 0; j < 3; ++j) {
        const Coeffs4 f = attenuation_coeffs(s.ch, s.rc, s.bf, s.geom, s.params, j);
        const Position3D e = s.geom.eavesdroppers[j];
        CHECK(std::abs(f(0) - (s.ch.h_e_direct[j].adjoint() * wsum)(0)) < 1e-12 * std::abs(f(0)));
        const CMat Theta = s.rc.theta.asDiagonal();
        const cd f4 = (s.ch.g_eu[j].adjoint() * Theta * s.ch.H_su * wsum)(0);
        CHECK(std::abs(f(3) - f4) < 1e-12 * std::abs(f4));
        // Images mirrored in the surface (z = 0) and the seabed (z = h).
        const Position3D img_s{e.x, e.y, -e.z};
        const Position3D img_b{e.x, e.y, 200.0 - e.z};
        auto bounce = [&](const Position3D& img) {
            const double L = distance(s.geom.source, img);
            const double amp = std::pow(attenuation(L, 5.0, 1.5), -0.5);
            const CVec a = ula_steering(4, s.geom.source_array_axis, s.geom.source, img, lambda);
            cd acc = 0.0;
            for (int t = 0; t < 4; ++t) acc += a(t) * wsum(t);
            return amp * acc;
        };
        CHECK(std::abs(f(1) - bounce(img_s)) < 1e-12 * std::abs(f(1)));
        CHECK(std::abs(f(2) - 0.85 * bounce(img_b)) < 1e-12 * std::abs(f(2)));
    }
}

TEST_CASE("noiseless observation equals the model mean") {
    Setup s = make_setup(2, 22);
    const Waveform w = Waveform::random(64, 3);
    const auto obs = synthesize_observation(s.geom.source, s.ch, s.rc, s.bf, w, s.geom, s.params, 5, false);
    CHECK(obs.J() == 2);
    CHECK(obs.N() == 64);
    for (int j = 0; j < 2; ++j) {
        const CMat T = steering_matrix(s.geom.source, j, s.geom, s.params);
        const Coeffs4 f = attenuation_coeffs(s.ch, s.rc, s.bf, s.geom, s.params, j);
        for (int n = 0; n < 64; ++n) {
            cd m = 0.0;
            for (int a = 0; a < 4; ++a) m += T(n, a) * f(a);
            CHECK(std::abs(obs.u[j](n) - w.s(n) * m) < 1e-12 * std::abs(m) + 1e-300);
        }
        CHECK(obs.noise_variances(j) == doctest::Approx(en_noise_variance(s.rc, s.ch.g_eu[j], 1e-9)));
    }
    CHECK((obs.F.col(1) - attenuation_coeffs(s.ch, s.rc, s.bf, s.geom, s.params, 1)).norm() == 0.0);
}

TEST_CASE("observation noise is circular with the stated variance") {
    Setup s = make_setup(2, 23, 8192);
    const Waveform w = Waveform::random(8192, 4);
    const auto clean = synthesize_observation(s.geom.source, s.ch, s.rc, s.bf, w, s.geom, s.params, 6, false);
    const auto noisy = synthesize_observation(s.geom.source, s.ch, s.rc, s.bf, w, s.geom, s.params, 6, true);
    for (int j = 0; j < 2; ++j) {
        const CVec e = noisy.u[j] - clean.u[j];
        const double var = noisy.noise_variances(j);
        const double re2 = e.real().squaredNorm() / e.size();
        const double im2 = e.imag().squaredNorm() / e.size();
        // 8192 draws: relative standard error of each half is about 1.6%.
        CHECK(re2 == doctest::Approx(var / 2).epsilon(0.08));
        CHECK(im2 == doctest::Approx(var / 2).epsilon(0.08));
        CHECK(std::abs(e.real().dot(e.imag())) / e.size() < 0.08 * var / 2);
    }
    const auto again = synthesize_observation(s.geom.source, s.ch, s.rc, s.bf, w, s.geom, s.params, 6, true);
    CHECK((again.u[0] - noisy.u[0]).norm() == 0.0);
}
