// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "test_util.hpp"

using namespace uaris;

TEST_CASE("en noise variance") {
    ReflectionConfig rc;
    rc.theta = CVec::Ones(2);
    rc.noise_factor = 1.0;
    rc.an_base_power = 1.0;
    CHECK(en_noise_variance(rc, CVec::Ones(2), 1.0) == doctest::Approx(3.0));

    std::mt19937_64 rng(1);
    rc.theta = test::random_cvec(8, rng);
    rc.an_base_power = 1e-3;
    const CVec g = test::random_cvec(8, rng);
    const double v1 = en_noise_variance(rc, g, 0.5);
    rc.noise_factor = 2.0;
    const double v2 = en_noise_variance(rc, g, 0.5);
    CHECK((v2 - 0.5) == doctest::Approx(2.0 * (v1 - 0.5)));
    double direct = 0.0;
    for (int m = 0; m < 8; ++m) direct += std::norm(rc.theta(m)) * std::norm(g(m));
    CHECK(v2 == doctest::Approx(2.0 * 1e-3 * direct + 0.5));
}

TEST_CASE("uaris output power") {
    ReflectionConfig rc;
    rc.theta = CVec::Ones(4);
    rc.an_base_power = 0.5;
    BeamformerSet bf;
    bf.w = {CVec::Zero(2)};
    CHECK(uaris_output_power(rc, CMat::Ones(4, 2), bf) == doctest::Approx(2.0));

    std::mt19937_64 rng(2);
    const CMat H = test::random_cmat(6, 3, rng);
    rc.theta = test::random_cvec(6, rng);
    rc.noise_factor = 3.0;
    bf = test::random_beamformers(2, 3, rng);
    double direct = 3.0 * 0.5 * rc.theta.squaredNorm();
    for (const auto& w : bf.w) direct += (rc.theta.asDiagonal() * H * w).squaredNorm();
    CHECK(uaris_output_power(rc, H, bf) == doctest::Approx(direct));
}

TEST_CASE("uaris output power is convex in w and linear in eta") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        ReflectionConfig rc;
        rc.theta = test::random_cvec(5, rng);
        rc.an_base_power = 0.1;
        const CMat H = test::random_cmat(5, 3, rng);
        const BeamformerSet a = test::random_beamformers(2, 3, rng);
        const BeamformerSet b = test::random_beamformers(2, 3, rng);
        for (double s : {0.2, 0.5, 0.8}) {
            BeamformerSet m;
            for (int k = 0; k < 2; ++k) m.w.push_back(s * a.w[k] + (1 - s) * b.w[k]);
            CHECK(uaris_output_power(rc, H, m) <=
                  s * uaris_output_power(rc, H, a) + (1 - s) * uaris_output_power(rc, H, b) + 1e-12);
        }
        ReflectionConfig r1 = rc, r2 = rc, r3 = rc;
        r1.noise_factor = 1.0;
        r2.noise_factor = 2.0;
        r3.noise_factor = 3.0;
        CHECK(uaris_output_power(r2, H, a) - uaris_output_power(r1, H, a) ==
              doctest::Approx(uaris_output_power(r3, H, a) - uaris_output_power(r2, H, a)));
    }
}

TEST_CASE("beamformer set helpers") {
    std::mt19937_64 rng(4);
    const BeamformerSet bf = test::random_beamformers(3, 4, rng);
    CHECK(bf.K() == 3);
    CHECK(bf.T() == 4);
    const CVec st = bf.stacked();
    CHECK(st.size() == 12);
    CHECK(bf.total_power() == doctest::Approx(st.squaredNorm()));
    CHECK((bf.sum() - (bf.w[0] + bf.w[1] + bf.w[2])).norm() < 1e-14);
    const BeamformerSet back = BeamformerSet::from_stacked(st, 3, 4);
    for (int k = 0; k < 3; ++k) CHECK((back.w[k] - bf.w[k]).norm() == 0.0);
}

TEST_CASE("reflection config checks") {
    ReflectionConfig rc;
    rc.theta = CVec::Ones(3);
    CHECK_NOTHROW(rc.validate());
    rc.noise_factor = 0.5;
    CHECK_THROWS_AS(rc.validate(), DomainError);
    rc.noise_factor = 1.0;
    CHECK((reflect(rc, CVec::Constant(3, cd(2, 1))) - CVec::Constant(3, cd(2, 1))).norm() == 0.0);
    CHECK_THROWS_AS(reflect(rc, CVec::Ones(2)), DimensionError);
}
