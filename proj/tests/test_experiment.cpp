// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "test_util.hpp"

using namespace uaris;

namespace {

const char* kSmall =
    "n_antennas = 2\n"
    "n_elements = 4\n"
    "n_receivers = 2\n"
    "n_eavesdroppers = 2\n"
    "n_samples = 16\n"
    "sbl_resolution = 4\n"
    "sbl_region_m = 20\n"
    "max_iters = 20\n"
    "trials = 3\n"
    "root_seed = 42\n";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("seed derivation") {
    CHECK(trial_seed(5, 0) == 5);
    CHECK(trial_seed(5, 3) == (5ull ^ 3ull));
    // Reference splitmix64 outputs for seed 0 and 1.
    CHECK(splitmix64(0) == 0xE220A8397B1DCDAFull);
    CHECK(splitmix64(1) == 0x910A2DEC89025CC1ull);
    std::vector<std::uint64_t> seen;
    for (Stream s : {Stream::Placement, Stream::Channels, Stream::Theta, Stream::Waveform, Stream::Noise, Stream::Search})
        for (std::uint64_t i = 0; i < 3; ++i) seen.push_back(stream_seed(77, s, i));
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("scenario placement") {
    ExperimentConfig cfg = parse_config("n_receivers = 5\nn_eavesdroppers = 6\n");
    const TrialScenario sc = make_scenario(cfg, std::nan(""), 9);
    const Position3D c = receiver_center(cfg, cfg.d_sr_m);
    CHECK(distance(Position3D{c.x, c.y, cfg.geom.source.z}, cfg.geom.source) == doctest::Approx(300.0));
    CHECK(c.z == 40.0);
    CHECK(sc.geom.receivers.size() == 5);
    CHECK(sc.geom.eavesdroppers.size() == 6);
    for (const auto& r : sc.geom.receivers) {
        CHECK(r.z >= 1.0);
        CHECK(r.z <= 99.0);
        if (r.z > 1.0 && r.z < 99.0) CHECK(distance(r, c) == doctest::Approx(10.0));
    }
    for (const auto& e : sc.geom.eavesdroppers) {
        CHECK(e.z >= 1.0);
        CHECK(e.z <= 99.0);
        if (e.z > 1.0 && e.z < 99.0) CHECK(distance(e, c) == doctest::Approx(20.0));
    }
    const TrialScenario again = make_scenario(cfg, std::nan(""), 9);
    CHECK(again.geom.eavesdroppers[3] == sc.geom.eavesdroppers[3]);

    const TrialScenario swept = make_scenario(parse_config("sweep = M\nsweep_values = 16\n"), 16, 9);
    CHECK(swept.dims.M == 16);
    const TrialScenario far = make_scenario(parse_config("sweep = d_sr\nsweep_values = 500\n"), 500, 9);
    const Position3D cf = receiver_center(cfg, 500);
    CHECK(distance(Position3D{cf.x, cf.y, cfg.geom.source.z}, cfg.geom.source) == doctest::Approx(500.0));
    CHECK(far.geom.source == cfg.geom.source);
    const TrialScenario xs = make_scenario(parse_config("sweep = xi\nsweep_values = 0.04\n"), 0.04, 9);
    CHECK(xs.weights.xi == 0.04);
    const TrialScenario ps = make_scenario(parse_config("sweep = p_total\nsweep_values = 20\n"), 20, 9);
    CHECK(ps.weights.p_s_max == doctest::Approx(0.09));
    CHECK(ps.weights.p_u_max == doctest::Approx(0.01));
}

TEST_CASE("even receiver placement lies on the sphere") {
    const ExperimentConfig cfg = parse_config("rn_placement = even\nn_receivers = 8\n");
    const TrialScenario a = make_scenario(cfg, std::nan(""), 1);
    const TrialScenario b = make_scenario(cfg, std::nan(""), 2);
    const Position3D c = receiver_center(cfg, 300);
    for (int k = 0; k < 8; ++k) {
        CHECK(a.geom.receivers[k] == b.geom.receivers[k]);
        CHECK(distance(a.geom.receivers[k], c) == doctest::Approx(10.0));
    }
}

TEST_CASE("experiment output is deterministic and independent of workers and trial order") {
    ExperimentConfig cfg = parse_config(kSmall);
    const ExperimentOutput a = run_experiment(cfg);
    CHECK(a.records.size() == 3);
    CHECK(a.trials.size() == 9);
    cfg.workers = 3;
    const ExperimentOutput b = run_experiment(cfg);
    CHECK(results_csv(a.records) == results_csv(b.records));
    CHECK(trials_csv(a.trials) == trials_csv(b.trials));

    std::vector<TrialRecord> shuffled = a.trials;
    std::mt19937_64 rng(3);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(results_csv(aggregate(shuffled, cfg)) == results_csv(a.records));

    for (const auto& r : a.records) {
        CHECK(r.trials_used + r.failures_total() == 3);
        if (r.variant != Variant::M3) CHECK(r.mean_eta == 1.0);
    }
}

TEST_CASE("aggregation statistics") {
    ExperimentConfig cfg = parse_config("variants = M2\n");
    std::vector<TrialRecord> t(4);
    const double miss[] = {1.0, 2.0, 3.0, 4.0};
    const double rate[] = {10.0, 12.0, 14.0, 16.0};
    for (int i = 0; i < 4; ++i) {
        t[i].sweep_value = std::nan("");
        t[i].variant = Variant::M2;
        t[i].trial = i;
        t[i].ok = i < 3;
        t[i].failure = i < 3 ? "" : "search";
        t[i].miss_m = miss[i];
        t[i].sum_rate = rate[i];
        t[i].eta = 1.0;
    }
    const auto rec = aggregate(t, cfg);
    REQUIRE(rec.size() == 1);
    CHECK(rec[0].trials_used == 3);
    CHECK(rec[0].failures.at("search") == 1);
    CHECK(rec[0].mean_sum_rate == doctest::Approx(12.0));
    CHECK(rec[0].stderr_sum_rate == doctest::Approx(2.0 / std::sqrt(3.0)));
    CHECK(rec[0].rms_miss_distance == doctest::Approx(std::sqrt(14.0 / 3.0)));
    const std::string csv = results_csv(rec);
    CHECK(csv.find("fail_search") != std::string::npos);
}

TEST_CASE("emitted files") {
    ExperimentConfig cfg = parse_config(kSmall);
    const auto dir = std::filesystem::temp_directory_path() / "uaris_exp_test";
    std::filesystem::remove_all(dir);
    cfg.output_dir = dir.string();
    emit_outputs(run_experiment(cfg), cfg);
    const std::string first = slurp(dir / "results.csv");
    for (const char* f : {"results.csv", "trials.csv", "plot.gp", "run.meta"}) CHECK(std::filesystem::exists(dir / f));
    CHECK(slurp(dir / "run.meta").find(kVersion) != std::string::npos);
    CHECK(slurp(dir / "plot.gp").find("results.csv") != std::string::npos);
    emit_outputs(run_experiment(cfg), cfg);
    CHECK(slurp(dir / "results.csv") == first);
    std::filesystem::remove_all(dir);
}

TEST_CASE("ellipsoid study") {
    ExperimentConfig cfg = parse_config(std::string(kSmall) + "ellipsoid_estimates = 5\n");
    const EllipsoidStudy s = run_ellipsoid_study(cfg);
    CHECK(s.variants.size() == 3);
    for (const auto& v : s.variants) {
        CHECK(v.estimates.size() + v.failures == 5);
        CHECK(v.inside.size() == v.estimates.size());
        CHECK(v.coverage >= 0.0);
        CHECK(v.coverage <= 1.0);
        CHECK(v.bound.position_mse_bound > 0.0);
    }
}

TEST_CASE("search cube contains the source off the lattice") {
    const ExperimentConfig cfg = parse_config("");
    for (std::uint64_t t = 0; t < 20; ++t) {
        const TrialScenario sc = make_scenario(cfg, std::nan(""), t);
        const SearchRegion r = search_region(cfg, sc, t);
        const Position3D s = sc.geom.source;
        CHECK(r.x_range[1] - r.x_range[0] == doctest::Approx(100.0));
        CHECK(s.x >= r.x_range[0] + 25.0 - 1e-9);
        CHECK(s.x <= r.x_range[1] - 25.0 + 1e-9);
        CHECK(s.y >= r.y_range[0] + 25.0 - 1e-9);
        CHECK(s.y <= r.y_range[1] - 25.0 + 1e-9);
        CHECK(s.z >= r.z_range[0]);
        CHECK(s.z <= r.z_range[1]);
        CHECK(distance(Position3D{(r.x_range[0] + r.x_range[1]) / 2, (r.y_range[0] + r.y_range[1]) / 2, s.z}, s) > 0.0);
        CHECK(search_region(cfg, sc, t).x_range == r.x_range);
    }
}

TEST_CASE("localization degrades as the artificial noise grows") {
    // 100 noisy draws per level at a fixed operating point.
    const ExperimentConfig cfg = parse_config("sbl_region_m = 20\nsbl_resolution = 9\n");
    const std::uint64_t tseed = trial_seed(1, 0);
    const TrialScenario sc = make_scenario(cfg, std::nan(""), tseed);
    const ChannelSet ch = synthesize_channels(sc.geom, sc.params, sc.dims, stream_seed(tseed, Stream::Channels));
    OptimizerState st = initial_state(ch, sc.weights, sc.params.an_base_power, Variant::M3, 3);
    const Waveform wf = Waveform::random(sc.params.n_samples, 4);
    const SearchRegion region = search_region(cfg, sc, tseed);
    double prev = 0.0;
    for (double eta : {1.0, 1e2, 1e4}) {
        st.reflection.noise_factor = eta;
        std::vector<std::pair<Position3D, Position3D>> v;
        for (int i = 0; i < 100; ++i) {
            const auto obs = synthesize_observation(sc.geom.source, ch, st.reflection, st.bf, wf, sc.geom, sc.params,
                                                    100 + static_cast<std::uint64_t>(i), true);
            v.push_back({sc.geom.source, localize(normalized_observation(obs), region, sc.geom).p_hat});
        }
        const double rms = rms_miss_distance(v);
        CAPTURE(eta);
        CHECK(rms > prev);
        prev = rms;
    }
}

TEST_CASE("the scheme without a surface gets the whole power budget") {
    ObjectiveWeights w;
    w.p_s_max = 0.9;
    w.p_u_max = 0.1;
    CHECK(scheme_weights(w, Variant::M1).p_s_max == doctest::Approx(1.0));
    CHECK(scheme_weights(w, Variant::M2).p_s_max == 0.9);
    CHECK(scheme_weights(w, Variant::M3).p_s_max == 0.9);
    CHECK(scheme_weights(w, Variant::M3).p_u_max == 0.1);
}
