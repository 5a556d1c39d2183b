// SPDX-License-Identifier: Apache-2.0

#include "uaris/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "uaris/csv.hpp"

namespace uaris {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t root_seed, int trial) {
    return root_seed ^ static_cast<std::uint64_t>(trial);
}

std::uint64_t stream_seed(std::uint64_t tseed, Stream s, std::uint64_t index) {
    return splitmix64(splitmix64(tseed) ^ splitmix64(static_cast<std::uint64_t>(s) * 0x100000000ull + index));
}

namespace {

constexpr double kNoSweep = std::numeric_limits<double>::quiet_NaN();

Position3D on_sphere(std::mt19937_64& rng, const Position3D& c, double r) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Vector3d v;
    do {
        v = {n(rng), n(rng), n(rng)};
    } while (v.norm() < 1e-12);
    return Position3D::from(c.vec() + r * v.normalized());
}

// Fibonacci lattice on the sphere.
std::vector<Position3D> even_sphere(const Position3D& c, double r, int count) {
    std::vector<Position3D> out;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / count;
        const double rad = std::sqrt(1.0 - z * z);
        const double phi = golden * i;
        out.push_back({c.x + r * rad * std::cos(phi), c.y + r * rad * std::sin(phi), c.z + r * z});
    }
    return out;
}

Position3D clip_depth(Position3D p, double h) {
    p.z = std::clamp(p.z, 1.0, h - 1.0);
    return p;
}

std::vector<double> sweep_points(const ExperimentConfig& cfg) {
    if (cfg.sweep == SweepVar::None) return {kNoSweep};
    return cfg.sweep_values;
}

std::string sweep_str(double v) { return std::isnan(v) ? "" : format_double(v); }

template <class F>
void parallel_for(int count, int workers, F&& body) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) body(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

Position3D receiver_center(const ExperimentConfig& cfg, double d_sr) {
    const Position3D& s = cfg.geom.source;
    const Position3D& u = cfg.geom.uaris;
    const double bearing = std::atan2(u.y - s.y, u.x - s.x) + cfg.rn_bearing_offset_deg * std::numbers::pi / 180.0;
    return {s.x + d_sr * std::cos(bearing), s.y + d_sr * std::sin(bearing), cfg.rn_center_depth_m};
}

TrialScenario make_scenario(const ExperimentConfig& cfg, double sweep_value, std::uint64_t tseed) {
    TrialScenario sc;
    sc.geom = cfg.geom;
    sc.params = cfg.params;
    sc.dims = cfg.dims;
    sc.weights = cfg.weights(sweep_value);
    double d_sr = cfg.d_sr_m;
    if (!std::isnan(sweep_value)) {
        if (cfg.sweep == SweepVar::M) sc.dims.M = static_cast<int>(sweep_value);
        if (cfg.sweep == SweepVar::DSr) d_sr = sweep_value;
    }
    const double h = sc.geom.seabed_depth_m;
    const Position3D center = receiver_center(cfg, d_sr);
    std::mt19937_64 rng(stream_seed(tseed, Stream::Placement));
    if (!cfg.explicit_receivers) {
        sc.geom.receivers.clear();
        if (cfg.rn_placement == Placement::Even) {
            for (const auto& p : even_sphere(center, cfg.rn_sphere_radius_m, sc.dims.K))
                sc.geom.receivers.push_back(clip_depth(p, h));
        } else {
            for (int k = 0; k < sc.dims.K; ++k)
                sc.geom.receivers.push_back(clip_depth(on_sphere(rng, center, cfg.rn_sphere_radius_m), h));
        }
    }
    if (!cfg.explicit_eavesdroppers) {
        sc.geom.eavesdroppers.clear();
        for (int j = 0; j < sc.dims.J; ++j)
            sc.geom.eavesdroppers.push_back(clip_depth(on_sphere(rng, center, cfg.d_er_m), h));
    }
    sc.geom.validate();
    return sc;
}

ObjectiveWeights scheme_weights(const ObjectiveWeights& w, Variant v) {
    ObjectiveWeights out = w;
    if (v == Variant::M1) out.p_s_max = w.p_s_max + w.p_u_max;
    return out;
}

SearchRegion search_region(const ExperimentConfig& cfg, const TrialScenario& sc, std::uint64_t tseed) {
    std::mt19937_64 rng(stream_seed(tseed, Stream::Search));
    std::uniform_real_distribution<double> u(-0.25 * cfg.sbl_region_m, 0.25 * cfg.sbl_region_m);
    const double dx = u(rng), dy = u(rng), dz = u(rng);
    const Position3D c = sc.geom.source + Position3D{dx, dy, dz};
    return SearchRegion::cube(c, cfg.sbl_region_m, cfg.sbl_resolution, sc.geom.seabed_depth_m);
}

TrialRecord run_trial(const ExperimentConfig& cfg, double sweep_value, Variant variant, int trial) {
    TrialRecord r;
    r.sweep_value = sweep_value;
    r.variant = variant;
    r.trial = trial;
    const std::uint64_t tseed = trial_seed(cfg.root_seed, trial);
    try {
        const TrialScenario sc = make_scenario(cfg, sweep_value, tseed);
        r.p_true = sc.geom.source;
        const ChannelSet ch = synthesize_channels(sc.geom, sc.params, sc.dims, stream_seed(tseed, Stream::Channels));
        SolverSettings solver = cfg.solver;
        solver.seed = stream_seed(tseed, Stream::Theta);
        const OptimizerState st =
            optimize(ch, scheme_weights(sc.weights, variant), sc.params.an_base_power, solver, variant);
        r.sum_rate = sum_rate(sinrs(ch, st.reflection, st.bf, sc.weights.bg_noise));
        r.r3 = st.r3_history.back();
        r.eta = st.reflection.noise_factor;
        r.iterations = st.iteration;

        const Waveform wf = Waveform::random(sc.params.n_samples, stream_seed(tseed, Stream::Waveform));
        const EavesdropperObservation obs = synthesize_observation(sc.geom.source, ch, st.reflection, st.bf, wf, sc.geom,
                                                                   sc.params, stream_seed(tseed, Stream::Noise));
        const SearchRegion region = search_region(cfg, sc, tseed);
        const LocalizationResult loc = localize(cfg.sbl_normalize ? normalized_observation(obs) : obs, region, sc.geom);
        r.p_hat = loc.p_hat;
        r.miss_m = distance(loc.p_hat, sc.geom.source);

        const CrlbResult cr = crlb(build_fim(true_parameters(obs), FimModel{sc.geom, obs.omega}), sc.geom.source);
        r.crlb_position_bound = cr.position_mse_bound;
        r.crlb_ill_conditioned = cr.ill_conditioned;
        r.ok = true;
    } catch (const InfeasibleError&) {
        r.failure = "infeasible";
    } catch (const DegenerateGeometryError&) {
        r.failure = "degenerate";
    } catch (const SearchFailure&) {
        r.failure = "search";
    } catch (const DomainError&) {
        r.failure = "other";
    } catch (const DimensionError&) {
        r.failure = "other";
    } catch (const Error&) {
        r.failure = "nonmonotone";
    } catch (const std::exception&) {
        r.failure = "other";
    }
    return r;
}

const std::vector<std::string>& failure_causes() {
    static const std::vector<std::string> c = {"infeasible", "degenerate", "search", "nonmonotone", "other"};
    return c;
}

int ResultRecord::failures_total() const {
    int n = 0;
    for (const auto& [k, v] : failures) n += v;
    return n;
}

std::vector<ResultRecord> aggregate(const std::vector<TrialRecord>& trials, const ExperimentConfig& cfg) {
    std::vector<ResultRecord> out;
    for (double sv : sweep_points(cfg)) {
        for (Variant v : cfg.variants) {
            ResultRecord rec;
            rec.sweep_value = sv;
            rec.variant = v;
            for (const auto& c : failure_causes()) rec.failures[c] = 0;
            std::vector<double> rates, miss2, bounds, etas;
            for (const auto& t : trials) {
                const bool same = std::isnan(sv) ? std::isnan(t.sweep_value) : t.sweep_value == sv;
                if (!same || t.variant != v) continue;
                if (!t.ok) {
                    ++rec.failures[t.failure];
                    continue;
                }
                rates.push_back(t.sum_rate);
                miss2.push_back(t.miss_m * t.miss_m);
                bounds.push_back(t.crlb_position_bound);
                etas.push_back(t.eta);
            }
            // Sorted so the sums do not depend on the order trials finished in.
            for (auto* x : {&rates, &miss2, &bounds, &etas}) std::sort(x->begin(), x->end());
            const int n = static_cast<int>(rates.size());
            rec.trials_used = n;
            auto mean = [](const std::vector<double>& x) {
                double s = 0.0;
                for (double v : x) s += v;
                return x.empty() ? std::numeric_limits<double>::quiet_NaN() : s / x.size();
            };
            auto sem = [&](const std::vector<double>& x) {
                if (x.size() < 2) return 0.0;
                const double m = mean(x);
                double s = 0.0;
                for (double v : x) s += (v - m) * (v - m);
                return std::sqrt(s / (x.size() - 1) / x.size());
            };
            rec.mean_sum_rate = mean(rates);
            rec.stderr_sum_rate = sem(rates);
            const double m2 = mean(miss2);
            rec.rms_miss_distance = std::sqrt(m2);
            // Delta method on sqrt(mean(d^2)).
            rec.stderr_rms_miss = rec.rms_miss_distance > 0 ? sem(miss2) / (2.0 * rec.rms_miss_distance) : 0.0;
            rec.mean_crlb_position_bound = mean(bounds);
            rec.mean_eta = mean(etas);
            out.push_back(rec);
        }
    }
    return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto points = sweep_points(cfg);
    const int nv = static_cast<int>(cfg.variants.size());
    const int total = static_cast<int>(points.size()) * nv * cfg.trials;
    ExperimentOutput out;
    out.trials.resize(static_cast<std::size_t>(total));
    parallel_for(total, cfg.workers, [&](int i) {
        const int t = i % cfg.trials;
        const int v = (i / cfg.trials) % nv;
        const int s = i / (cfg.trials * nv);
        out.trials[static_cast<std::size_t>(i)] = run_trial(cfg, points[s], cfg.variants[v], t);
    });
    out.records = aggregate(out.trials, cfg);
    return out;
}

std::string results_csv(const std::vector<ResultRecord>& records) {
    std::vector<std::string> header = {"sweep_value",      "variant",          "mean_sum_rate",
                                       "stderr_sum_rate",  "rms_miss_m",       "stderr_rms_miss_m",
                                       "mean_crlb_pos_m2", "mean_eta",         "trials_used"};
    for (const auto& c : failure_causes()) header.push_back("fail_" + c);
    CsvTable t(header);
    for (const auto& r : records) {
        std::vector<std::string> row = {sweep_str(r.sweep_value),
                                        to_string(r.variant),
                                        format_double(r.mean_sum_rate),
                                        format_double(r.stderr_sum_rate),
                                        format_double(r.rms_miss_distance),
                                        format_double(r.stderr_rms_miss),
                                        format_double(r.mean_crlb_position_bound),
                                        format_double(r.mean_eta),
                                        std::to_string(r.trials_used)};
        for (const auto& c : failure_causes()) row.push_back(std::to_string(r.failures.at(c)));
        t.add_row(row);
    }
    return t.str();
}

std::string trials_csv(const std::vector<TrialRecord>& trials) {
    CsvTable t({"sweep_value", "variant", "trial", "ok", "failure", "sum_rate", "r3", "eta", "iterations", "true_x",
                "true_y", "true_z", "est_x", "est_y", "est_z", "miss_m", "crlb_pos_m2", "crlb_ill_conditioned"});
    for (const auto& r : trials)
        t.add_row({sweep_str(r.sweep_value), to_string(r.variant), std::to_string(r.trial), r.ok ? "1" : "0",
                   r.failure, format_double(r.sum_rate), format_double(r.r3), format_double(r.eta),
                   std::to_string(r.iterations), format_double(r.p_true.x), format_double(r.p_true.y),
                   format_double(r.p_true.z), format_double(r.p_hat.x), format_double(r.p_hat.y),
                   format_double(r.p_hat.z), format_double(r.miss_m), format_double(r.crlb_position_bound),
                   r.crlb_ill_conditioned ? "1" : "0"});
    return t.str();
}

std::string plot_script(const ExperimentConfig& cfg) {
    std::string xlabel = "trial set";
    switch (cfg.sweep) {
        case SweepVar::DSr: xlabel = "source-receiver distance d_{SR} (m)"; break;
        case SweepVar::Xi: xlabel = "weight {/Symbol x}"; break;
        case SweepVar::PTotal: xlabel = "total power P_t (dBm)"; break;
        case SweepVar::M: xlabel = "UARIS elements M"; break;
        default: break;
    }
    std::string variants;
    for (std::size_t i = 0; i < cfg.variants.size(); ++i) variants += std::string(i ? " " : "") + to_string(cfg.variants[i]);
    std::ostringstream o;
    o << "# gnuplot script generated by " << kVersion << "\n"
      << "set datafile separator ','\n"
      << "set terminal pngcairo size 1200,480\n"
      << "set output 'results.png'\n"
      << "set multiplot layout 1,2\n"
      << "set grid\n"
      << "set key top left\n"
      << "set xlabel '" << xlabel << "'\n"
      << (cfg.sweep == SweepVar::None ? "set xrange [-0.5:0.5]\n" : "")
      << "variants = '" << variants << "'\n"
      << "sel(v, x) = (strcol(2) eq v) ? x : NaN\n"
      << "set ylabel 'sum rate (bit/s/Hz)'\n"
      << "plot for [v in variants] 'results.csv' every ::1 using (sel(v, $1 == $1 ? $1 : 0)):3:4 "
         "with yerrorlines title v\n"
      << "set ylabel 'RMS miss distance (m)'\n"
      << "plot for [v in variants] 'results.csv' every ::1 using (sel(v, $1 == $1 ? $1 : 0)):5:6 "
         "with yerrorlines title v\n"
      << "unset multiplot\n";
    return o.str();
}

std::string run_meta(const ExperimentConfig& cfg) {
    std::ostringstream o;
    o << "version = " << kVersion << "\n"
      << "root_seed = " << cfg.root_seed << "\n"
      << "# effective configuration\n"
      << cfg.serialize();
    return o.str();
}

void emit_outputs(const ExperimentOutput& out, const ExperimentConfig& cfg) {
    if (out.records.empty()) throw DomainError("no records to write");
    ensure_writable_dir(cfg.output_dir);
    const std::filesystem::path dir(cfg.output_dir);
    write_file_atomic((dir / "results.csv").string(), results_csv(out.records));
    write_file_atomic((dir / "trials.csv").string(), trials_csv(out.trials));
    write_file_atomic((dir / "plot.gp").string(), plot_script(cfg));
    write_file_atomic((dir / "run.meta").string(), run_meta(cfg));
}

EllipsoidStudy run_ellipsoid_study(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.sweep != SweepVar::None) throw ConfigError("the ellipsoid study needs a fixed scenario (sweep = none)");
    const std::uint64_t tseed = trial_seed(cfg.root_seed, 0);
    const TrialScenario sc = make_scenario(cfg, kNoSweep, tseed);
    const ChannelSet ch = synthesize_channels(sc.geom, sc.params, sc.dims, stream_seed(tseed, Stream::Channels));
    const Waveform wf = Waveform::random(sc.params.n_samples, stream_seed(tseed, Stream::Waveform));
    const SearchRegion region = search_region(cfg, sc, tseed);

    EllipsoidStudy study;
    study.p_true = sc.geom.source;
    for (Variant v : cfg.variants) {
        SolverSettings solver = cfg.solver;
        solver.seed = stream_seed(tseed, Stream::Theta);
        const OptimizerState st = optimize(ch, scheme_weights(sc.weights, v), sc.params.an_base_power, solver, v);
        EllipsoidVariantResult res;
        res.variant = v;
        res.eta = st.reflection.noise_factor;
        const EavesdropperObservation mean_obs =
            synthesize_observation(sc.geom.source, ch, st.reflection, st.bf, wf, sc.geom, sc.params, 0, false);
        res.bound = crlb(build_fim(true_parameters(mean_obs), FimModel{sc.geom, mean_obs.omega}), sc.geom.source);

        const int n = cfg.ellipsoid_estimates;
        std::vector<Position3D> est(static_cast<std::size_t>(n));
        std::vector<int> ok(static_cast<std::size_t>(n), 0);
        parallel_for(n, cfg.workers, [&](int e) {
            try {
                const EavesdropperObservation obs =
                    synthesize_observation(sc.geom.source, ch, st.reflection, st.bf, wf, sc.geom, sc.params,
                                           stream_seed(tseed, Stream::Noise, static_cast<std::uint64_t>(e) + 1));
                est[static_cast<std::size_t>(e)] =
                    localize(cfg.sbl_normalize ? normalized_observation(obs) : obs, region, sc.geom).p_hat;
                ok[static_cast<std::size_t>(e)] = 1;
            } catch (const Error&) {
            }
        });
        int inside = 0;
        for (int e = 0; e < n; ++e) {
            if (!ok[static_cast<std::size_t>(e)]) {
                ++res.failures;
                continue;
            }
            const Position3D& p = est[static_cast<std::size_t>(e)];
            const bool in = res.bound.ellipsoid_95.contains(p);
            res.estimates.push_back(p);
            res.inside.push_back(in);
            inside += in;
        }
        res.coverage = res.estimates.empty() ? 0.0 : static_cast<double>(inside) / res.estimates.size();
        study.variants.push_back(std::move(res));
    }
    return study;
}

void emit_ellipsoid_outputs(const EllipsoidStudy& study, const ExperimentConfig& cfg) {
    if (study.variants.empty()) throw DomainError("no ellipsoid results to write");
    ensure_writable_dir(cfg.output_dir);
    const std::filesystem::path dir(cfg.output_dir);
    CsvTable e({"variant", "eta", "center_x", "center_y", "center_z", "axis_1", "axis_2", "axis_3", "r11", "r21",
                "r31", "r12", "r22", "r32", "r13", "r23", "r33", "volume_m3", "crlb_pos_m2", "coverage",
                "estimates", "failures", "ill_conditioned"});
    CsvTable s({"variant", "index", "x", "y", "z", "inside"});
    for (const auto& v : study.variants) {
        const Ellipsoid& el = v.bound.ellipsoid_95;
        std::vector<std::string> row = {to_string(v.variant), format_double(v.eta), format_double(el.center.x),
                                        format_double(el.center.y), format_double(el.center.z)};
        for (int i = 0; i < 3; ++i) row.push_back(format_double(el.axes(i)));
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < 3; ++r) row.push_back(format_double(el.rotation(r, c)));
        row.push_back(format_double(el.volume()));
        row.push_back(format_double(v.bound.position_mse_bound));
        row.push_back(format_double(v.coverage));
        row.push_back(std::to_string(v.estimates.size()));
        row.push_back(std::to_string(v.failures));
        row.push_back(v.bound.ill_conditioned ? "1" : "0");
        e.add_row(row);
        for (std::size_t i = 0; i < v.estimates.size(); ++i)
            s.add_row({to_string(v.variant), std::to_string(i), format_double(v.estimates[i].x),
                       format_double(v.estimates[i].y), format_double(v.estimates[i].z), v.inside[i] ? "1" : "0"});
    }
    write_file_atomic((dir / "ellipsoid.csv").string(), e.str());
    write_file_atomic((dir / "estimates.csv").string(), s.str());
    std::ostringstream gp;
    gp << "# gnuplot script generated by " << kVersion << "\n"
       << "set datafile separator ','\n"
       << "set terminal pngcairo size 800,700\n"
       << "set output 'estimates.png'\n"
       << "set xlabel 'x (m)'\nset ylabel 'y (m)'\nset zlabel 'z (m)'\n"
       << "sel(v, x) = (strcol(1) eq v) ? x : NaN\n"
       << "splot for [v in '";
    for (std::size_t i = 0; i < study.variants.size(); ++i) gp << (i ? " " : "") << to_string(study.variants[i].variant);
    gp << "'] 'estimates.csv' every ::1 using (sel(v, $3)):4:5 with points title v\n";
    write_file_atomic((dir / "plot.gp").string(), gp.str());
    write_file_atomic((dir / "run.meta").string(), run_meta(cfg));
}

}  // namespace uaris
