// SPDX-License-Identifier: Apache-2.0

#include "uaris/fp_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "uaris/csv.hpp"

namespace uaris {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::M1: return "M1";
        case Variant::M2: return "M2";
        default: return "M3";
    }
}

Variant variant_from_string(const std::string& s) {
    if (s == "M1") return Variant::M1;
    if (s == "M2") return Variant::M2;
    if (s == "M3") return Variant::M3;
    throw ConfigError("unknown variant '" + s + "' (expected M1, M2 or M3)");
}

void SolverSettings::validate() const {
    if (max_iters < 1) throw DomainError("max_iters must be positive");
    if (!(rel_tol > 0 && mu_tol > 0 && qcqp_tol > 0)) throw DomainError("solver tolerances must be positive");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Snapshot {
    LinkTerms lt;
    double c = 1.0;
    RVec sig;    // |x_kk|^2
    RVec noise;  // sum_{a != k} |x_ka|^2 + leak + sigma^2
    RVec den;    // weighted R4 denominator
};

Snapshot snapshot(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts) {
    Snapshot s;
    s.lt = link_terms(ch, st.reflection, st.bf);
    s.c = privacy_gain(st.reflection, wts.xi);
    const int K = static_cast<int>(s.lt.x.rows());
    s.sig.resize(K);
    s.noise.resize(K);
    s.den.resize(K);
    for (int k = 0; k < K; ++k) {
        const RVec row = s.lt.x.row(k).cwiseAbs2().transpose();
        s.sig(k) = row(k);
        s.noise(k) = row.sum() - row(k) + s.lt.an_leak(k) + wts.bg_noise;
        s.den(k) = s.noise(k) + denominator_weight(k, k, s.c, wts.form) * row(k);
    }
    return s;
}

double r4_of(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts) {
    return objective_r4(ch, st.reflection, st.bf, st.zeta, st.chi, wts);
}

}  // namespace

RVec update_zeta(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts) {
    const Snapshot s = snapshot(st, ch, wts);
    const int K = static_cast<int>(s.sig.size());
    RVec z(K);
    for (int k = 0; k < K; ++k) {
        if (wts.form == FpForm::Exact) {
            z(k) = s.c * s.sig(k) / s.noise(k);
        } else {
            // Stationary point of log2(1+z) - z + (1+z) q.
            const double q = std::min(s.c * s.sig(k) / s.den(k), 1.0 - 1e-12);
            z(k) = 1.0 / (std::numbers::ln2 * (1.0 - q)) - 1.0;
        }
    }
    return z;
}

CVec update_chi(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts) {
    const Snapshot s = snapshot(st, ch, wts);
    const int K = static_cast<int>(s.sig.size());
    require_dim(st.zeta.size() == K, "zeta must have length K");
    CVec chi(K);
    for (int k = 0; k < K; ++k) chi(k) = std::sqrt(s.c * (1.0 + st.zeta(k))) * s.lt.x(k, k) / s.den(k);
    return chi;
}

EtaUpdate update_eta(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts) {
    const Snapshot s = snapshot(st, ch, wts);
    const int K = static_cast<int>(s.sig.size());
    const ReflectionConfig& rc = st.reflection;
    const double sv2 = rc.an_base_power;
    const double base_gain = std::pow(sv2, wts.xi);

    // R4(eta) = P eta^{xi/2} - Q eta - R eta^xi + const
    double P = 0.0, Q = 0.0, R = 0.0;
    for (int k = 0; k < K; ++k) {
        P += 2.0 * std::sqrt(base_gain * (1.0 + st.zeta(k))) * std::real(std::conj(st.chi(k)) * s.lt.x(k, k));
        Q += std::norm(st.chi(k)) * s.lt.an_leak(k) / rc.noise_factor;
        if (wts.form == FpForm::Exact) R += std::norm(st.chi(k)) * base_gain * s.sig(k);
    }

    EtaUpdate e;
    const double theta2 = rc.theta.squaredNorm();
    double reflected = 0.0;
    for (const auto& w : st.bf.w) reflected += rc.theta.cwiseAbs2().dot((ch.H_su * w).cwiseAbs2());
    // The relative slack keeps the leftover budget for w nonnegative after
    // rounding when eta sits on the cap.
    e.cap = theta2 > 0 ? (wts.p_u_max - reflected) * (1.0 - 1e-12) / (theta2 * sv2) : kInf;
    e.c2_vacuous = !(theta2 > 0);

    const double xi = wts.xi;
    if (xi == 0.0) {
        e.eta_star = 1.0;
    } else if (!(P > 0)) {
        e.bad_base = true;
        e.eta_star = 1.0;
    } else if (wts.form == FpForm::Published) {
        e.eta_star = Q > 0 ? std::pow(2.0 / xi * Q / P, 2.0 / (xi - 2.0)) : kInf;
    } else if (Q == 0.0 && R == 0.0) {
        e.eta_star = kInf;
    } else {
        // g is strictly decreasing in eta and shares the sign of dR4/deta.
        auto g = [&](double le) {
            const double eta = std::exp(le);
            return 0.5 * xi * P - Q * std::pow(eta, 1.0 - 0.5 * xi) - xi * R * std::pow(eta, 0.5 * xi);
        };
        double lo = -50.0, hi = 50.0;
        while (g(hi) > 0 && hi < 700.0) hi += 50.0;
        while (g(lo) < 0 && lo > -700.0) lo -= 50.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            (g(mid) > 0 ? lo : hi) = mid;
        }
        e.eta_star = std::exp(0.5 * (lo + hi));
    }
    if (e.c2_vacuous && !std::isfinite(e.eta_star))
        e.eta = rc.noise_factor;
    else
        e.eta = std::max(1.0, std::min(e.eta_star, e.cap));
    return e;
}

double QcqpProblem::quad_c(const CVec& w) const {
    double q = 0.0;
    for (int k = 0; k < K(); ++k) {
        const CVec wk = w.segment(k * T(), T());
        q += std::real(wk.dot(C0 * wk));
    }
    return q;
}

double QcqpProblem::objective(const CVec& w) const {
    double q = 2.0 * std::real(alpha.dot(w));
    for (int k = 0; k < K(); ++k) {
        const CVec wk = w.segment(k * T(), T());
        q -= std::real(wk.dot(B[k] * wk));
    }
    return q;
}

QcqpSolution solve_qcqp(const QcqpProblem& prob, double tol) {
    const int K = prob.K();
    const int T = prob.T();
    require_dim(prob.alpha.size() == K * T, "alpha length must equal K*T");
    if (!(prob.p_s > 0)) throw InfeasibleError("source power budget must be positive");
    if (prob.p_c < 0) throw InfeasibleError("UARIS power budget (C2) is negative");
    const bool has_c = prob.C0.norm() > 0 && std::isfinite(prob.p_c);
    const CMat I = CMat::Identity(T, T);

    // w(l1, l2); returns false when the shifted matrix is not positive definite.
    auto solve = [&](double l1, double l2, CVec& w) {
        w.resize(K * T);
        for (int k = 0; k < K; ++k) {
            Eigen::LLT<CMat> llt(prob.B[k] + l1 * I + l2 * prob.C0);
            if (llt.info() != Eigen::Success) return false;
            w.segment(k * T, T) = llt.solve(prob.alpha.segment(k * T, T));
        }
        return w.allFinite();
    };
    auto power = [&](double l1, double l2) {
        CVec w;
        return solve(l1, l2, w) ? w.squaredNorm() : kInf;
    };
    auto cpow = [&](double l1, double l2) {
        CVec w;
        return solve(l1, l2, w) ? prob.quad_c(w) : kInf;
    };
    // Smallest multiplier whose solution satisfies f(m) <= budget.
    auto min_multiplier = [&](auto&& f, double budget, double start_hi) {
        if (f(0.0) <= budget) return 0.0;
        double lo = 0.0, hi = std::max(start_hi, 1e-300);
        int guard = 0;
        while (f(hi) > budget && guard++ < 2000) {
            lo = hi;
            hi *= 2.0;
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double v = f(mid);
            if (v > budget)
                lo = mid;
            else
                hi = mid;
            if (v <= budget && v >= budget * (1.0 - 0.01 * tol)) return mid;
            if (hi - lo <= 1e-15 * hi) break;
        }
        return hi;
    };

    const double anorm = prob.alpha.norm();
    double l1 = 0.0, l2 = 0.0;
    QcqpSolution sol;
    for (int round = 0; round < 500; ++round) {
        sol.rounds = round + 1;
        const double n1 = min_multiplier([&](double m) { return power(m, l2); }, prob.p_s,
                                         anorm / std::sqrt(prob.p_s));
        double n2 = 0.0;
        if (has_c) {
            const double scale = prob.C0.norm();
            n2 = min_multiplier([&](double m) { return cpow(n1, m); }, prob.p_c,
                                anorm * std::sqrt(scale / std::max(prob.p_c, 1e-300)) / scale);
        }
        const bool still = std::abs(n1 - l1) <= 1e-12 * std::max(1.0, n1) && std::abs(n2 - l2) <= 1e-12 * std::max(1.0, n2);
        l1 = n1;
        l2 = n2;
        if (still) break;
        // Complementary slackness reached on both constraints.
        CVec w;
        if (solve(l1, l2, w)) {
            const double p1 = w.squaredNorm();
            const double p2 = has_c ? prob.quad_c(w) : 0.0;
            const bool ok1 = p1 <= prob.p_s * (1 + 1e-12) && (l1 == 0 || p1 >= prob.p_s * (1 - tol));
            const bool ok2 = !has_c || (p2 <= prob.p_c * (1 + 1e-12) && (l2 == 0 || p2 >= prob.p_c * (1 - tol)));
            if (ok1 && ok2) break;
        }
    }
    if (!solve(l1, l2, sol.w)) throw InfeasibleError("QCQP inner system is singular at the final multipliers");
    // Enforce both constraints exactly; the scale factor differs from 1 only
    // by the bisection tolerance.
    double t = 1.0;
    const double p1 = sol.w.squaredNorm();
    if (p1 > prob.p_s) t = std::min(t, std::sqrt(prob.p_s / p1));
    if (has_c) {
        const double p2 = prob.quad_c(sol.w);
        if (p2 > prob.p_c) t = std::min(t, std::sqrt(prob.p_c / p2));
    }
    sol.w *= t;
    sol.lambda1 = l1;
    sol.lambda2 = l2;
    sol.objective = prob.objective(sol.w);
    return sol;
}

QcqpProblem w_subproblem(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts) {
    const int K = static_cast<int>(ch.h_direct.size());
    const int T = static_cast<int>(ch.H_su.cols());
    const auto hb = effective_channels(ch, st.reflection.theta);
    const double c = privacy_gain(st.reflection, wts.xi);
    QcqpProblem p;
    p.alpha.resize(K * T);
    p.B.assign(K, CMat::Zero(T, T));
    for (int k = 0; k < K; ++k) {
        const CVec hk = hb[k].adjoint();
        p.alpha.segment(k * T, T) = std::sqrt(c * (1.0 + st.zeta(k))) * st.chi(k) * hk;
        const CMat outer = hk * hk.adjoint();
        for (int a = 0; a < K; ++a) p.B[a] += std::norm(st.chi(k)) * denominator_weight(k, a, c, wts.form) * outer;
    }
    const RVec th2 = st.reflection.theta.cwiseAbs2();
    p.C0 = ch.H_su.adjoint() * th2.asDiagonal() * ch.H_su;
    p.C0 = 0.5 * (p.C0 + p.C0.adjoint()).eval();
    p.p_s = wts.p_s_max;
    p.p_c = wts.p_u_max - th2.sum() * st.reflection.an_power();
    return p;
}

BeamformerSet update_w(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts,
                       const SolverSettings& settings) {
    const QcqpProblem p = w_subproblem(st, ch, wts);
    if (p.p_c < 0)
        throw InfeasibleError("C2 cannot hold: UARIS noise power alone exceeds the UARIS budget");
    const QcqpSolution sol = solve_qcqp(p, settings.qcqp_tol);
    return BeamformerSet::from_stacked(sol.w, p.K(), p.T());
}

ThetaSolution solve_theta(const ThetaProblem& prob, double mu_tol) {
    const int M = static_cast<int>(prob.v.size());
    require_dim(prob.Lambda.rows() == M && prob.Psi.rows() == M, "theta subproblem dimensions disagree");
    if (!(prob.p_u > 0)) throw InfeasibleError("UARIS power budget must be positive");
    if (!prob.Lambda.allFinite() || !prob.Psi.allFinite() || !prob.v.allFinite())
        throw DomainError("theta subproblem is not finite (eta or theta diverged)");
    Eigen::LLT<CMat> psi(prob.Psi);
    if (psi.info() != Eigen::Success) throw DomainError("Psi must be positive definite");
    const CMat L = psi.matrixL();
    // Whiten: y = L^H theta turns the constraint into ||y||^2 <= p_u.
    CMat Lt = L.triangularView<Eigen::Lower>().solve(prob.Lambda);
    Lt = L.triangularView<Eigen::Lower>().solve(CMat(Lt.adjoint())).adjoint();
    Lt = 0.5 * (Lt + Lt.adjoint()).eval();
    const CVec vt = L.triangularView<Eigen::Lower>().solve(prob.v);
    Eigen::SelfAdjointEigenSolver<CMat> es(Lt);
    const RVec gam = es.eigenvalues();
    const CVec b = es.eigenvectors().adjoint() * vt;
    const double gmax = std::max(gam.cwiseAbs().maxCoeff(), 1e-300);

    auto norm2 = [&](double mu) {
        double s = 0.0;
        for (int i = 0; i < M; ++i) {
            const double d = gam(i) + mu;
            const double bi = std::norm(b(i));
            if (bi == 0.0) continue;
            if (!(d > 1e-14 * gmax)) return kInf;
            s += bi / (d * d);
        }
        return s;
    };
    ThetaSolution sol;
    double mu = 0.0;
    if (norm2(0.0) > prob.p_u) {
        sol.binding = true;
        double lo = 0.0;
        double hi = b.norm() / std::sqrt(prob.p_u) + 1e-300;
        for (int guard = 0; norm2(hi) > prob.p_u; ++guard) {
            if (guard > 2100) throw DomainError("theta multiplier bracket did not close");
            hi *= 2.0;
        }
        for (int it = 0; it < 400; ++it) {
            const double fh = norm2(hi);
            if (fh >= prob.p_u * (1.0 - mu_tol)) break;
            const double mid = 0.5 * (lo + hi);
            if (norm2(mid) > prob.p_u)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-16 * hi) break;
        }
        mu = hi;
    }
    CVec y(M);
    for (int i = 0; i < M; ++i) {
        const double d = gam(i) + mu;
        y(i) = (std::norm(b(i)) == 0.0 || !(d > 1e-14 * gmax)) ? cd(0.0) : b(i) / d;
    }
    y = es.eigenvectors() * y;
    sol.theta = L.adjoint().triangularView<Eigen::Upper>().solve(y);
    sol.mu = mu;
    return sol;
}

ThetaProblem theta_subproblem(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts) {
    const int K = static_cast<int>(ch.h_direct.size());
    const int M = static_cast<int>(ch.H_su.rows());
    const double c = privacy_gain(st.reflection, wts.xi);
    const double an = st.reflection.an_power();
    std::vector<CVec> Hw;
    for (const auto& w : st.bf.w) Hw.push_back(ch.H_su * w);

    ThetaProblem p;
    p.Lambda = CMat::Zero(M, M);
    p.v = CVec::Zero(M);
    RVec incident = RVec::Zero(M);
    for (const auto& x : Hw) incident += x.cwiseAbs2();
    for (int k = 0; k < K; ++k) {
        const CVec gk_conj = ch.g_ru[k].conjugate();
        const double chi2 = std::norm(st.chi(k));
        const cd lead = std::sqrt(c * (1.0 + st.zeta(k))) * st.chi(k);
        for (int a = 0; a < K; ++a) {
            const CVec d = gk_conj.cwiseProduct(Hw[a]);  // x_ka = h_k^H w_a + d^T theta
            const cd x0 = ch.h_direct[k].dot(st.bf.w[a]);
            const double om = denominator_weight(k, a, c, wts.form);
            p.Lambda.noalias() += chi2 * om * (d.conjugate() * d.transpose());
            p.v -= chi2 * om * x0 * d.conjugate();
            if (a == k) p.v += lead * d.conjugate();
        }
        p.Lambda.diagonal() += (chi2 * an * ch.g_ru[k].cwiseAbs2()).cast<cd>();
    }
    p.Lambda = 0.5 * (p.Lambda + p.Lambda.adjoint()).eval();
    p.Psi = (incident.array() + an).matrix().cast<cd>().asDiagonal();
    p.p_u = wts.p_u_max;
    return p;
}

ThetaSolution update_theta(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts,
                           const SolverSettings& settings) {
    return solve_theta(theta_subproblem(st, ch, wts), settings.mu_tol);
}

OptimizerState initial_state(const ChannelSet& ch, const ObjectiveWeights& wts, double an_base_power,
                             Variant variant, std::uint64_t seed) {
    ch.validate();
    const Dims d = ch.dims();
    d.validate();
    OptimizerState st;
    st.reflection.an_base_power = an_base_power;
    st.reflection.noise_factor = 1.0;
    st.reflection.theta = CVec::Zero(d.M);
    if (variant != Variant::M1) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
        for (int m = 0; m < d.M; ++m) st.reflection.theta(m) = std::polar(1.0, u(rng));
    }
    const auto hb = effective_channels(ch, st.reflection.theta);
    const double amp = std::sqrt(wts.p_s_max / d.K);
    for (int k = 0; k < d.K; ++k) {
        const double n = hb[k].norm();
        if (!(n > 0)) throw DomainError("effective channel is zero at initialization");
        st.bf.w.push_back(amp * CVec(hb[k].adjoint()) / n);
    }
    if (variant != Variant::M1) {
        const double p0 = uaris_output_power(st.reflection, ch.H_su, st.bf);
        st.reflection.theta *= std::sqrt(0.9 * wts.p_u_max / p0);
    }
    st.zeta = update_zeta(st, ch, wts);
    st.chi = update_chi(st, ch, wts);
    return st;
}

double fp_merit(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts) {
    OptimizerState tmp = st;
    tmp.zeta = update_zeta(tmp, ch, wts);
    tmp.chi = update_chi(tmp, ch, wts);
    return r4_of(tmp, ch, wts);
}

namespace {

// Golden-section search of R4(eta, theta*(eta)) over log(eta) in [0, log(4 eta)],
// with w and the auxiliary variables held fixed. Returns the best candidate
// seen, or the input state when nothing beats it.
OptimizerState joint_eta_theta_step(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts,
                                    const SolverSettings& settings) {
    OptimizerState best = st;
    double best_val = r4_of(st, ch, wts);
    auto eval = [&](double le) {
        OptimizerState cand = st;
        cand.reflection.noise_factor = std::exp(le);
        try {
            cand.reflection.theta = update_theta(cand, ch, wts, settings).theta;
        } catch (const InfeasibleError&) {
            return -kInf;
        }
        const double v = r4_of(cand, ch, wts);
        if (v > best_val) {
            best_val = v;
            best = std::move(cand);
        }
        return v;
    };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = std::log(st.reflection.noise_factor) + std::log(4.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = eval(c), fd = eval(d);
    for (int it = 0; it < 10; ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = eval(d);
        }
    }
    eval(0.0);
    return best;
}

}  // namespace

OptimizerState optimize(const ChannelSet& ch, const ObjectiveWeights& wts, double an_base_power,
                        const SolverSettings& settings, Variant variant) {
    wts.validate();
    settings.validate();
    OptimizerState st = initial_state(ch, wts, an_base_power, variant, settings.seed);

    auto record = [&](double merit) {
        TraceRow row;
        row.iteration = st.iteration;
        row.r3 = objective_r3(ch, st.reflection, st.bf, wts);
        row.r4 = merit;
        row.eta = st.reflection.noise_factor;
        row.source_power = st.bf.total_power();
        row.uaris_power = uaris_output_power(st.reflection, ch.H_su, st.bf);
        st.trace.push_back(row);
        st.r3_history.push_back(row.r3);
        st.merit_history.push_back(merit);
    };
    record(fp_merit(st, ch, wts));

    for (int it = 1; it <= settings.max_iters; ++it) {
        st.iteration = it;
        st.zeta = update_zeta(st, ch, wts);
        st.chi = update_chi(st, ch, wts);

        if (variant == Variant::M3) {
            const EtaUpdate e = update_eta(st, ch, wts);
            if (e.c2_vacuous || e.bad_base) ++st.eta_flags;
            OptimizerState cand = st;
            cand.reflection.noise_factor = e.eta;
            if (r4_of(cand, ch, wts) >= r4_of(st, ch, wts))
                st = std::move(cand);
            else
                ++st.rejected_steps;
        }
        {
            OptimizerState cand = st;
            cand.bf = update_w(st, ch, wts, settings);
            if (r4_of(cand, ch, wts) >= r4_of(st, ch, wts))
                st = std::move(cand);
            else
                ++st.rejected_steps;
        }
        if (variant != Variant::M1) {
            OptimizerState cand = st;
            cand.reflection.theta = update_theta(st, ch, wts, settings).theta;
            if (r4_of(cand, ch, wts) >= r4_of(st, ch, wts))
                st = std::move(cand);
            else
                ++st.rejected_steps;
        }
        if (variant == Variant::M3 && settings.joint_eta_theta) st = joint_eta_theta_step(st, ch, wts, settings);

        const double prev = st.merit_history.back();
        const double merit = fp_merit(st, ch, wts);
        record(merit);
        if (merit < prev - settings.monotone_slack * std::max(1.0, std::abs(prev)))
            throw Error("objective decreased between iterations (" + format_double(prev) + " -> " +
                        format_double(merit) + ")");
        if (std::abs(merit - prev) <= settings.rel_tol * std::abs(prev)) {
            st.converged = true;
            break;
        }
    }
    st.zeta = update_zeta(st, ch, wts);
    st.chi = update_chi(st, ch, wts);
    return st;
}

std::string trace_csv(const OptimizerState& st) {
    CsvTable t({"iteration", "r3", "r4", "eta", "source_power", "uaris_power"});
    for (const auto& r : st.trace)
        t.add_row({std::to_string(r.iteration), format_double(r.r3), format_double(r.r4), format_double(r.eta),
                   format_double(r.source_power), format_double(r.uaris_power)});
    return t.str();
}

}  // namespace uaris
