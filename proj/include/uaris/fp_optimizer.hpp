// SPDX-License-Identifier: Apache-2.0
//
// Alternating fractional-programming optimization of the beamformers w, the
// reflection vector theta and the noise factor eta.

#ifndef UARIS_FP_OPTIMIZER_HPP
#define UARIS_FP_OPTIMIZER_HPP

#include <cstdint>
#include <string>

#include "uaris/downlink.hpp"

namespace uaris {

/// M1: no reflection, eta = 1. M2: optimized reflection, eta = 1. M3: all three.
enum class Variant { M1, M2, M3 };
const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct SolverSettings {
    int max_iters = 100;
    double rel_tol = 1e-4;
    double mu_tol = 1e-6;
    double qcqp_tol = 1e-6;
    std::uint64_t seed = 0;
    // Throw when the merit drops by more than this between iterations.
    double monotone_slack = 1e-9;
    // M3 only: after the three block updates, search eta and theta jointly
    // along log(eta). The single blocks stall when the UARIS power constraint
    // is tight, because eta and ||theta|| trade against each other.
    bool joint_eta_theta = false;

    void validate() const;
};

struct TraceRow {
    int iteration = 0;
    double r3 = 0.0;
    double r4 = 0.0;
    double eta = 1.0;
    double source_power = 0.0;
    double uaris_power = 0.0;
};

struct OptimizerState {
    BeamformerSet bf;
    ReflectionConfig reflection;
    RVec zeta;
    CVec chi;
    std::vector<double> r3_history;
    // max over (zeta, chi) of R4; equals r3_history for the exact form.
    std::vector<double> merit_history;
    std::vector<TraceRow> trace;
    int iteration = 0;
    bool converged = false;
    int eta_flags = 0;      // count of flagged eta updates (vacuous C2 or bad base)
    int rejected_steps = 0; // w or theta steps rejected by the ascent guard
};

/// Joint maximizer of R4 over zeta for the current (w, theta, eta), i.e. the
/// zeta that is optimal once chi is set by update_chi.
RVec update_zeta(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts);
/// chi_k = sqrt(c(1 + zeta_k)) x_kk / den_k using st.zeta.
CVec update_chi(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts);

struct EtaUpdate {
    double eta = 1.0;
    double eta_star = 1.0;  // unconstrained stationary point
    double cap = 0.0;       // largest eta allowed by the UARIS power budget
    bool c2_vacuous = false;
    bool bad_base = false;
};
EtaUpdate update_eta(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts);

/// max 2 Re(alpha^H w) - w^H B w  s.t.  ||w||^2 <= p_s, w^H C w <= p_c.
/// B and C are block diagonal with K blocks of size T.
struct QcqpProblem {
    std::vector<CMat> B;  // K blocks
    CMat C0;              // T x T, shared by every block
    CVec alpha;           // K*T
    double p_s = 0.0;
    double p_c = 0.0;
    int K() const { return static_cast<int>(B.size()); }
    int T() const { return static_cast<int>(C0.rows()); }
    double objective(const CVec& w) const;
    double quad_c(const CVec& w) const;
};

struct QcqpSolution {
    CVec w;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double objective = 0.0;
    int rounds = 0;
};

QcqpSolution solve_qcqp(const QcqpProblem& prob, double tol);
QcqpProblem w_subproblem(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts);
BeamformerSet update_w(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts,
                       const SolverSettings& settings);

/// max 2 Re(v^H theta) - theta^H Lambda theta  s.t.  theta^H Psi theta <= p_u.
struct ThetaProblem {
    CMat Lambda;
    CMat Psi;
    CVec v;
    double p_u = 0.0;
};

struct ThetaSolution {
    CVec theta;
    double mu = 0.0;
    bool binding = false;
};

ThetaSolution solve_theta(const ThetaProblem& prob, double mu_tol);
ThetaProblem theta_subproblem(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts);
ThetaSolution update_theta(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts,
                           const SolverSettings& settings);

/// Feasible starting point used by optimize.
OptimizerState initial_state(const ChannelSet& ch, const ObjectiveWeights& wts, double an_base_power,
                             Variant variant, std::uint64_t seed);

/// R4 maximized over the auxiliaries at the state's (w, theta, eta).
double fp_merit(const OptimizerState& st, const ChannelSet& ch, const ObjectiveWeights& wts);

OptimizerState optimize(const ChannelSet& ch, const ObjectiveWeights& wts, double an_base_power,
                        const SolverSettings& settings, Variant variant);

/// Per-iteration trace as CSV text.
std::string trace_csv(const OptimizerState& st);

}  // namespace uaris

#endif
