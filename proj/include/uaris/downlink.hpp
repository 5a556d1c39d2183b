// SPDX-License-Identifier: Apache-2.0
//
// Legitimate-link quality: effective channels, SINR, sum-rate and the
// objectives R1..R4 used by the joint optimizer.

#ifndef UARIS_DOWNLINK_HPP
#define UARIS_DOWNLINK_HPP

#include "uaris/geometry.hpp"
#include "uaris/uaris_model.hpp"

namespace uaris {

/// Which quadratic-transform surrogate R4 evaluates.
///
/// Exact keeps the a == k term of the denominator weighted by
/// (eta sigma_v^2)^xi and uses natural-log scaling on the linear terms, so
/// that the maximum over (zeta, chi) equals R3. Published evaluates the
/// printed form (log2 on the first term, unit weight on a == k), whose
/// maximum over the auxiliaries is sum_k [-log2(1 - q_k) + const].
enum class FpForm { Exact, Published };

const char* to_string(FpForm f);
FpForm fp_form_from_string(const std::string& s);

struct ObjectiveWeights {
    double xi = 0.02;        // weight on the privacy term
    double p_s_max = 0.9;    // W
    double p_u_max = 0.1;    // W
    double bg_noise = 1e-9;  // sigma^2, W
    FpForm form = FpForm::Exact;

    void validate() const;
};

/// Received amplitudes x(k, a) = hbar_k^H w_a and AN leakage
/// ||g_k^H Theta||^2 eta sigma_v^2 for every receiver.
struct LinkTerms {
    CMat x;       // K x K
    RVec an_leak; // K
};

/// hbar_k^H = h_k^H + g_k^H Theta H, returned as a 1 x T row.
CRow effective_channel(const CVec& h_k, const CVec& g_k, const CVec& theta, const CMat& H);
std::vector<CRow> effective_channels(const ChannelSet& ch, const CVec& theta);

LinkTerms link_terms(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf);

double sinr(int k, const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf, double sigma2);
RVec sinrs(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf, double sigma2);
double sum_rate(const RVec& gammas);

/// Sum-rate plus the position bound; the two terms have different units and
/// the value is only provided for reporting.
double objective_r1(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf,
                    const ObjectiveWeights& wts, double crlb_position_bound);
double objective_r2(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf,
                    const ObjectiveWeights& wts);
double objective_r3(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf,
                    const ObjectiveWeights& wts);
double objective_r4(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf, const RVec& zeta,
                    const CVec& chi, const ObjectiveWeights& wts);

/// (eta sigma_v^2)^xi.
double privacy_gain(const ReflectionConfig& cfg, double xi);

/// Weight of |x(k, a)|^2 inside the R4 denominator for the given form.
double denominator_weight(int k, int a, double gain, FpForm form);

/// Scale applied to every R4 term except the log.
double linear_scale(FpForm form);

}  // namespace uaris

#endif
