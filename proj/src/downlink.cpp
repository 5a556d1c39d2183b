// SPDX-License-Identifier: Apache-2.0

#include "uaris/downlink.hpp"

#include <cmath>
#include <numbers>

namespace uaris {

const char* to_string(FpForm f) { return f == FpForm::Exact ? "exact" : "published"; }

FpForm fp_form_from_string(const std::string& s) {
    if (s == "exact") return FpForm::Exact;
    if (s == "published") return FpForm::Published;
    throw ConfigError("unknown fp_form '" + s + "' (expected exact or published)");
}

void ObjectiveWeights::validate() const {
    if (!(xi >= 0 && xi < 1)) throw DomainError("xi must lie in [0,1)");
    if (!(p_s_max > 0) || !(p_u_max > 0)) throw DomainError("power limits must be positive");
    if (!(bg_noise > 0)) throw DomainError("background noise must be positive");
}

CRow effective_channel(const CVec& h_k, const CVec& g_k, const CVec& theta, const CMat& H) {
    require_dim(H.rows() == theta.size() && g_k.size() == theta.size(), "g and theta must have length M");
    require_dim(H.cols() == h_k.size(), "h length must equal T");
    return h_k.adjoint() + (g_k.conjugate().cwiseProduct(theta)).transpose() * H;
}

std::vector<CRow> effective_channels(const ChannelSet& ch, const CVec& theta) {
    std::vector<CRow> out;
    out.reserve(ch.h_direct.size());
    for (std::size_t k = 0; k < ch.h_direct.size(); ++k)
        out.push_back(effective_channel(ch.h_direct[k], ch.g_ru[k], theta, ch.H_su));
    return out;
}

LinkTerms link_terms(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf) {
    const int K = static_cast<int>(ch.h_direct.size());
    require_dim(bf.K() == K, "beamformer count must equal K");
    const auto hb = effective_channels(ch, cfg.theta);
    LinkTerms t;
    t.x.resize(K, K);
    t.an_leak.resize(K);
    const RVec theta2 = cfg.theta.cwiseAbs2();
    for (int k = 0; k < K; ++k) {
        for (int a = 0; a < K; ++a) t.x(k, a) = (hb[k] * bf.w[a])(0);
        t.an_leak(k) = theta2.dot(ch.g_ru[k].cwiseAbs2()) * cfg.an_power();
    }
    return t;
}

namespace {

RVec sinrs_from(const LinkTerms& t, double sigma2) {
    const int K = static_cast<int>(t.x.rows());
    RVec g(K);
    for (int k = 0; k < K; ++k) {
        const double total = t.x.row(k).cwiseAbs2().sum();
        const double sig = std::norm(t.x(k, k));
        g(k) = sig / (total - sig + t.an_leak(k) + sigma2);
    }
    return g;
}

}  // namespace

double sinr(int k, const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf, double sigma2) {
    const int K = static_cast<int>(ch.h_direct.size());
    if (k < 0 || k >= K) throw DomainError("receiver index out of range");
    return sinrs(ch, cfg, bf, sigma2)(k);
}

RVec sinrs(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf, double sigma2) {
    if (!(sigma2 > 0)) throw DomainError("background noise must be positive");
    return sinrs_from(link_terms(ch, cfg, bf), sigma2);
}

double sum_rate(const RVec& gammas) {
    double r = 0.0;
    for (double g : gammas) {
        if (!(g >= 0)) throw DomainError("SINR must be non-negative");
        r += std::log2(1.0 + g);
    }
    return r;
}

double privacy_gain(const ReflectionConfig& cfg, double xi) { return std::pow(cfg.an_power(), xi); }

double denominator_weight(int k, int a, double gain, FpForm form) {
    return (k == a && form == FpForm::Exact) ? gain : 1.0;
}

double linear_scale(FpForm form) { return form == FpForm::Exact ? 1.0 / std::numbers::ln2 : 1.0; }

double objective_r1(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf,
                    const ObjectiveWeights& wts, double crlb_position_bound) {
    return sum_rate(sinrs(ch, cfg, bf, wts.bg_noise)) + std::abs(crlb_position_bound);
}

double objective_r2(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf,
                    const ObjectiveWeights& wts) {
    const RVec g = sinrs(ch, cfg, bf, wts.bg_noise);
    const double penalty = wts.xi * std::log2(1.0 + 1.0 / cfg.an_power());
    return sum_rate(g) - penalty * static_cast<double>(g.size());
}

double objective_r3(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf,
                    const ObjectiveWeights& wts) {
    const RVec g = sinrs(ch, cfg, bf, wts.bg_noise);
    return sum_rate(g * privacy_gain(cfg, wts.xi));
}

double objective_r4(const ChannelSet& ch, const ReflectionConfig& cfg, const BeamformerSet& bf, const RVec& zeta,
                    const CVec& chi, const ObjectiveWeights& wts) {
    const LinkTerms t = link_terms(ch, cfg, bf);
    const int K = static_cast<int>(t.x.rows());
    require_dim(zeta.size() == K && chi.size() == K, "zeta and chi must have length K");
    const double c = privacy_gain(cfg, wts.xi);
    const double s = linear_scale(wts.form);
    double r = 0.0;
    for (int k = 0; k < K; ++k) {
        double den = t.an_leak(k) + wts.bg_noise;
        for (int a = 0; a < K; ++a) den += denominator_weight(k, a, c, wts.form) * std::norm(t.x(k, a));
        const double lin = -zeta(k) + 2.0 * std::sqrt(c * (1.0 + zeta(k))) * std::real(std::conj(chi(k)) * t.x(k, k)) -
                           std::norm(chi(k)) * den;
        r += std::log2(1.0 + zeta(k)) + s * lin;
    }
    return r;
}

}  // namespace uaris
