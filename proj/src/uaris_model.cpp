// SPDX-License-Identifier: Apache-2.0

#include "uaris/uaris_model.hpp"

namespace uaris {

double BeamformerSet::total_power() const {
    double p = 0.0;
    for (const auto& v : w) p += v.squaredNorm();
    return p;
}

CVec BeamformerSet::sum() const {
    CVec s = CVec::Zero(T());
    for (const auto& v : w) s += v;
    return s;
}

CVec BeamformerSet::stacked() const {
    const int t = T();
    CVec s(t * K());
    for (int k = 0; k < K(); ++k) s.segment(k * t, t) = w[k];
    return s;
}

BeamformerSet BeamformerSet::from_stacked(const CVec& v, int K, int T) {
    require_dim(v.size() == K * T, "stacked beamformer length must equal K*T");
    BeamformerSet bf;
    for (int k = 0; k < K; ++k) bf.w.push_back(v.segment(k * T, T));
    return bf;
}

void ReflectionConfig::validate() const {
    if (!(noise_factor >= 1.0)) throw DomainError("noise factor must be >= 1");
    if (!(an_base_power > 0)) throw DomainError("AN base power must be positive");
    if (!theta.allFinite()) throw DomainError("reflection vector has non-finite entries");
}

CVec reflect(const ReflectionConfig& config, const CVec& incident) {
    require_dim(incident.size() == config.theta.size(), "incident length must equal M");
    return config.theta.cwiseProduct(incident);
}

double en_noise_variance(const ReflectionConfig& config, const CVec& g, double bg_noise) {
    require_dim(g.size() == config.theta.size(), "g length must equal M");
    const double leak = (config.theta.cwiseAbs2().cwiseProduct(g.cwiseAbs2())).sum();
    return config.an_power() * leak + bg_noise;
}

double uaris_output_power(const ReflectionConfig& config, const CMat& H, const BeamformerSet& bf) {
    require_dim(H.rows() == config.theta.size(), "H rows must equal M");
    const RVec gain2 = config.theta.cwiseAbs2();
    double p = 0.0;
    for (const auto& w : bf.w) {
        require_dim(w.size() == H.cols(), "beamformer length must equal T");
        p += gain2.dot((H * w).cwiseAbs2());
    }
    return p + gain2.sum() * config.an_power();
}

}  // namespace uaris
