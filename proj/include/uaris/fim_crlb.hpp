// SPDX-License-Identifier: Apache-2.0
//
// Fisher information for the joint eavesdropper model and the resulting
// Cramer-Rao bounds on the source position.
//
// Parameter order: p (3), phi[1..N-1] (N-1), Re vec(F) (4J), Im vec(F) (4J),
// per-eavesdropper noise variance (J). vec(F) is column-major, so ray a of
// eavesdropper j sits at a + 4j.

#ifndef UARIS_FIM_CRLB_HPP
#define UARIS_FIM_CRLB_HPP

#include "uaris/eavesdropper.hpp"

namespace uaris {

struct ParameterVector {
    Position3D p;
    RVec phi;          // N-1
    Eigen::MatrixXcd F;  // 4 x J
    RVec noise_vars;   // J

    int N() const { return static_cast<int>(phi.size()) + 1; }
    int J() const { return static_cast<int>(F.cols()); }
    int size() const { return 3 + (N() - 1) + 8 * J() + J(); }
    RVec pack() const;
    static ParameterVector unpack(const RVec& v, int N, int J);
    void validate() const;
};

struct FimLayout {
    int N = 0;
    int J = 0;
    int pos() const { return 0; }
    int phi() const { return 3; }
    int f_re() const { return 3 + N - 1; }
    int f_im() const { return f_re() + 4 * J; }
    int noise() const { return f_im() + 4 * J; }
    int size() const { return noise() + J; }
    int signal_size() const { return noise(); }
};

/// Fixed quantities the mean depends on besides the parameters.
struct FimModel {
    ScenarioGeometry geom;
    RVec omega;
};

struct FimMatrix {
    RMat entries;
    FimLayout layout;
};

struct Ellipsoid {
    Position3D center;
    Eigen::Matrix3d shape;     // covariance block scaled by the chi-square quantile
    Eigen::Vector3d axes;      // semi-axis lengths, ascending
    Eigen::Matrix3d rotation;  // columns are the axis directions
    double volume() const;
    bool contains(const Position3D& q) const;
};

struct CrlbResult {
    RMat full_crlb;
    double position_mse_bound = 0.0;
    Ellipsoid ellipsoid_95;
    bool ill_conditioned = false;
    double condition_number = 0.0;
};

/// Chi-square quantile with 3 degrees of freedom at probability 0.95.
double chi2_3dof_95();

/// The parameter vector that generated an observation.
ParameterVector true_parameters(const EavesdropperObservation& obs);

/// Stacked noise-free samples [mu_1; ...; mu_J] for the given parameters.
CVec model_mean(const ParameterVector& th, const FimModel& model);

CVec mean_derivative_position(const ParameterVector& th, const FimModel& model, int axis);
/// n is the 1-based sample index, 2 <= n <= N.
CVec mean_derivative_phase(const ParameterVector& th, const FimModel& model, int n);
/// ray 0..3, en 0..J-1.
CVec mean_derivative_channel(const ParameterVector& th, const FimModel& model, int ray, int en, bool imag);

/// Every signal-parameter derivative as the columns of an NJ x (N_theta - J) matrix.
CMat mean_jacobian(const ParameterVector& th, const FimModel& model);

/// With literal_noise_block the noise block is N on the diagonal instead of N/var^2.
FimMatrix build_fim(const ParameterVector& th, const FimModel& model, bool literal_noise_block = false);

CrlbResult crlb(const FimMatrix& fim, const Position3D& center, double cond_limit = 1e12);

Ellipsoid ellipsoid_from_covariance(const Eigen::Matrix3d& cov, const Position3D& center, double quantile);

}  // namespace uaris

#endif
