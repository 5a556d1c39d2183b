// SPDX-License-Identifier: Apache-2.0

#include "uaris/fim_crlb.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numbers>

namespace uaris {

RVec ParameterVector::pack() const {
    const FimLayout L{N(), J()};
    RVec v(L.size());
    v.segment(0, 3) = p.vec();
    v.segment(L.phi(), N() - 1) = phi;
    for (int j = 0; j < J(); ++j)
        for (int a = 0; a < 4; ++a) {
            v(L.f_re() + a + 4 * j) = F(a, j).real();
            v(L.f_im() + a + 4 * j) = F(a, j).imag();
        }
    v.segment(L.noise(), J()) = noise_vars;
    return v;
}

ParameterVector ParameterVector::unpack(const RVec& v, int N, int J) {
    const FimLayout L{N, J};
    require_dim(v.size() == L.size(), "parameter vector length mismatch");
    ParameterVector th;
    th.p = Position3D::from(v.segment<3>(0));
    th.phi = v.segment(L.phi(), N - 1);
    th.F.resize(4, J);
    for (int j = 0; j < J; ++j)
        for (int a = 0; a < 4; ++a) th.F(a, j) = cd(v(L.f_re() + a + 4 * j), v(L.f_im() + a + 4 * j));
    th.noise_vars = v.segment(L.noise(), J);
    return th;
}

void ParameterVector::validate() const {
    require_dim(F.rows() == 4 && noise_vars.size() == F.cols(), "F must be 4 x J with J noise variances");
    if (!(noise_vars.array() > 0).all()) throw DomainError("noise variances must be positive");
}

double chi2_3dof_95() {
    static const double q = boost::math::quantile(boost::math::chi_squared_distribution<double>(3.0), 0.95);
    return q;
}

ParameterVector true_parameters(const EavesdropperObservation& obs) {
    ParameterVector th;
    th.p = obs.p_true;
    th.phi = obs.waveform.phi;
    th.F = obs.F;
    th.noise_vars = obs.noise_variances;
    return th;
}

namespace {

void check_model(const ParameterVector& th, const FimModel& model) {
    th.validate();
    require_dim(model.omega.size() == th.N(), "omega length must equal N");
    require_dim(static_cast<int>(model.geom.eavesdroppers.size()) == th.J(), "geometry and F disagree on J");
}

CVec waveform_of(const ParameterVector& th) { return Waveform::from_phases(th.phi).s; }

}  // namespace

CVec model_mean(const ParameterVector& th, const FimModel& model) {
    check_model(th, model);
    const int N = th.N();
    const CVec s = waveform_of(th);
    CVec mu(N * th.J());
    for (int j = 0; j < th.J(); ++j)
        mu.segment(j * N, N) = observation_mean(steering_matrix(th.p, j, model.geom, model.omega), th.F.col(j), s);
    return mu;
}

CVec mean_derivative_position(const ParameterVector& th, const FimModel& model, int axis) {
    check_model(th, model);
    if (axis < 0 || axis > 2) throw DomainError("position axis must be 0, 1 or 2");
    const int N = th.N();
    const double c = model.geom.sound_speed_mps;
    const CVec s = waveform_of(th);
    CVec d(N * th.J());
    for (int j = 0; j < th.J(); ++j) {
        const auto grad = four_ray_length_gradient(th.p, model.geom.eavesdroppers[j], model.geom.uaris,
                                                   model.geom.seabed_depth_m);
        const CMat T = steering_matrix(th.p, j, model.geom, model.omega);
        for (int n = 0; n < N; ++n) {
            cd acc = 0.0;
            for (int a = 0; a < 4; ++a)
                acc += cd(0.0, -model.omega(n) * grad(a, axis) / c) * T(n, a) * th.F(a, j);
            d(j * N + n) = s(n) * acc;
        }
    }
    return d;
}

CVec mean_derivative_phase(const ParameterVector& th, const FimModel& model, int n) {
    check_model(th, model);
    const int N = th.N();
    if (n < 2 || n > N) throw DomainError("phase index must satisfy 2 <= n <= N");
    const CVec mu = model_mean(th, model);
    CVec d = CVec::Zero(N * th.J());
    for (int j = 0; j < th.J(); ++j) d(j * N + n - 1) = cd(0.0, 1.0) * mu(j * N + n - 1);
    return d;
}

CVec mean_derivative_channel(const ParameterVector& th, const FimModel& model, int ray, int en, bool imag) {
    check_model(th, model);
    if (ray < 0 || ray > 3 || en < 0 || en >= th.J()) throw DomainError("ray or eavesdropper index out of range");
    const int N = th.N();
    const CVec s = waveform_of(th);
    const CMat T = steering_matrix(th.p, en, model.geom, model.omega);
    CVec d = CVec::Zero(N * th.J());
    const cd unit = imag ? cd(0.0, 1.0) : cd(1.0, 0.0);
    for (int n = 0; n < N; ++n) d(en * N + n) = unit * T(n, ray) * s(n);
    return d;
}

CMat mean_jacobian(const ParameterVector& th, const FimModel& model) {
    const FimLayout L{th.N(), th.J()};
    CMat G(th.N() * th.J(), L.signal_size());
    for (int i = 0; i < 3; ++i) G.col(L.pos() + i) = mean_derivative_position(th, model, i);
    for (int n = 2; n <= th.N(); ++n) G.col(L.phi() + n - 2) = mean_derivative_phase(th, model, n);
    for (int j = 0; j < th.J(); ++j)
        for (int a = 0; a < 4; ++a) {
            G.col(L.f_re() + a + 4 * j) = mean_derivative_channel(th, model, a, j, false);
            G.col(L.f_im() + a + 4 * j) = mean_derivative_channel(th, model, a, j, true);
        }
    return G;
}

FimMatrix build_fim(const ParameterVector& th, const FimModel& model, bool literal_noise_block) {
    th.validate();
    const int N = th.N();
    const int J = th.J();
    FimMatrix fim;
    fim.layout = FimLayout{N, J};
    const FimLayout& L = fim.layout;
    CMat G = mean_jacobian(th, model);
    for (int j = 0; j < J; ++j) G.middleRows(j * N, N) /= std::sqrt(th.noise_vars(j));
    fim.entries = RMat::Zero(L.size(), L.size());
    RMat S = 2.0 * (G.adjoint() * G).real();
    fim.entries.topLeftCorner(L.signal_size(), L.signal_size()) = 0.5 * (S + S.transpose());
    for (int j = 0; j < J; ++j) {
        const double v = th.noise_vars(j);
        fim.entries(L.noise() + j, L.noise() + j) = literal_noise_block ? N : N / (v * v);
    }
    return fim;
}

Ellipsoid ellipsoid_from_covariance(const Eigen::Matrix3d& cov, const Position3D& center, double quantile) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (cov + cov.transpose()));
    Ellipsoid e;
    e.center = center;
    e.shape = quantile * cov;
    e.rotation = es.eigenvectors();
    for (int i = 0; i < 3; ++i) e.axes(i) = std::sqrt(std::max(0.0, quantile * es.eigenvalues()(i)));
    return e;
}

double Ellipsoid::volume() const { return 4.0 / 3.0 * std::numbers::pi * axes.prod(); }

bool Ellipsoid::contains(const Position3D& q) const {
    const Eigen::Vector3d d = rotation.transpose() * (q.vec() - center.vec());
    double r = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (axes(i) <= 0) {
            if (d(i) != 0.0) return false;
            continue;
        }
        r += (d(i) / axes(i)) * (d(i) / axes(i));
    }
    return r <= 1.0;
}

CrlbResult crlb(const FimMatrix& fim, const Position3D& center, double cond_limit) {
    const RMat& Jm = fim.entries;
    require_dim(Jm.rows() == Jm.cols() && Jm.rows() >= 3, "FIM must be square with at least 3 rows");
    // Jacobi equilibration so that parameters with different units do not
    // masquerade as ill-conditioning.
    RVec scale(Jm.rows());
    for (int i = 0; i < Jm.rows(); ++i) scale(i) = Jm(i, i) > 0 ? 1.0 / std::sqrt(Jm(i, i)) : 1.0;
    RMat Js = scale.asDiagonal() * Jm * scale.asDiagonal();
    Js = 0.5 * (Js + Js.transpose());
    Eigen::SelfAdjointEigenSolver<RMat> es(Js);
    const RVec lam = es.eigenvalues();
    const double lmax = lam.cwiseAbs().maxCoeff();
    const double lmin = lam.minCoeff();
    CrlbResult r;
    r.condition_number = lmin > 0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    r.ill_conditioned = !(r.condition_number <= cond_limit);
    RVec inv(lam.size());
    for (int i = 0; i < lam.size(); ++i) {
        const bool keep = r.ill_conditioned ? lam(i) > lmax / cond_limit : true;
        inv(i) = keep ? 1.0 / lam(i) : 0.0;
    }
    r.full_crlb = scale.asDiagonal() * (es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose()) *
                  scale.asDiagonal();
    const Eigen::Matrix3d P = r.full_crlb.topLeftCorner<3, 3>();
    r.position_mse_bound = P.trace();
    r.ellipsoid_95 = ellipsoid_from_covariance(P, center, chi2_3dof_95());
    return r;
}

}  // namespace uaris
