// SPDX-License-Identifier: Apache-2.0

#include "uaris/sbl_localizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace uaris {

namespace {

// Smallest acceptable pivot ratio (squared) of the Cholesky factor.
constexpr double kPivotFloor = 1e-12;

struct Whitened {
    CMat Z;  // N x 4J
    double residual = 0.0;
};

Whitened whiten(const Position3D& p, const EavesdropperObservation& obs, const ScenarioGeometry& geom) {
    const int J = obs.J();
    const int N = obs.N();
    require_dim(static_cast<int>(geom.eavesdroppers.size()) == J, "observation and geometry disagree on J");
    Whitened w;
    w.Z.resize(N, 4 * J);
    for (int j = 0; j < J; ++j) {
        require_dim(obs.u[j].size() == N, "sample vector length must equal N");
        const CMat Tc = steering_matrix(p, j, geom, obs.omega).conjugate();
        const CMat A = Tc.adjoint() * Tc;  // T^T T*
        Eigen::LLT<CMat> llt(A);
        if (llt.info() != Eigen::Success)
            throw DegenerateGeometryError("steering Gram matrix is not positive definite", j);
        const CMat L = llt.matrixL();
        const RVec piv = L.diagonal().real();
        const double ratio = piv.minCoeff() / piv.maxCoeff();
        if (!(ratio * ratio > kPivotFloor))
            throw DegenerateGeometryError("steering Gram matrix is numerically singular", j);
        const CMat Omega = L.adjoint();  // A = Omega^H Omega
        w.residual = std::max(w.residual, (Omega.adjoint() * Omega - A).norm() / A.norm());
        CMat UT = obs.u[j].asDiagonal() * Tc;
        // Z_j = U_j T_j^* Omega_j^{-1}
        Omega.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(UT);
        w.Z.middleCols(4 * j, 4) = UT;
    }
    return w;
}

}  // namespace

void SearchRegion::validate(double h) const {
    for (const auto* r : {&x_range, &y_range, &z_range})
        if (!((*r)[1] > (*r)[0]) || !std::isfinite((*r)[0]) || !std::isfinite((*r)[1]))
            throw DomainError("search ranges must be finite and non-empty");
    if (z_range[0] < 0 || z_range[1] > h) throw DomainError("search depth range must lie within [0, h]");
    if (resolution < 2) throw DomainError("grid resolution must be at least 2");
}

Position3D SearchRegion::point(int ix, int iy, int iz) const {
    auto at = [this](const std::array<double, 2>& r, int i) {
        return r[0] + (r[1] - r[0]) * static_cast<double>(i) / (resolution - 1);
    };
    return {at(x_range, ix), at(y_range, iy), at(z_range, iz)};
}

SearchRegion SearchRegion::cube(const Position3D& c, double side_m, int resolution, double h) {
    if (!(side_m > 0)) throw DomainError("search cube side must be positive");
    SearchRegion r;
    r.resolution = resolution;
    const double half = 0.5 * side_m;
    r.x_range = {c.x - half, c.x + half};
    r.y_range = {c.y - half, c.y + half};
    double z0 = c.z - half;
    double z1 = c.z + half;
    if (side_m >= h) {
        z0 = 0.0;
        z1 = h;
    } else if (z0 < 0) {
        z1 -= z0;
        z0 = 0.0;
    } else if (z1 > h) {
        z0 -= z1 - h;
        z1 = h;
    }
    r.z_range = {z0, z1};
    return r;
}

double lambda_max_power(const CMat& D, double tol, int max_iters, int* iterations) {
    const int n = static_cast<int>(D.rows());
    require_dim(n > 0 && D.cols() == n, "power iteration needs a square matrix");
    // Start from the ones vector tilted toward the largest diagonal entry.
    Eigen::Index imax = 0;
    D.diagonal().real().maxCoeff(&imax);
    CVec v = CVec::Ones(n);
    v(imax) += static_cast<double>(n);
    v.normalize();
    double lambda = std::real(v.dot(D * v));
    int it = 0;
    for (; it < max_iters; ++it) {
        CVec y = D * v;
        const double norm = y.norm();
        if (!(norm > 0)) {
            lambda = 0.0;
            break;
        }
        v = y / norm;
        const double next = std::real(v.dot(D * v));
        const bool done = std::abs(next - lambda) <= tol * std::abs(next);
        lambda = next;
        if (done) {
            ++it;
            break;
        }
    }
    if (iterations) *iterations = it;
    return std::max(lambda, 0.0);
}

CMat score_matrix(const Position3D& p, const EavesdropperObservation& obs, const ScenarioGeometry& geom) {
    const Whitened w = whiten(p, obs, geom);
    return w.Z.adjoint() * w.Z;
}

ScoreDetail score_detail(const Position3D& p, const EavesdropperObservation& obs, const ScenarioGeometry& geom) {
    const Whitened w = whiten(p, obs, geom);
    const CMat D = w.Z.adjoint() * w.Z;
    ScoreDetail d;
    d.whitening_residual = w.residual;
    d.score = lambda_max_power(D, 1e-10, 500, &d.power_iterations);
    return d;
}

double score(const Position3D& p, const EavesdropperObservation& obs, const ScenarioGeometry& geom) {
    return score_detail(p, obs, geom).score;
}

GridResult grid_search(const EavesdropperObservation& obs, const SearchRegion& region, const ScenarioGeometry& geom,
                       int workers) {
    region.validate(geom.seabed_depth_m);
    const int b = region.resolution;
    const long total = static_cast<long>(b) * b * b;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> scores(static_cast<std::size_t>(total), nan);

    auto eval_range = [&](long begin, long end) {
        for (long i = begin; i < end; ++i) {
            const int ix = static_cast<int>(i / (b * b));
            const int iy = static_cast<int>((i / b) % b);
            const int iz = static_cast<int>(i % b);
            try {
                scores[static_cast<std::size_t>(i)] = score(region.point(ix, iy, iz), obs, geom);
            } catch (const DegenerateGeometryError&) {
                // left as NaN and counted below
            }
        }
    };
    workers = std::max(1, workers);
    if (workers == 1) {
        eval_range(0, total);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (total + workers - 1) / workers;
        for (int t = 0; t < workers; ++t) {
            const long lo = t * chunk;
            const long hi = std::min(total, lo + chunk);
            if (lo < hi) pool.emplace_back(eval_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    GridResult g;
    for (long i = 0; i < total; ++i) {
        const double s = scores[static_cast<std::size_t>(i)];
        if (std::isnan(s)) {
            ++g.degenerate_points;
            continue;
        }
        if (g.best_index < 0 || s > g.score) {
            g.best_index = i;
            g.score = s;
        }
    }
    if (g.best_index < 0) throw SearchFailure("every grid point is degenerate");
    const int ix = static_cast<int>(g.best_index / (b * b));
    const int iy = static_cast<int>((g.best_index / b) % b);
    const int iz = static_cast<int>(g.best_index % b);
    g.best = region.point(ix, iy, iz);
    return g;
}

namespace {

using V3 = Eigen::Vector3d;
using M3 = Eigen::Matrix3d;

// Minimizes g.s + s'Hs/2 over ||s|| <= radius.
V3 trust_step(const V3& g, const M3& H, double radius) {
    Eigen::SelfAdjointEigenSolver<M3> es(H);
    const V3 lam = es.eigenvalues();
    const M3 Q = es.eigenvectors();
    const V3 gq = Q.transpose() * g;
    auto step_for = [&](double shift) {
        V3 s;
        for (int i = 0; i < 3; ++i) s(i) = -gq(i) / (lam(i) + shift);
        return V3(Q * s);
    };
    if (lam(0) > 0) {
        const V3 s = step_for(0.0);
        if (s.norm() <= radius) return s;
    }
    // Boundary solution: find shift > -lam_min with ||s(shift)|| = radius.
    double lo = std::max(0.0, -lam(0)) + 1e-14 * (1.0 + std::abs(lam(0)));
    double hi = lo + g.norm() / radius + std::abs(lam(2)) + 1.0;
    while (step_for(hi).norm() > radius) hi *= 2.0;
    if (step_for(lo).norm() < radius) {
        // Hard case; move along the most negative curvature direction.
        V3 s = step_for(lo);
        const V3 e = Q.col(0);
        const double rem = std::sqrt(std::max(0.0, radius * radius - s.squaredNorm()));
        return s + (e.dot(g) > 0 ? -rem : rem) * e;
    }
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (step_for(mid).norm() > radius)
            lo = mid;
        else
            hi = mid;
    }
    return step_for(hi);
}

}  // namespace

LocalizationResult refine(const Position3D& p0, const EavesdropperObservation& obs, const ScenarioGeometry& geom,
                          const RefineSettings& st) {
    if (!std::isfinite(p0.x) || !std::isfinite(p0.y) || !std::isfinite(p0.z))
        throw DomainError("refinement start point must be finite");
    const double h = geom.seabed_depth_m;
    auto clamp_depth = [h](V3 x) {
        x.z() = std::clamp(x.z(), 0.0, h);
        return x;
    };
    // Ascent on the score; outside the valid set the score is -inf.
    auto f = [&](const V3& x) {
        try {
            return score(Position3D::from(x), obs, geom);
        } catch (const DegenerateGeometryError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    LocalizationResult res;
    V3 x = clamp_depth(p0.vec());
    double fx = f(x);
    res.grid_best = p0;
    res.grid_score = fx;
    double radius = st.initial_radius_m;
    const double hs = st.fd_step_m;

    int it = 0;
    for (; it < st.max_iters; ++it) {
        if (!std::isfinite(fx)) {
            res.partial = true;
            break;
        }
        // Central-difference gradient and Hessian of -score.
        V3 g;
        M3 H;
        V3 fp, fm;
        for (int i = 0; i < 3; ++i) {
            V3 e = V3::Zero();
            e(i) = hs;
            fp(i) = f(x + e);
            fm(i) = f(x - e);
            g(i) = -(fp(i) - fm(i)) / (2 * hs);
            H(i, i) = -(fp(i) - 2 * fx + fm(i)) / (hs * hs);
        }
        for (int i = 0; i < 3; ++i)
            for (int k = i + 1; k < 3; ++k) {
                V3 ei = V3::Zero(), ek = V3::Zero();
                ei(i) = hs;
                ek(k) = hs;
                const double v = -(f(x + ei + ek) - f(x + ei - ek) - f(x - ei + ek) + f(x - ei - ek)) / (4 * hs * hs);
                H(i, k) = H(k, i) = v;
            }
        if (!g.allFinite() || !H.allFinite()) {
            res.partial = true;
            break;
        }
        if (g.norm() == 0.0) break;

        const V3 s = trust_step(g, H, radius);
        const V3 xn = clamp_depth(x + s);
        const V3 step = xn - x;
        const double pred = -(g.dot(step) + 0.5 * step.dot(H * step));
        const double fn = f(xn);
        if (std::isnan(fn)) {
            res.partial = true;
            break;
        }
        const double actual = fn - fx;
        const double rho = pred > 0 ? actual / pred : -1.0;
        if (rho < 0.25)
            radius *= 0.5;
        else if (rho > 0.75 && step.norm() > 0.99 * radius)
            radius = std::min(2.0 * radius, st.max_radius_m);
        if (actual > 0 && std::isfinite(fn)) {
            x = xn;
            fx = fn;
            if (step.norm() < st.min_step_m) {
                ++it;
                break;
            }
        } else if (radius < st.min_step_m) {
            ++it;
            break;
        }
    }
    res.p_hat = Position3D::from(x);
    res.score = fx;
    res.iterations = it;
    return res;
}

LocalizationResult localize(const EavesdropperObservation& obs, const SearchRegion& region,
                            const ScenarioGeometry& geom, const RefineSettings& settings, int workers) {
    const GridResult g = grid_search(obs, region, geom, workers);
    LocalizationResult r = refine(g.best, obs, geom, settings);
    r.grid_best = g.best;
    r.grid_score = g.score;
    r.degenerate_points = g.degenerate_points;
    return r;
}

EavesdropperObservation normalized_observation(const EavesdropperObservation& obs) {
    EavesdropperObservation out = obs;
    for (int n = 0; n < obs.N(); ++n) {
        double e = 0.0;
        for (const auto& u : obs.u) e += std::norm(u(n));
        if (!(e > 0)) continue;
        const double scale = 1.0 / std::sqrt(e);
        for (auto& u : out.u) u(n) *= scale;
    }
    return out;
}

double rms_miss_distance(const std::vector<std::pair<Position3D, Position3D>>& trials) {
    if (trials.empty()) throw DomainError("RMS miss distance needs at least one trial");
    double acc = 0.0;
    for (const auto& [truth, est] : trials) {
        const double d = distance(truth, est);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(trials.size()));
}

}  // namespace uaris
