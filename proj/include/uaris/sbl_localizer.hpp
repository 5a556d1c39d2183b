// SPDX-License-Identifier: Apache-2.0
//
// Semi-blind source localization from eavesdropper samples: an eigenvalue
// score evaluated on a 3-D lattice, then trust-region ascent.
//
// The localizer sees only the samples u_j, their angular frequencies and the
// known geometry (eavesdropper and UARIS positions, depth, sound speed).

#ifndef UARIS_SBL_LOCALIZER_HPP
#define UARIS_SBL_LOCALIZER_HPP

#include <array>

#include "uaris/eavesdropper.hpp"

namespace uaris {

struct SearchRegion {
    std::array<double, 2> x_range{};
    std::array<double, 2> y_range{};
    std::array<double, 2> z_range{};
    int resolution = 15;  // beta, points per axis

    void validate(double seabed_depth_m) const;
    Position3D point(int ix, int iy, int iz) const;
    /// Cube of side `side_m` centred at `c`, shifted to fit inside [0, h] in depth.
    static SearchRegion cube(const Position3D& c, double side_m, int resolution, double seabed_depth_m);
};

struct ScoreDetail {
    double score = 0.0;
    int power_iterations = 0;
    double whitening_residual = 0.0;  // max_j ||Omega^H Omega - A||_F / ||A||_F
};

struct GridResult {
    Position3D best;
    double score = 0.0;
    long best_index = -1;
    long degenerate_points = 0;
};

struct LocalizationResult {
    Position3D p_hat;
    Position3D grid_best;
    double score = 0.0;
    double grid_score = 0.0;
    int iterations = 0;
    bool partial = false;  // refinement aborted on a non-finite score
    long degenerate_points = 0;
};

/// lambda_max of D(p). Throws DegenerateGeometryError when some A_j is not
/// numerically positive definite.
double score(const Position3D& p, const EavesdropperObservation& obs, const ScenarioGeometry& geom);
ScoreDetail score_detail(const Position3D& p, const EavesdropperObservation& obs, const ScenarioGeometry& geom);

/// The 4J x 4J Gram matrix D(p), exposed for checking.
CMat score_matrix(const Position3D& p, const EavesdropperObservation& obs, const ScenarioGeometry& geom);

/// Largest eigenvalue of a Hermitian PSD matrix by power iteration from a
/// fixed start vector.
double lambda_max_power(const CMat& D, double tol = 1e-10, int max_iters = 500, int* iterations = nullptr);

/// Best lattice point; ties keep the lowest linear index (ix*beta + iy)*beta + iz.
/// Points that raise DegenerateGeometryError are skipped and counted.
GridResult grid_search(const EavesdropperObservation& obs, const SearchRegion& region, const ScenarioGeometry& geom,
                       int workers = 1);

struct RefineSettings {
    double fd_step_m = 1e-2;
    double initial_radius_m = 1.0;
    double max_radius_m = 20.0;
    double min_step_m = 1e-3;
    int max_iters = 200;
};

LocalizationResult refine(const Position3D& p0, const EavesdropperObservation& obs, const ScenarioGeometry& geom,
                          const RefineSettings& settings = {});

LocalizationResult localize(const EavesdropperObservation& obs, const SearchRegion& region,
                            const ScenarioGeometry& geom, const RefineSettings& settings = {}, int workers = 1);

/// Copy of `obs` with every sample index n scaled so that sum_j |u_j[n]|^2 = 1.
/// The plain score is biased toward positions where the combined spectrum is
/// uneven; after this scaling lambda_max(D) equals 1 exactly at a noiseless
/// truth and is below 1 elsewhere. Indices with zero energy are left as is.
EavesdropperObservation normalized_observation(const EavesdropperObservation& obs);

double rms_miss_distance(const std::vector<std::pair<Position3D, Position3D>>& trials);

}  // namespace uaris

#endif
