// SPDX-License-Identifier: Apache-2.0

#ifndef UARIS_TYPES_HPP
#define UARIS_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace uaris {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using CRow = Eigen::RowVectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// Error hierarchy. Every failure the library reports is one of these.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : Error {
    using Error::Error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct InfeasibleError : Error {
    using Error::Error;
};
struct DegenerateGeometryError : Error {
    DegenerateGeometryError(const std::string& what, int en)
        : Error(what), en_index(en) {}
    int en_index;
};
struct SearchFailure : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

// Positions are in meters; z is measured downward from the sea surface.
struct Position3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Eigen::Vector3d vec() const { return {x, y, z}; }
    static Position3D from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

    friend Position3D operator+(const Position3D& a, const Position3D& b) {
        return {a.x + b.x, a.y + b.y, a.z + b.z};
    }
    friend Position3D operator-(const Position3D& a, const Position3D& b) {
        return {a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend Position3D operator*(double s, const Position3D& a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Position3D&, const Position3D&) = default;
};

inline double distance(const Position3D& a, const Position3D& b) { return (a.vec() - b.vec()).norm(); }

inline void require_dim(bool ok, const char* what) {
    if (!ok) throw DimensionError(what);
}

}  // namespace uaris

#endif
