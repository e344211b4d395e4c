#pragma once

#include <Eigen/Dense>
#include <vector>

namespace stokesreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Per-node 3-vector values (densities, velocities, jumps), aligned with a rule's node order.
using VectorField = std::vector<Vec3>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrtPi = 1.77245385090551602730;

}  // namespace stokesreg
