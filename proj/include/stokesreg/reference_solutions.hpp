#pragma once

// Exact Stokes flow of a point force, used as interior data for the layer-sum test.
// The exterior solution is zero, so the jumps are minus the interior values.

#include <cmath>
#include <utility>

#include "stokesreg/errors.hpp"
#include "stokesreg/stokes_kernels.hpp"
#include "stokesreg/surface_quadrature.hpp"
#include "stokesreg/types.hpp"

namespace stokesreg {

struct PointForce {
  Vec3 location{2.0, 0.0, 0.0};
  Vec3 strength{1.0, 0.0, 0.0};
};

/// u_i = (1/8 pi) S_ij(y, y0) b_j
inline Vec3 point_force_velocity(const Vec3& y, const PointForce& pf) {
  const Vec3 d = y - pf.location;
  const double r = d.norm();
  if (r == 0.0) throw SingularityError("point_force_velocity: target at the point force");
  return (pf.strength / r + d * (d.dot(pf.strength) / (r * r * r))) / (8.0 * kPi);
}

/// t_i = sigma_ik n_k = (-6 / 8 pi) d_i (d.b)(d.n) / r^5
inline Vec3 point_force_traction(const Vec3& y, const Vec3& n, const PointForce& pf) {
  const Vec3 d = y - pf.location;
  const double r2 = d.squaredNorm();
  if (r2 == 0.0) throw SingularityError("point_force_traction: target at the point force");
  const double r = std::sqrt(r2);
  return (-6.0 * d.dot(pf.strength) * d.dot(n) / (8.0 * kPi * r2 * r2 * r)) * d;
}

struct Jumps {
  Vec3 force;     // [f] = f+ - f-
  Vec3 velocity;  // [u] = u+ - u-
};

inline Jumps jumps_at_node(const SurfacePoint& node, const PointForce& pf) {
  return {-point_force_traction(node.position, node.normal, pf), -point_force_velocity(node.position, pf)};
}

/// On-surface value: average of outside (0) and inside velocity.
inline Vec3 exact_boundary_velocity(const Vec3& y, const PointForce& pf) { return 0.5 * point_force_velocity(y, pf); }

inline std::pair<VectorField, VectorField> jump_fields(const QuadratureRule& rule, const PointForce& pf) {
  VectorField f(rule.size()), u(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const auto j = jumps_at_node(rule[i].point, pf);
    f[i] = j.force;
    u[i] = j.velocity;
  }
  return {std::move(f), std::move(u)};
}

}  // namespace stokesreg
