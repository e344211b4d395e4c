#pragma once

// Closed level-set surfaces {phi = 0} with analytic derivatives, outward normals,
// mean curvature, and root projection along coordinate lines.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stokesreg/errors.hpp"
#include "stokesreg/types.hpp"

namespace stokesreg {

struct Box {
  Vec3 lo;
  Vec3 hi;

  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  Vec3 extent() const { return hi - lo; }
};

struct SurfacePoint {
  Vec3 position;
  Vec3 normal;  // outward, unit
  std::optional<double> mean_curvature;
};

enum class SurfaceKind { sphere, ellipsoid, molecule, custom };

/// A closed surface phi = 0. The orientation sign is chosen so that
/// orientation_sign * grad(phi) points from the bounded interior outward;
/// equivalently orientation_sign * phi < 0 inside and > 0 outside.
class LevelSetSurface {
 public:
  using ScalarFn = std::function<double(const Vec3&)>;
  using GradientFn = std::function<Vec3(const Vec3&)>;
  using HessianFn = std::function<Mat3(const Vec3&)>;

  /// Validates the orientation with a ray test from `interior_point` and checks that
  /// phi has the exterior sign on the faces of `box`. Throws GeometryError otherwise.
  LevelSetSurface(std::string name, SurfaceKind kind, ScalarFn phi, GradientFn grad, HessianFn hessian,
                  double orientation_sign, Box box, Vec3 interior_point)
      : name_(std::move(name)),
        kind_(kind),
        phi_(std::move(phi)),
        grad_(std::move(grad)),
        hessian_(std::move(hessian)),
        orientation_sign_(orientation_sign),
        box_(std::move(box)),
        interior_point_(std::move(interior_point)) {
    validate();
  }

  const std::string& name() const { return name_; }
  SurfaceKind kind() const { return kind_; }
  double phi(const Vec3& p) const { return phi_(p); }
  Vec3 grad_phi(const Vec3& p) const { return grad_(p); }
  Mat3 hessian_phi(const Vec3& p) const { return hessian_(p); }
  double orientation_sign() const { return orientation_sign_; }
  const Box& bounding_box() const { return box_; }
  const Vec3& interior_point() const { return interior_point_; }

  bool is_inside(const Vec3& p) const { return orientation_sign_ * phi_(p) < 0.0; }

 private:
  void validate() const;

  std::string name_;
  SurfaceKind kind_;
  ScalarFn phi_;
  GradientFn grad_;
  HessianFn hessian_;
  double orientation_sign_;
  Box box_;
  Vec3 interior_point_;
};

// ---------------------------------------------------------------------------
// Differential geometry

inline Vec3 unit_normal(const LevelSetSurface& surface, const Vec3& p) {
  const Vec3 g = surface.grad_phi(p);
  const double norm = g.norm();
  if (!(norm > 1e-14)) throw GeometryError("unit_normal: vanishing level-set gradient");
  return (surface.orientation_sign() / norm) * g;
}

/// H = (1/2) div(n), from the gradient and Hessian of phi. H = +1 on the unit sphere.
inline double mean_curvature(const LevelSetSurface& surface, const Vec3& p) {
  const Vec3 g = surface.grad_phi(p);
  const Mat3 hess = surface.hessian_phi(p);
  const double norm = g.norm();
  if (!(norm > 1e-14)) throw GeometryError("mean_curvature: vanishing level-set gradient");
  const double div_n = hess.trace() / norm - g.dot(hess * g) / (norm * norm * norm);
  return 0.5 * surface.orientation_sign() * div_n;
}

/// Tangential projection (I - n n^T) grad.
inline Vec3 surface_gradient(const Vec3& gradient, const Vec3& normal) {
  return gradient - normal.dot(gradient) * normal;
}

inline SurfacePoint make_surface_point(const LevelSetSurface& surface, const Vec3& p, bool with_curvature = false) {
  SurfacePoint sp{p, unit_normal(surface, p), std::nullopt};
  if (with_curvature) sp.mean_curvature = mean_curvature(surface, p);
  return sp;
}

// ---------------------------------------------------------------------------
// Root finding along coordinate lines

namespace detail {

/// Bisection-safeguarded Newton for a sign change of f on [lo, hi].
inline double refine_root(const std::function<double(double)>& f, const std::function<double(double)>& df, double lo,
                          double hi, double f_lo, double tol) {
  double t = 0.5 * (lo + hi);
  for (int iter = 0; iter < 100; ++iter) {
    const double ft = f(t);
    if (std::abs(ft) <= tol) return t;
    if ((ft < 0.0) == (f_lo < 0.0)) {
      lo = t;
      f_lo = ft;
    } else {
      hi = t;
    }
    const double slope = df(t);
    double next = slope != 0.0 ? t - ft / slope : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t) {
      // Bracket collapsed to adjacent doubles.
      if (std::abs(f(next)) <= tol) return next;
      break;
    }
    t = next;
  }
  throw RootFindingError("roots_along_line: no convergence after 100 iterations");
}

}  // namespace detail

/// All roots of phi along the line {base + t e_axis}, axis in {0,1,2}. The base
/// coordinate along `axis` is ignored. Roots are bracketed by sampling the part of the
/// line inside the bounding box with at least `samples` intervals and refined to |phi| <= 1e-12.
inline std::vector<SurfacePoint> roots_along_line(const LevelSetSurface& surface, const Vec3& base, int axis,
                                                  int samples = 400) {
  if (axis < 0 || axis > 2) throw UsageError("roots_along_line: axis must be 0, 1 or 2");
  const Box& box = surface.bounding_box();
  for (int d = 0; d < 3; ++d) {
    if (d != axis && (base[d] < box.lo[d] || base[d] > box.hi[d])) return {};
  }
  const double t0 = box.lo[axis];
  const double t1 = box.hi[axis];
  const int n = std::max(samples, 2);
  const double step = (t1 - t0) / n;

  Vec3 p = base;
  auto f = [&](double t) {
    p[axis] = t;
    return surface.phi(p);
  };
  auto df = [&](double t) {
    p[axis] = t;
    return surface.grad_phi(p)[axis];
  };

  std::vector<SurfacePoint> roots;
  auto emit = [&](double t) {
    Vec3 q = base;
    q[axis] = t;
    roots.push_back(make_surface_point(surface, q));
  };

  constexpr double tol = 1e-12;
  double t_prev = t0;
  double f_prev = f(t_prev);
  for (int k = 1; k <= n; ++k) {
    const double t = k == n ? t1 : t0 + k * step;
    const double ft = f(t);
    if (f_prev == 0.0) {
      emit(t_prev);
    } else if ((f_prev < 0.0) != (ft < 0.0) && ft != 0.0) {
      emit(detail::refine_root(f, df, t_prev, t, f_prev, tol));
    }
    t_prev = t;
    f_prev = ft;
  }
  if (f_prev == 0.0) emit(t_prev);
  return roots;
}

// ---------------------------------------------------------------------------
// Validation

inline void LevelSetSurface::validate() const {
  if (orientation_sign_ != 1.0 && orientation_sign_ != -1.0)
    throw GeometryError(name_ + ": orientation sign must be +1 or -1");
  if (!box_.contains(interior_point_)) throw GeometryError(name_ + ": interior point outside bounding box");
  if (!is_inside(interior_point_)) throw GeometryError(name_ + ": designated interior point is not inside");

  // Box faces must lie in the exterior.
  constexpr int m = 12;
  for (int axis = 0; axis < 3; ++axis) {
    const int a = (axis + 1) % 3;
    const int b = (axis + 2) % 3;
    for (double side : {box_.lo[axis], box_.hi[axis]}) {
      for (int i = 0; i <= m; ++i) {
        for (int j = 0; j <= m; ++j) {
          Vec3 q;
          q[axis] = side;
          q[a] = box_.lo[a] + (box_.hi[a] - box_.lo[a]) * i / m;
          q[b] = box_.lo[b] + (box_.hi[b] - box_.lo[b]) * j / m;
          if (!(orientation_sign_ * phi_(q) > 0.0))
            throw GeometryError(name_ + ": bounding box does not contain the surface");
        }
      }
    }
  }

  // Ray test: walking from the interior point along +x, the first crossing must have an
  // outward normal pointing along +x.
  const auto roots = roots_along_line(*this, interior_point_, 0);
  const SurfacePoint* first = nullptr;
  for (const auto& r : roots) {
    if (r.position[0] > interior_point_[0] && (first == nullptr || r.position[0] < first->position[0])) first = &r;
  }
  if (first == nullptr) throw GeometryError(name_ + ": ray from interior point never crosses the surface");
  if (!(first->normal[0] > 0.0)) throw GeometryError(name_ + ": orientation sign does not give outward normals");
}

// ---------------------------------------------------------------------------
// Built-in surfaces

inline LevelSetSurface make_sphere(double radius = 1.0, const Vec3& center = Vec3::Zero()) {
  if (!(radius > 0.0)) throw InvalidConfig("sphere: radius must be positive");
  const double r2 = radius * radius;
  Box box{center.array() - 1.1 * radius, center.array() + 1.1 * radius};
  return LevelSetSurface(
      radius == 1.0 && center.isZero() ? "sphere" : "sphere(r=" + std::to_string(radius) + ")", SurfaceKind::sphere,
      [center, r2](const Vec3& p) { return (p - center).squaredNorm() - r2; },
      [center](const Vec3& p) -> Vec3 { return 2.0 * (p - center); },
      [](const Vec3&) -> Mat3 { return 2.0 * Mat3::Identity(); }, 1.0, box, center);
}

inline LevelSetSurface make_ellipsoid(double a = 1.0, double b = 0.6, double c = 0.4) {
  if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw InvalidConfig("ellipsoid: semi-axes must be positive");
  const Vec3 inv2(1.0 / (a * a), 1.0 / (b * b), 1.0 / (c * c));
  const Vec3 half(1.1 * a, 1.1 * b, 1.1 * c);
  return LevelSetSurface(
      "ellipsoid", SurfaceKind::ellipsoid,
      [inv2](const Vec3& p) { return p.cwiseProduct(p).dot(inv2) - 1.0; },
      [inv2](const Vec3& p) -> Vec3 { return 2.0 * p.cwiseProduct(inv2); },
      [inv2](const Vec3&) -> Mat3 { return (2.0 * inv2).asDiagonal(); }, 1.0, Box{-half, half}, Vec3::Zero());
}

inline std::vector<Vec3> default_molecule_centers() {
  const double s3 = std::sqrt(3.0);
  const double s6 = std::sqrt(6.0);
  return {Vec3(s3 / 3.0, 0.0, -s6 / 12.0), Vec3(-s3 / 6.0, 0.5, -s6 / 12.0), Vec3(-s3 / 6.0, -0.5, -s6 / 12.0),
          Vec3(0.0, 0.0, s6 / 4.0)};
}

/// Sum of Gaussians minus a level: phi = sum_k exp(-|x - x_k|^2 / r^2) - c.
/// phi is positive inside, so the orientation sign is -1.
inline LevelSetSurface make_molecule(std::vector<Vec3> centers = default_molecule_centers(), double r = 0.5,
                                     double c = 0.6) {
  if (!(r > 0.0 && c > 0.0)) throw InvalidConfig("molecule: radius and level must be positive");
  if (centers.empty()) throw InvalidConfig("molecule: at least one center required");
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j)
      if ((centers[i] - centers[j]).norm() < 1e-12) throw InvalidConfig("molecule: centers must be distinct");

  const double inv_r2 = 1.0 / (r * r);
  Vec3 centroid = Vec3::Zero();
  for (const auto& x : centers) centroid += x;
  centroid /= static_cast<double>(centers.size());

  auto phi = [centers, inv_r2, c](const Vec3& p) {
    double sum = 0.0;
    for (const auto& x : centers) sum += std::exp(-(p - x).squaredNorm() * inv_r2);
    return sum - c;
  };
  auto grad = [centers, inv_r2](const Vec3& p) -> Vec3 {
    Vec3 g = Vec3::Zero();
    for (const auto& x : centers) {
      const Vec3 d = p - x;
      g += (-2.0 * inv_r2 * std::exp(-d.squaredNorm() * inv_r2)) * d;
    }
    return g;
  };
  auto hessian = [centers, inv_r2](const Vec3& p) -> Mat3 {
    Mat3 hess = Mat3::Zero();
    for (const auto& x : centers) {
      const Vec3 d = p - x;
      const double e = std::exp(-d.squaredNorm() * inv_r2);
      hess += (2.0 * inv_r2 * e) * (2.0 * inv_r2 * d * d.transpose() - Mat3::Identity());
    }
    return hess;
  };
  return LevelSetSurface("molecule", SurfaceKind::molecule, phi, grad, hessian, -1.0,
                         Box{Vec3::Constant(-1.5), Vec3::Constant(1.5)}, centroid);
}

/// User-supplied level set. The orientation sign is deduced from the ray test.
inline LevelSetSurface make_custom(std::string name, LevelSetSurface::ScalarFn phi, LevelSetSurface::GradientFn grad,
                                   LevelSetSurface::HessianFn hessian, Box box, Vec3 interior_point) {
  const double sign = phi(interior_point) < 0.0 ? 1.0 : -1.0;
  return LevelSetSurface(std::move(name), SurfaceKind::custom, std::move(phi), std::move(grad), std::move(hessian),
                         sign, std::move(box), std::move(interior_point));
}

/// Parameters selecting one of the built-in surfaces.
struct SurfaceSpec {
  SurfaceKind kind = SurfaceKind::sphere;
  double sphere_radius = 1.0;
  std::array<double, 3> ellipsoid_axes{1.0, 0.6, 0.4};
  std::vector<Vec3> molecule_centers = default_molecule_centers();
  double molecule_radius = 0.5;
  double molecule_level = 0.6;
};

inline LevelSetSurface make_surface(const SurfaceSpec& spec) {
  switch (spec.kind) {
    case SurfaceKind::sphere:
      return make_sphere(spec.sphere_radius);
    case SurfaceKind::ellipsoid:
      return make_ellipsoid(spec.ellipsoid_axes[0], spec.ellipsoid_axes[1], spec.ellipsoid_axes[2]);
    case SurfaceKind::molecule:
      return make_molecule(spec.molecule_centers, spec.molecule_radius, spec.molecule_level);
    case SurfaceKind::custom:
      break;
  }
  throw InvalidConfig("make_surface: custom surfaces are built with make_custom");
}

}  // namespace stokesreg
