#pragma once

// Point-pair Stokes kernels, exact and regularized. No 1/(8 pi) prefactors here.

#include <cmath>

#include "stokesreg/errors.hpp"
#include "stokesreg/smoothing.hpp"
#include "stokesreg/types.hpp"

namespace stokesreg {

enum class StressletVariant { base, sharp_original, sharp_new };
enum class StokesletVariant { base, sharp };

inline SmoothingId smoothing_id(StressletVariant v) {
  switch (v) {
    case StressletVariant::base: return SmoothingId::s3_base;
    case StressletVariant::sharp_original: return SmoothingId::s3_sharp_original;
    case StressletVariant::sharp_new: return SmoothingId::s3_sharp_new;
  }
  return SmoothingId::s3_base;
}

/// Regularization length and the smoothing functions used for each layer.
struct KernelContext {
  double delta;
  SmoothingFunction s1;
  SmoothingFunction s2;
  SmoothingFunction s3;

  static KernelContext make(double delta, StokesletVariant single = StokesletVariant::sharp,
                            StressletVariant dbl = StressletVariant::sharp_new) {
    if (!(delta > 0.0)) throw InvalidConfig("KernelContext: delta must be positive");
    const auto& sl = single_layer_smoothings();
    const bool sharp = single == StokesletVariant::sharp;
    return {delta, sharp ? sl.s1_sharp : sl.s1_base, sharp ? sl.s2_sharp : sl.s2_base,
            make_smoothing(smoothing_id(dbl))};
  }
};

/// S_ij(y, x) = delta_ij / r + d_i d_j / r^3, d = y - x.
inline Mat3 stokeslet(const Vec3& y, const Vec3& x) {
  const Vec3 d = y - x;
  const double r = d.norm();
  if (r == 0.0) throw SingularityError("stokeslet: coincident points");
  return Mat3::Identity() / r + d * d.transpose() / (r * r * r);
}

/// T_ijk(y, x) q_j n_k = -6 d_i (d.q)(d.n) / r^5.
inline Vec3 stresslet_apply(const Vec3& y, const Vec3& x, const Vec3& q, const Vec3& n) {
  const Vec3 d = y - x;
  const double r2 = d.squaredNorm();
  if (r2 == 0.0) throw SingularityError("stresslet_apply: coincident points");
  const double r = std::sqrt(r2);
  return (-6.0 * d.dot(q) * d.dot(n) / (r2 * r2 * r)) * d;
}

/// Regularized T_ijk q~_j n_k: 1/r^5 replaced by s3(r/delta)/r^5. Zero at r = 0.
inline Vec3 regularized_stresslet_summand(const Vec3& y, const Vec3& x, const Vec3& q_tilde, const Vec3& n,
                                          const KernelContext& ctx) {
  const Vec3 d = y - x;
  const double r = d.norm();
  const double d5 = std::pow(ctx.delta, 5);
  const double factor = ctx.s3.scaled(r / ctx.delta) / d5;
  return (-6.0 * d.dot(q_tilde) * d.dot(n) * factor) * d;
}

/// Regularized S_ij f_j: f s1(r/delta)/r + d (d.f) s2(r/delta)/r^3. Equals f L1/delta at r = 0.
inline Vec3 regularized_stokeslet_summand(const Vec3& y, const Vec3& x, const Vec3& f, const KernelContext& ctx) {
  const Vec3 d = y - x;
  const double rho = d.norm() / ctx.delta;
  const double a = ctx.s1.scaled(rho) / ctx.delta;
  const double b = ctx.s2.scaled(rho) / (ctx.delta * ctx.delta * ctx.delta);
  return a * f + (b * d.dot(f)) * d;
}

}  // namespace stokesreg
