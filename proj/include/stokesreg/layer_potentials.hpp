#pragma once

// Quadrature sums for the regularized single layer, the subtracted regularized double
// layer, their combination, and the stresslet identity.
//
// Every pairwise sum is split at r = kFarCutoff * delta. Beyond it the smoothing factor
// equals 1 to double precision and the exact kernel is summed in a SIMD pass over all
// sources (near pairs masked out); inside it the regularized kernel is summed over the
// neighbours found through a cell list. Both passes run in a fixed order per target, so
// results do not depend on the thread count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stokesreg/errors.hpp"
#include "stokesreg/parallel.hpp"
#include "stokesreg/stokes_kernels.hpp"
#include "stokesreg/surface_quadrature.hpp"
#include "stokesreg/types.hpp"

namespace stokesreg {

enum class Location { inside, on_surface, outside };

/// chi(y) in the stresslet identity: integral of T_ijk n_k = chi delta_ij.
inline double identity_chi(Location loc) {
  switch (loc) {
    case Location::inside: return 8.0 * kPi;
    case Location::on_surface: return 4.0 * kPi;
    case Location::outside: return 0.0;
  }
  return 0.0;
}

struct EvaluationTarget {
  Vec3 position;
  Location location;
  std::optional<std::size_t> node;  // set when the target is a node of the rule

  static EvaluationTarget inside(const Vec3& p) { return {p, Location::inside, std::nullopt}; }
  static EvaluationTarget outside(const Vec3& p) { return {p, Location::outside, std::nullopt}; }
  static EvaluationTarget on_surface(const Vec3& p) { return {p, Location::on_surface, std::nullopt}; }
  static EvaluationTarget at_node(const QuadratureRule& rule, std::size_t i) {
    return {rule.position(i), Location::on_surface, i};
  }
};

namespace detail {

inline void check_aligned(const QuadratureRule& rule, const VectorField& v, const char* what) {
  if (v.size() != rule.size()) throw UsageError(std::string(what) + ": density length differs from node count");
}

struct Soa3 {
  std::vector<double> x, y, z;
  explicit Soa3(const VectorField& v) : x(v.size()), y(v.size()), z(v.size()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      x[i] = v[i][0];
      y[i] = v[i][1];
      z[i] = v[i][2];
    }
  }
};

/// Uniform cell list over the source nodes with cell size equal to the near radius.
class NearFieldIndex {
 public:
  NearFieldIndex(const NodeArrays& src, double radius) : radius2_(radius * radius) {
    const std::size_t n = src.size();
    if (n == 0) return;
    lo_ = {src.x[0], src.y[0], src.z[0]};
    std::array<double, 3> hi = lo_;
    for (std::size_t j = 0; j < n; ++j) {
      const std::array<double, 3> p{src.x[j], src.y[j], src.z[j]};
      for (int d = 0; d < 3; ++d) {
        lo_[d] = std::min(lo_[d], p[d]);
        hi[d] = std::max(hi[d], p[d]);
      }
    }
    inv_cell_ = 1.0 / radius;
    for (int d = 0; d < 3; ++d) {
      dims_[d] = static_cast<long>(std::floor((hi[d] - lo_[d]) * inv_cell_)) + 1;
      dims_[d] = std::clamp<long>(dims_[d], 1, 1024);
    }
    const std::size_t cells = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
    std::vector<std::size_t> cell_of(n);
    starts_.assign(cells + 1, 0);
    for (std::size_t j = 0; j < n; ++j) {
      cell_of[j] = linear(cell_coord(src.x[j], 0), cell_coord(src.y[j], 1), cell_coord(src.z[j], 2));
      ++starts_[cell_of[j] + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) starts_[c + 1] += starts_[c];
    order_.resize(n);
    std::vector<std::size_t> fill(starts_.begin(), starts_.end() - 1);
    for (std::size_t j = 0; j < n; ++j) order_[fill[cell_of[j]]++] = j;
  }

  double radius2() const { return radius2_; }

  /// Calls fn(j, dx, dy, dz, r2) for every source with r2 < radius^2, d = y - x_j.
  template <class Fn>
  void for_each_near(const NodeArrays& src, const Vec3& y, Fn&& fn) const {
    if (order_.empty()) return;
    const long cx = cell_coord(y[0], 0), cy = cell_coord(y[1], 1), cz = cell_coord(y[2], 2);
    for (long ix = std::max(cx - 1, 0L); ix <= std::min(cx + 1, dims_[0] - 1); ++ix) {
      for (long iy = std::max(cy - 1, 0L); iy <= std::min(cy + 1, dims_[1] - 1); ++iy) {
        for (long iz = std::max(cz - 1, 0L); iz <= std::min(cz + 1, dims_[2] - 1); ++iz) {
          const std::size_t c = linear(ix, iy, iz);
          for (std::size_t k = starts_[c]; k < starts_[c + 1]; ++k) {
            const std::size_t j = order_[k];
            const double dx = y[0] - src.x[j];
            const double dy = y[1] - src.y[j];
            const double dz = y[2] - src.z[j];
            const double r2 = dx * dx + dy * dy + dz * dz;
            if (r2 < radius2_) fn(j, dx, dy, dz, r2);
          }
        }
      }
    }
  }

 private:
  long cell_coord(double v, int d) const {
    const long c = static_cast<long>(std::floor((v - lo_[d]) * inv_cell_));
    return std::clamp<long>(c, -1, dims_[d]);
  }
  std::size_t linear(long ix, long iy, long iz) const {
    return static_cast<std::size_t>((ix * dims_[1] + iy) * dims_[2] + iz);
  }

  double radius2_;
  std::array<double, 3> lo_{};
  double inv_cell_ = 1.0;
  std::array<long, 3> dims_{1, 1, 1};
  std::vector<std::size_t> starts_;
  std::vector<std::size_t> order_;
};

inline double near_radius(const KernelContext& ctx) { return SmoothingFunction::kFarCutoff * ctx.delta; }

// --- far field: exact kernels, pairs with r2 < near2 contribute nothing ---------------

inline Vec3 far_stokeslet(const NodeArrays& src, const Soa3& f, const Vec3& y, double near2) {
  const double yx = y[0], yy = y[1], yz = y[2];
  const double *sx = src.x.data(), *sy = src.y.data(), *sz = src.z.data(), *w = src.w.data();
  const double *fx = f.x.data(), *fy = f.y.data(), *fz = f.z.data();
  double ux = 0.0, uy = 0.0, uz = 0.0;
  const std::size_t n = src.size();
#pragma omp simd reduction(+ : ux, uy, uz)
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = yx - sx[j];
    const double dy = yy - sy[j];
    const double dz = yz - sz[j];
    const double r2 = dx * dx + dy * dy + dz * dz;
    const double inv = r2 >= near2 ? 1.0 / std::sqrt(r2) : 0.0;
    const double a = w[j] * inv;
    const double proj = a * inv * inv * (dx * fx[j] + dy * fy[j] + dz * fz[j]);
    ux += a * fx[j] + proj * dx;
    uy += a * fy[j] + proj * dy;
    uz += a * fz[j] + proj * dz;
  }
  return {ux, uy, uz};
}

/// sum of T(y, x_j)[q_j - q0] n_j w_j over far sources
inline Vec3 far_stresslet(const NodeArrays& src, const Soa3& q, const Vec3& q0, const Vec3& y, double near2) {
  const double yx = y[0], yy = y[1], yz = y[2];
  const double q0x = q0[0], q0y = q0[1], q0z = q0[2];
  const double *sx = src.x.data(), *sy = src.y.data(), *sz = src.z.data(), *w = src.w.data();
  const double *nx = src.nx.data(), *ny = src.ny.data(), *nz = src.nz.data();
  const double *qx = q.x.data(), *qy = q.y.data(), *qz = q.z.data();
  double ux = 0.0, uy = 0.0, uz = 0.0;
  const std::size_t n = src.size();
#pragma omp simd reduction(+ : ux, uy, uz)
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = yx - sx[j];
    const double dy = yy - sy[j];
    const double dz = yz - sz[j];
    const double r2 = dx * dx + dy * dy + dz * dz;
    const double inv = r2 >= near2 ? 1.0 / std::sqrt(r2) : 0.0;
    const double inv2 = inv * inv;
    const double c = -6.0 * w[j] * inv2 * inv2 * inv;
    const double dq = dx * (qx[j] - q0x) + dy * (qy[j] - q0y) + dz * (qz[j] - q0z);
    const double dn = dx * nx[j] + dy * ny[j] + dz * nz[j];
    const double s = c * dq * dn;
    ux += s * dx;
    uy += s * dy;
    uz += s * dz;
  }
  return {ux, uy, uz};
}

/// Far-field single and (subtracted) double layer sums in one pass.
inline std::pair<Vec3, Vec3> far_stokeslet_stresslet(const NodeArrays& src, const Soa3& f, const Soa3& q,
                                                     const Vec3& q0, const Vec3& y, double near2) {
  const double yx = y[0], yy = y[1], yz = y[2];
  const double q0x = q0[0], q0y = q0[1], q0z = q0[2];
  const double *sx = src.x.data(), *sy = src.y.data(), *sz = src.z.data(), *w = src.w.data();
  const double *nx = src.nx.data(), *ny = src.ny.data(), *nz = src.nz.data();
  const double *fx = f.x.data(), *fy = f.y.data(), *fz = f.z.data();
  const double *qx = q.x.data(), *qy = q.y.data(), *qz = q.z.data();
  double ux = 0.0, uy = 0.0, uz = 0.0, vx = 0.0, vy = 0.0, vz = 0.0;
  const std::size_t n = src.size();
#pragma omp simd reduction(+ : ux, uy, uz, vx, vy, vz)
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = yx - sx[j];
    const double dy = yy - sy[j];
    const double dz = yz - sz[j];
    const double r2 = dx * dx + dy * dy + dz * dz;
    const double inv = r2 >= near2 ? 1.0 / std::sqrt(r2) : 0.0;
    const double inv2 = inv * inv;
    const double a = w[j] * inv;
    const double proj = a * inv2 * (dx * fx[j] + dy * fy[j] + dz * fz[j]);
    ux += a * fx[j] + proj * dx;
    uy += a * fy[j] + proj * dy;
    uz += a * fz[j] + proj * dz;
    const double dq = dx * (qx[j] - q0x) + dy * (qy[j] - q0y) + dz * (qz[j] - q0z);
    const double dn = dx * nx[j] + dy * ny[j] + dz * nz[j];
    const double s = -6.0 * a * inv2 * inv2 * dq * dn;
    vx += s * dx;
    vy += s * dy;
    vz += s * dz;
  }
  return {Vec3(ux, uy, uz), Vec3(vx, vy, vz)};
}

struct IdentitySums {
  Vec3 applied = Vec3::Zero();   // sum T q n w, no subtraction
  Mat3 identity = Mat3::Zero();  // sum T n w as a matrix
};

inline IdentitySums far_stresslet_identity(const NodeArrays& src, const Soa3* q, const Vec3& y, double near2) {
  const double yx = y[0], yy = y[1], yz = y[2];
  const double *sx = src.x.data(), *sy = src.y.data(), *sz = src.z.data(), *w = src.w.data();
  const double *nx = src.nx.data(), *ny = src.ny.data(), *nz = src.nz.data();
  double mxx = 0.0, mxy = 0.0, mxz = 0.0, myy = 0.0, myz = 0.0, mzz = 0.0;
  const std::size_t n = src.size();
#pragma omp simd reduction(+ : mxx, mxy, mxz, myy, myz, mzz)
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = yx - sx[j];
    const double dy = yy - sy[j];
    const double dz = yz - sz[j];
    const double r2 = dx * dx + dy * dy + dz * dz;
    const double inv = r2 >= near2 ? 1.0 / std::sqrt(r2) : 0.0;
    const double inv2 = inv * inv;
    const double c = -6.0 * w[j] * inv2 * inv2 * inv;
    const double s = c * (dx * nx[j] + dy * ny[j] + dz * nz[j]);
    mxx += s * dx * dx;
    mxy += s * dx * dy;
    mxz += s * dx * dz;
    myy += s * dy * dy;
    myz += s * dy * dz;
    mzz += s * dz * dz;
  }
  IdentitySums out;
  out.identity << mxx, mxy, mxz, mxy, myy, myz, mxz, myz, mzz;
  if (q != nullptr) out.applied = far_stresslet(src, *q, Vec3::Zero(), y, near2);
  return out;
}

// --- near field: regularized kernels ---------------------------------------------------

inline Vec3 near_stokeslet(const NodeArrays& src, const NearFieldIndex& index, const VectorField& f, const Vec3& y,
                           const KernelContext& ctx) {
  const double inv_delta = 1.0 / ctx.delta;
  const double inv_delta3 = inv_delta * inv_delta * inv_delta;
  Vec3 u = Vec3::Zero();
  index.for_each_near(src, y, [&](std::size_t j, double dx, double dy, double dz, double r2) {
    const double rho = std::sqrt(r2) * inv_delta;
    const double e = std::exp(-rho * rho);
    const double erf_rho = std::erf(rho);
    const double a = ctx.s1.scaled(rho, erf_rho, e) * inv_delta;
    const double b = ctx.s2.scaled(rho, erf_rho, e) * inv_delta3;
    const Vec3& fj = f[j];
    const double proj = b * (dx * fj[0] + dy * fj[1] + dz * fj[2]);
    u += src.w[j] * (a * fj + proj * Vec3(dx, dy, dz));
  });
  return u;
}

inline double near_stresslet_factor(const SmoothingFunction& s3, double r2, double inv_delta, double inv_delta5) {
  return s3.scaled(std::sqrt(r2) * inv_delta) * inv_delta5;
}

inline Vec3 near_stresslet(const NodeArrays& src, const NearFieldIndex& index, const VectorField& q, const Vec3& q0,
                           const Vec3& y, const KernelContext& ctx) {
  const double inv_delta = 1.0 / ctx.delta;
  const double inv_delta5 = std::pow(inv_delta, 5);
  Vec3 u = Vec3::Zero();
  index.for_each_near(src, y, [&](std::size_t j, double dx, double dy, double dz, double r2) {
    const double c = -6.0 * src.w[j] * near_stresslet_factor(ctx.s3, r2, inv_delta, inv_delta5);
    const Vec3 qt = q[j] - q0;
    const double dq = dx * qt[0] + dy * qt[1] + dz * qt[2];
    const double dn = dx * src.nx[j] + dy * src.ny[j] + dz * src.nz[j];
    u += (c * dq * dn) * Vec3(dx, dy, dz);
  });
  return u;
}

/// Near-field single layer and subtracted double layers for several stresslet smoothings in one
/// traversal; erf and exp are evaluated once per pair. dbl[k] uses s3[k].
inline Vec3 near_layer_sum(const NodeArrays& src, const NearFieldIndex& index, const VectorField& f,
                           const VectorField& q, const Vec3& q0, const Vec3& y, const KernelContext& ctx,
                           const std::vector<SmoothingFunction>& s3, std::vector<Vec3>& dbl) {
  const double inv_delta = 1.0 / ctx.delta;
  const double inv_delta3 = inv_delta * inv_delta * inv_delta;
  const double inv_delta5 = inv_delta3 * inv_delta * inv_delta;
  Vec3 u = Vec3::Zero();
  dbl.assign(s3.size(), Vec3::Zero());
  index.for_each_near(src, y, [&](std::size_t j, double dx, double dy, double dz, double r2) {
    const double rho = std::sqrt(r2) * inv_delta;
    const double e = std::exp(-rho * rho);
    const double erf_rho = std::erf(rho);
    const Vec3 d(dx, dy, dz);
    const Vec3& fj = f[j];
    const double a = ctx.s1.scaled(rho, erf_rho, e) * inv_delta;
    const double b = ctx.s2.scaled(rho, erf_rho, e) * inv_delta3;
    u += src.w[j] * (a * fj + (b * d.dot(fj)) * d);
    const Vec3 qt = q[j] - q0;
    const double dqn = -6.0 * src.w[j] * d.dot(qt) * (dx * src.nx[j] + dy * src.ny[j] + dz * src.nz[j]);
    for (std::size_t k = 0; k < s3.size(); ++k) dbl[k] += (dqn * s3[k].scaled(rho, erf_rho, e) * inv_delta5) * d;
  });
  return u;
}

inline IdentitySums near_stresslet_identity(const NodeArrays& src, const NearFieldIndex& index, const VectorField* q,
                                            const Vec3& y, const KernelContext& ctx) {
  const double inv_delta = 1.0 / ctx.delta;
  const double inv_delta5 = std::pow(inv_delta, 5);
  IdentitySums out;
  index.for_each_near(src, y, [&](std::size_t j, double dx, double dy, double dz, double r2) {
    const double c = -6.0 * src.w[j] * near_stresslet_factor(ctx.s3, r2, inv_delta, inv_delta5);
    const Vec3 d(dx, dy, dz);
    const double s = c * (dx * src.nx[j] + dy * src.ny[j] + dz * src.nz[j]);
    out.identity += s * d * d.transpose();
    if (q != nullptr) out.applied += (s * d.dot((*q)[j])) * d;
  });
  return out;
}

/// Full regularized sums for one rule and kernel context.
class PairSums {
 public:
  PairSums(const QuadratureRule& rule, const KernelContext& ctx)
      : src_(rule.arrays()), ctx_(ctx), index_(src_, near_radius(ctx)) {}

  const KernelContext& context() const { return ctx_; }

  /// sum_j S_reg(y, x_j) f_j w_j
  Vec3 stokeslet(const VectorField& f, const Soa3& f_soa, const Vec3& y) const {
    return far_stokeslet(src_, f_soa, y, index_.radius2()) + near_stokeslet(src_, index_, f, y, ctx_);
  }

  /// sum_j T_reg(y, x_j)[q_j - q0] n_j w_j
  Vec3 stresslet(const VectorField& q, const Soa3& q_soa, const Vec3& q0, const Vec3& y) const {
    return far_stresslet(src_, q_soa, q0, y, index_.radius2()) + near_stresslet(src_, index_, q, q0, y, ctx_);
  }

  double near_radius2() const { return index_.radius2(); }
  const NearFieldIndex& index() const { return index_; }
  const NodeArrays& sources() const { return src_; }

  IdentitySums stresslet_identity(const VectorField* q, const Soa3* q_soa, const Vec3& y) const {
    IdentitySums far = far_stresslet_identity(src_, q_soa, y, index_.radius2());
    const IdentitySums near = near_stresslet_identity(src_, index_, q, y, ctx_);
    far.identity += near.identity;
    far.applied += near.applied;
    return far;
  }

 private:
  const NodeArrays& src_;
  KernelContext ctx_;
  NearFieldIndex index_;
};

}  // namespace detail

/// (1/8 pi) sum_j S_reg(y, x_j) f_j w_j. Use sharp smoothing for on-surface targets.
inline VectorField single_layer(const QuadratureRule& rule, const VectorField& f, const std::vector<Vec3>& targets,
                                const KernelContext& ctx) {
  detail::check_aligned(rule, f, "single_layer");
  const detail::PairSums sums(rule, ctx);
  const detail::Soa3 f_soa(f);
  VectorField out(targets.size());
  parallel_for(targets.size(), [&](std::size_t i) { out[i] = sums.stokeslet(f, f_soa, targets[i]) / (8.0 * kPi); });
  return out;
}

inline Vec3 single_layer(const QuadratureRule& rule, const VectorField& f, const Vec3& target,
                         const KernelContext& ctx) {
  return single_layer(rule, f, std::vector<Vec3>{target}, ctx).front();
}

/// Subtracted regularized double layer
///   -(3/4 pi) sum_j [d.(q_j - q0)][d.n_j] d s3(r/delta)/r^5 w_j + chi(y) q0 / (8 pi).
/// For a node target q0 defaults to q at that node; otherwise q0 (the density at the
/// closest boundary point) must be given.
inline Vec3 double_layer_subtracted(const QuadratureRule& rule, const VectorField& q, const EvaluationTarget& target,
                                    const KernelContext& ctx, std::optional<Vec3> q0 = std::nullopt) {
  detail::check_aligned(rule, q, "double_layer_subtracted");
  if (!q0) {
    if (!target.node) throw UsageError("double_layer_subtracted: no subtraction point for a non-node target");
    q0 = q.at(*target.node);
  }
  const detail::PairSums sums(rule, ctx);
  const Vec3 integral = sums.stresslet(q, detail::Soa3(q), *q0, target.position);
  return (integral + identity_chi(target.location) * *q0) / (8.0 * kPi);
}

/// double_layer_subtracted at every node of the rule.
inline VectorField double_layer_subtracted_at_nodes(const QuadratureRule& rule, const VectorField& q,
                                                    const KernelContext& ctx) {
  detail::check_aligned(rule, q, "double_layer_subtracted");
  const detail::PairSums sums(rule, ctx);
  const detail::Soa3 q_soa(q);
  VectorField out(rule.size());
  parallel_for(rule.size(), [&](std::size_t i) {
    out[i] = sums.stresslet(q, q_soa, q[i], rule.position(i)) / (8.0 * kPi) + 0.5 * q[i];
  });
  return out;
}

/// M_ab = sum_j T_reg,abk(y, x_j) n_k(x_j) w_j, without subtraction. Compare with chi(y) I.
inline Mat3 stresslet_identity(const QuadratureRule& rule, const Vec3& target, const KernelContext& ctx) {
  const detail::PairSums sums(rule, ctx);
  return sums.stresslet_identity(nullptr, nullptr, target).identity;
}

inline std::vector<Mat3> stresslet_identity(const QuadratureRule& rule, const std::vector<Vec3>& targets,
                                            const KernelContext& ctx) {
  const detail::PairSums sums(rule, ctx);
  std::vector<Mat3> out(targets.size());
  parallel_for(targets.size(),
               [&](std::size_t i) { out[i] = sums.stresslet_identity(nullptr, nullptr, targets[i]).identity; });
  return out;
}

/// -SL[f_jump] - DL[u_jump] at node i: the on-surface (two-sided average) velocity.
inline Vec3 layer_sum(const QuadratureRule& rule, const VectorField& f_jump, const VectorField& u_jump, std::size_t i,
                      const KernelContext& ctx) {
  return -single_layer(rule, f_jump, rule.position(i), ctx) -
         double_layer_subtracted(rule, u_jump, EvaluationTarget::at_node(rule, i), ctx);
}

/// Layer sum at every node for several stresslet smoothings at once; the single layer
/// (ctx.s1, ctx.s2) and the far-field stresslet are shared. Result k uses stresslet_smoothings[k].
inline std::vector<VectorField> layer_sum_at_nodes(const QuadratureRule& rule, const VectorField& f_jump,
                                                   const VectorField& u_jump, const KernelContext& ctx,
                                                   const std::vector<SmoothingFunction>& stresslet_smoothings) {
  detail::check_aligned(rule, f_jump, "layer_sum");
  detail::check_aligned(rule, u_jump, "layer_sum");
  const detail::PairSums sl(rule, ctx);
  const detail::Soa3 f_soa(f_jump), u_soa(u_jump);
  const auto& src = sl.sources();
  std::vector<VectorField> out(stresslet_smoothings.size(), VectorField(rule.size()));
  parallel_for(rule.size(), [&](std::size_t i) {
    const Vec3 y = rule.position(i);
    const auto [single_far, far] = detail::far_stokeslet_stresslet(src, f_soa, u_soa, u_jump[i], y, sl.near_radius2());
    thread_local std::vector<Vec3> near_dbl;
    const Vec3 single_near =
        detail::near_layer_sum(src, sl.index(), f_jump, u_jump, u_jump[i], y, ctx, stresslet_smoothings, near_dbl);
    const Vec3 single = (single_far + single_near) / (8.0 * kPi);
    for (std::size_t k = 0; k < stresslet_smoothings.size(); ++k) {
      const Vec3 dbl = (far + near_dbl[k]) / (8.0 * kPi) + 0.5 * u_jump[i];
      out[k][i] = -single - dbl;
    }
  });
  return out;
}

inline VectorField layer_sum_at_nodes(const QuadratureRule& rule, const VectorField& f_jump, const VectorField& u_jump,
                                      const KernelContext& ctx) {
  return layer_sum_at_nodes(rule, f_jump, u_jump, ctx, {ctx.s3}).front();
}

}  // namespace stokesreg
