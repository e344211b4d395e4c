#pragma once

// Two-viscosity interface: the boundary integral equation
//
//   (lambda + 1) u(x0) = -(1/(4 pi mu0)) int S [f] dS + ((lambda - 1)/(4 pi)) int T u n dS
//
// solved by successive evaluation from u = 0. The double layer is evaluated in subtracted
// form; the single-layer forcing is computed once on a finer rule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "stokesreg/errors.hpp"
#include "stokesreg/implicit_surface.hpp"
#include "stokesreg/layer_potentials.hpp"
#include "stokesreg/parallel.hpp"
#include "stokesreg/surface_quadrature.hpp"
#include "stokesreg/types.hpp"

namespace stokesreg {

struct InterfaceProblem {
  LevelSetSurface surface;
  double mu0 = 1.0;  // exterior viscosity
  double mu1 = 2.0;  // interior viscosity
  std::function<double(const Vec3&)> gamma = [](const Vec3& x) { return 1.0 + x[0] * x[0]; };
  std::function<Vec3(const Vec3&)> grad_gamma = [](const Vec3& x) { return Vec3(2.0 * x[0], 0.0, 0.0); };

  double lambda() const { return mu1 / mu0; }

  void validate() const {
    if (!(mu0 > 0.0 && mu1 > 0.0)) throw InvalidConfig("InterfaceProblem: viscosities must be positive");
    if (!gamma || !grad_gamma) throw InvalidConfig("InterfaceProblem: surface tension not set");
  }
};

/// [f] = 2 gamma H n - grad_S gamma. Computes H when the point does not carry it.
inline Vec3 surface_force_jump(const InterfaceProblem& problem, const SurfacePoint& p) {
  const double h = p.mean_curvature ? *p.mean_curvature : mean_curvature(problem.surface, p.position);
  return 2.0 * problem.gamma(p.position) * h * p.normal - surface_gradient(problem.grad_gamma(p.position), p.normal);
}

inline VectorField surface_force_jumps(const InterfaceProblem& problem, const QuadratureRule& rule) {
  VectorField f(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) f[i] = surface_force_jump(problem, rule[i].point);
  return f;
}

/// -(1/(4 pi mu0)) int S [f] dS at the targets, integrated on `fine_rule` with the sharp
/// single-layer smoothing and regularization delta_fine.
inline VectorField interface_rhs(const InterfaceProblem& problem, const QuadratureRule& fine_rule,
                                 const std::vector<Vec3>& targets, double delta_fine) {
  problem.validate();
  const auto ctx = KernelContext::make(delta_fine, StokesletVariant::sharp);
  VectorField sl = single_layer(fine_rule, surface_force_jumps(problem, fine_rule), targets, ctx);
  for (auto& v : sl) v *= -2.0 / problem.mu0;  // 8 pi / (4 pi mu0)
  return sl;
}

inline std::vector<Vec3> node_positions(const QuadratureRule& rule) {
  std::vector<Vec3> out(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) out[i] = rule.position(i);
  return out;
}

struct IterationTrace {
  std::vector<double> errors;  // e^N = max |u^N - u^(N-1)|, N = 1, 2, ...
  int iterations = 0;
  bool converged = false;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& message, IterationTrace trace) : Error(message), trace_(std::move(trace)) {}
  const IterationTrace& trace() const { return trace_; }

 private:
  IterationTrace trace_;
};

struct InterfaceSolution {
  VectorField u;
  IterationTrace trace;
};

inline double max_difference(const VectorField& a, const VectorField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).norm());
  return m;
}

/// Successive evaluation with a precomputed forcing term `rhs` at the nodes of `rule`.
/// ctx.delta and ctx.s3 select the double-layer regularization.
inline InterfaceSolution picard_solve(const InterfaceProblem& problem, const QuadratureRule& rule,
                                      const VectorField& rhs, const KernelContext& ctx, double tol = 1e-10,
                                      int max_iter = 50) {
  problem.validate();
  if (!(tol > 0.0)) throw InvalidConfig("picard_solve: tol must be positive");
  if (max_iter < 1) throw InvalidConfig("picard_solve: max_iter must be at least 1");
  if (rhs.size() != rule.size()) throw UsageError("picard_solve: forcing length differs from node count");

  const double lambda = problem.lambda();
  InterfaceSolution sol{VectorField(rule.size(), Vec3::Zero()), {}};
  VectorField next(rule.size());
  bool zero = true;
  for (int n = 1; n <= max_iter; ++n) {
    if (lambda == 1.0 || zero) {
      for (std::size_t i = 0; i < rule.size(); ++i) next[i] = rhs[i] / (lambda + 1.0);
    } else {
      const VectorField dl = double_layer_subtracted_at_nodes(rule, sol.u, ctx);
      for (std::size_t i = 0; i < rule.size(); ++i)
        next[i] = (rhs[i] + 2.0 * (lambda - 1.0) * dl[i]) / (lambda + 1.0);
    }
    const double e = max_difference(next, sol.u);
    std::swap(sol.u, next);
    zero = false;
    sol.trace.errors.push_back(e);
    sol.trace.iterations = n;
    // With lambda = 1 the update does not depend on u, so one application is the fixed point.
    if (e < tol || lambda == 1.0) {
      sol.trace.converged = true;
      return sol;
    }
  }
  throw NonConvergence("picard_solve: no convergence in " + std::to_string(max_iter) + " iterations",
                       std::move(sol.trace));
}

/// Builds the forcing on `fine_rule` (delta_fine = delta_factor * fine h, sharp Stokeslet)
/// and iterates on `rule` with delta = delta_factor * h and the given stresslet smoothing.
inline InterfaceSolution picard_solve(const InterfaceProblem& problem, const QuadratureRule& rule,
                                      const QuadratureRule& fine_rule, double delta_factor, double tol, int max_iter,
                                      StressletVariant variant) {
  if (!(delta_factor > 0.0)) throw InvalidConfig("picard_solve: delta_factor must be positive");
  const VectorField rhs = interface_rhs(problem, fine_rule, node_positions(rule), delta_factor * fine_rule.h());
  const auto ctx = KernelContext::make(delta_factor * rule.h(), StokesletVariant::sharp, variant);
  return picard_solve(problem, rule, rhs, ctx, tol, max_iter);
}

/// How the subtraction value u(x0) is chosen at a target that is not a node.
enum class TransferMode {
  nearest_node,    // u at the nearest node of the rule
  self_consistent  // solve the 3x3 fixed-point relation at the target for u(x0)
};

struct TargetEvaluation {
  VectorField values;
  std::vector<bool> far_from_nodes;  // target farther than 2h from every node
};

/// One application of the right-hand side, divided by (lambda + 1), at on-surface targets,
/// using the converged density `u` on `rule`. `rhs_at_targets` is the forcing at the targets.
inline TargetEvaluation evaluate_at_targets(const InterfaceProblem& problem, const QuadratureRule& rule,
                                            const VectorField& u, const std::vector<Vec3>& targets,
                                            const VectorField& rhs_at_targets, const KernelContext& ctx,
                                            TransferMode mode = TransferMode::nearest_node) {
  problem.validate();
  detail::check_aligned(rule, u, "evaluate_at_targets");
  if (rhs_at_targets.size() != targets.size())
    throw UsageError("evaluate_at_targets: forcing length differs from target count");

  const double lambda = problem.lambda();
  const double c = (lambda - 1.0) / (4.0 * kPi);
  const detail::PairSums sums(rule, ctx);
  const detail::Soa3 u_soa(u);
  const auto& src = rule.arrays();
  TargetEvaluation out{VectorField(targets.size()), std::vector<bool>(targets.size(), false)};
  std::vector<char> far(targets.size(), 0);

  parallel_for(targets.size(), [&](std::size_t t) {
    const Vec3& y = targets[t];
    double best = std::numeric_limits<double>::infinity();
    std::size_t nearest = 0;
    for (std::size_t j = 0; j < src.size(); ++j) {
      const double dx = y[0] - src.x[j], dy = y[1] - src.y[j], dz = y[2] - src.z[j];
      const double r2 = dx * dx + dy * dy + dz * dz;
      if (r2 < best) {
        best = r2;
        nearest = j;
      }
    }
    far[t] = std::sqrt(best) > 2.0 * rule.h();

    const detail::IdentitySums s = sums.stresslet_identity(&u, &u_soa, y);
    if (mode == TransferMode::nearest_node) {
      const Vec3& q0 = u[nearest];
      const Vec3 dl = (s.applied - s.identity * q0 + 4.0 * kPi * q0) / (8.0 * kPi);
      out.values[t] = (rhs_at_targets[t] + 2.0 * (lambda - 1.0) * dl) / (lambda + 1.0);
    } else {
      const Mat3 a = 2.0 * Mat3::Identity() + c * s.identity;
      out.values[t] = a.partialPivLu().solve(rhs_at_targets[t] + c * s.applied);
    }
  });
  for (std::size_t t = 0; t < targets.size(); ++t) out.far_from_nodes[t] = far[t] != 0;
  return out;
}

struct ErrorNorms {
  double max;
  double l2;  // (sum e^2 / n)^(1/2)
};

/// Pointwise Euclidean differences of two fields on the same targets.
inline ErrorNorms richardson_error(const VectorField& coarse, const VectorField& fine_on_coarse) {
  if (coarse.size() != fine_on_coarse.size()) throw UsageError("richardson_error: length mismatch");
  if (coarse.empty()) throw UsageError("richardson_error: empty fields");
  double mx = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const double e = (coarse[i] - fine_on_coarse[i]).norm();
    mx = std::max(mx, e);
    sum += e * e;
  }
  return {mx, std::sqrt(sum / static_cast<double>(coarse.size()))};
}

}  // namespace stokesreg
