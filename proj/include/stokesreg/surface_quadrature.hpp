#pragma once

// Grid-projection quadrature for closed surfaces. For each coordinate direction the
// surface is intersected with lines through an origin-aligned lattice of spacing h in
// the perpendicular plane; every intersection whose normal is not too oblique to the
// line becomes a node with weight psi_i(n) h^2 / |n_i|, psi being a smooth partition
// of unity on the unit sphere of normals.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "stokesreg/errors.hpp"
#include "stokesreg/implicit_surface.hpp"
#include "stokesreg/parallel.hpp"
#include "stokesreg/types.hpp"

namespace stokesreg {

inline constexpr double kDefaultTheta = 1.0 / 3.0;

struct QuadratureNode {
  SurfacePoint point;
  double weight;
  int axis;  // 0, 1 or 2: the line direction that produced the node
  double pou_weight;
};

/// Structure-of-arrays copy of node data used by the pairwise sums.
struct NodeArrays {
  std::vector<double> x, y, z;
  std::vector<double> nx, ny, nz;
  std::vector<double> w;

  std::size_t size() const { return w.size(); }
};

class QuadratureRule {
 public:
  QuadratureRule(LevelSetSurface surface, double h, double theta, std::vector<QuadratureNode> nodes)
      : surface_(std::move(surface)), h_(h), theta_(theta), nodes_(std::move(nodes)) {
    const std::size_t n = nodes_.size();
    for (auto* v : {&soa_.x, &soa_.y, &soa_.z, &soa_.nx, &soa_.ny, &soa_.nz, &soa_.w}) v->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& nd = nodes_[i];
      soa_.x[i] = nd.point.position[0];
      soa_.y[i] = nd.point.position[1];
      soa_.z[i] = nd.point.position[2];
      soa_.nx[i] = nd.point.normal[0];
      soa_.ny[i] = nd.point.normal[1];
      soa_.nz[i] = nd.point.normal[2];
      soa_.w[i] = nd.weight;
    }
  }

  const LevelSetSurface& surface() const { return surface_; }
  double h() const { return h_; }
  double theta() const { return theta_; }
  const std::vector<QuadratureNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const QuadratureNode& operator[](std::size_t i) const { return nodes_[i]; }
  const NodeArrays& arrays() const { return soa_; }

  Vec3 position(std::size_t i) const { return nodes_[i].point.position; }
  Vec3 normal(std::size_t i) const { return nodes_[i].point.normal; }

 private:
  LevelSetSurface surface_;
  double h_;
  double theta_;
  std::vector<QuadratureNode> nodes_;
  NodeArrays soa_;
};

/// exp(-1/t) for t > 0, else 0.
inline double partition_bump(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

/// Partition-of-unity weights psi_j(n), j = 0..2, for a unit normal.
inline std::array<double, 3> partition_weights(const Vec3& normal, double theta) {
  const double t2 = theta * theta;
  std::array<double, 3> b{};
  double sum = 0.0;
  for (int j = 0; j < 3; ++j) {
    b[j] = partition_bump((normal[j] * normal[j] - t2) / (1.0 - t2));
    sum += b[j];
  }
  if (!(sum > 0.0)) throw GeometryError("partition_weights: normal not covered by any direction");
  for (double& v : b) v /= sum;
  return b;
}

inline QuadratureRule build_rule(const LevelSetSurface& surface, double h, double theta = kDefaultTheta) {
  if (!(h > 0.0)) throw InvalidConfig("build_rule: h must be positive");
  if (!(theta > 0.0 && theta < 1.0 / std::sqrt(3.0)))
    throw InvalidConfig("build_rule: theta must lie in (0, 1/sqrt(3))");

  const Box& box = surface.bounding_box();
  const double t2 = theta * theta;

  struct Line {
    int axis;
    Vec3 base;
  };
  std::vector<Line> lines;
  for (int axis = 0; axis < 3; ++axis) {
    const int a = (axis + 1) % 3;
    const int b = (axis + 2) % 3;
    const auto ia0 = static_cast<long>(std::ceil(box.lo[a] / h));
    const auto ia1 = static_cast<long>(std::floor(box.hi[a] / h));
    const auto ib0 = static_cast<long>(std::ceil(box.lo[b] / h));
    const auto ib1 = static_cast<long>(std::floor(box.hi[b] / h));
    for (long i = ia0; i <= ia1; ++i) {
      for (long j = ib0; j <= ib1; ++j) {
        Vec3 base = Vec3::Zero();
        base[a] = static_cast<double>(i) * h;
        base[b] = static_cast<double>(j) * h;
        lines.push_back({axis, base});
      }
    }
  }

  std::vector<std::vector<QuadratureNode>> per_line(lines.size());
  parallel_for(
      lines.size(),
      [&](std::size_t l) {
        const auto& line = lines[l];
        for (auto& sp : roots_along_line(surface, line.base, line.axis)) {
          const double ni = sp.normal[line.axis];
          if (!(ni * ni > t2)) continue;
          const auto psi = partition_weights(sp.normal, theta);
          const double pou = psi[line.axis];
          // Nodes whose partition weight underflows contribute nothing.
          if (!(pou > 0.0)) continue;
          per_line[l].push_back({sp, pou * h * h / std::abs(ni), line.axis, pou});
        }
      },
      true);

  std::vector<QuadratureNode> nodes;
  for (auto& v : per_line) nodes.insert(nodes.end(), v.begin(), v.end());
  return QuadratureRule(surface, h, theta, std::move(nodes));
}

/// Sum over nodes of f(node) * weight.
template <class Fn>
double integrate_scalar(const QuadratureRule& rule, Fn&& f) {
  if (rule.size() == 0) throw UsageError("integrate_scalar: empty rule");
  double sum = 0.0;
  for (const auto& node : rule.nodes()) sum += f(node) * node.weight;
  return sum;
}

inline double surface_area(const QuadratureRule& rule) {
  return integrate_scalar(rule, [](const QuadratureNode&) { return 1.0; });
}

}  // namespace stokesreg
