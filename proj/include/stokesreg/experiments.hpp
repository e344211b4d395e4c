#pragma once

// Convergence studies driven by an ExperimentConfig, reported as CSV rows with observed
// orders, plus a gnuplot-ready table.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "stokesreg/config.hpp"
#include "stokesreg/errors.hpp"
#include "stokesreg/implicit_surface.hpp"
#include "stokesreg/interface_solver.hpp"
#include "stokesreg/layer_potentials.hpp"
#include "stokesreg/parallel.hpp"
#include "stokesreg/reference_solutions.hpp"
#include "stokesreg/smoothing.hpp"
#include "stokesreg/surface_quadrature.hpp"

namespace stokesreg {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ResultRow {
  std::string experiment;
  std::string quantity;
  std::string surface;
  double h = kNaN;
  double delta_factor = kNaN;
  std::string variant;
  double norm_max = kNaN;
  double norm_l2 = kNaN;
  std::optional<double> observed_order;     // from norm_max
  std::optional<double> observed_order_l2;  // from norm_l2
  std::size_t node_count = 0;
  int iterations = 0;
  double wall_time = 0.0;
};

inline ResultRow make_row(std::string experiment, std::string quantity, std::string surface, double h,
                          double delta_factor = kNaN, std::string variant = "", double norm_max = kNaN,
                          double norm_l2 = kNaN) {
  ResultRow r;
  r.experiment = std::move(experiment);
  r.quantity = std::move(quantity);
  r.surface = std::move(surface);
  r.h = h;
  r.delta_factor = delta_factor;
  r.variant = std::move(variant);
  r.norm_max = norm_max;
  r.norm_l2 = norm_l2;
  return r;
}

inline const char* kResultHeader =
    "experiment,quantity,surface,h,delta_factor,variant,norm_max,norm_l2,observed_order,observed_order_l2,"
    "node_count,iterations,wall_time";

namespace detail {

inline std::string fmt(const char* f, double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

}  // namespace detail

inline std::string csv_line(const ResultRow& r) {
  using detail::fmt;
  std::string s = r.experiment + "," + r.quantity + "," + r.surface + "," + fmt("%.10g", r.h) + "," +
                  fmt("%g", r.delta_factor) + "," + r.variant + "," + fmt("%.6e", r.norm_max) + "," +
                  fmt("%.6e", r.norm_l2) + "," + (r.observed_order ? fmt("%.4f", *r.observed_order) : "") + "," +
                  (r.observed_order_l2 ? fmt("%.4f", *r.observed_order_l2) : "") + "," + std::to_string(r.node_count) +
                  "," + std::to_string(r.iterations) + "," + fmt("%.3f", r.wall_time);
  return s;
}

/// Exact area where a closed form exists: sphere, and the ellipsoid through Legendre's
/// incomplete elliptic integrals. NaN otherwise.
inline double exact_area(const SurfaceSpec& spec) {
  if (spec.kind == SurfaceKind::sphere) return 4.0 * kPi * spec.sphere_radius * spec.sphere_radius;
  if (spec.kind == SurfaceKind::ellipsoid) {
    std::array<double, 3> ax = spec.ellipsoid_axes;
    std::sort(ax.rbegin(), ax.rend());
    const double a = ax[0], b = ax[1], c = ax[2];
    if (a == c) return 4.0 * kPi * a * a;
    const double phi = std::acos(c / a);
    const double k = std::sqrt(a * a * (b * b - c * c) / (b * b * (a * a - c * c)));
    const double s = std::sin(phi);
    return 2.0 * kPi * c * c +
           2.0 * kPi * a * b / s * (std::ellint_2(k, phi) * s * s + std::ellint_1(k, phi) * (1.0 - s * s));
  }
  return kNaN;
}

/// Accumulates rows, fills in observed orders against the previous h of the same series,
/// and streams each row to the CSV sink as soon as it exists.
class ResultTable {
 public:
  ResultTable(std::ostream* csv, bool deterministic) : csv_(csv), deterministic_(deterministic) {
    if (csv_) *csv_ << kResultHeader << '\n' << std::flush;
  }

  void add(ResultRow row) {
    if (deterministic_) row.wall_time = 0.0;
    const auto key = std::make_tuple(row.experiment, row.quantity, row.surface, row.variant, row.delta_factor);
    const auto it = last_.find(key);
    if (it != last_.end()) {
      const ResultRow& prev = rows_[it->second];
      const double steps = std::log2(prev.h / row.h);
      auto order = [&](double a, double b) -> std::optional<double> {
        if (!(a > 0.0 && b > 0.0) || steps == 0.0) return std::nullopt;
        return std::log2(a / b) / steps;
      };
      row.observed_order = order(prev.norm_max, row.norm_max);
      row.observed_order_l2 = order(prev.norm_l2, row.norm_l2);
    }
    last_[key] = rows_.size();
    rows_.push_back(row);
    if (csv_) *csv_ << csv_line(row) << '\n' << std::flush;
  }

  const std::vector<ResultRow>& rows() const { return rows_; }

 private:
  std::ostream* csv_;
  bool deterministic_;
  std::vector<ResultRow> rows_;
  std::map<std::tuple<std::string, std::string, std::string, std::string, double>, std::size_t> last_;
};

/// One block per series: "h norm_max norm_l2", blocks separated by two blank lines.
inline void write_gnuplot(std::ostream& out, const std::vector<ResultRow>& rows) {
  std::vector<std::tuple<std::string, std::string, std::string, std::string, double>> order;
  std::map<std::tuple<std::string, std::string, std::string, std::string, double>, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.experiment, r.quantity, r.surface, r.variant, r.delta_factor);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  bool first = true;
  for (const auto& key : order) {
    if (!first) out << "\n\n";
    first = false;
    const auto& g = groups[key];
    out << "# " << g.front()->quantity << ' ' << g.front()->surface << ' ' << g.front()->variant << " delta/h="
        << detail::fmt("%g", g.front()->delta_factor) << "\n# h norm_max norm_l2\n";
    for (const ResultRow* r : g)
      out << detail::fmt("%.10g", r->h) << ' ' << detail::fmt("%.6e", r->norm_max) << ' '
          << detail::fmt("%.6e", r->norm_l2) << '\n';
  }
}

struct MomentRow {
  std::string quantity;
  double value;
  double reference;
};

/// Moment conditions and derived sharp coefficients with their closed-form references.
inline std::vector<MomentRow> moment_table() {
  const auto base = make_smoothing(SmoothingId::s3_base);
  const auto orig = make_smoothing(SmoothingId::s3_sharp_original);
  const auto nw = make_smoothing(SmoothingId::s3_sharp_new);
  std::vector<MomentRow> rows;
  rows.push_back({"moment_s3_base_k2", moment(base, 2).value, -8.0 / (3.0 * kSqrtPi)});
  rows.push_back({"moment_r_s3_prime_k2", moment(base.form().rho_derivative(), 2).value, 8.0 / kSqrtPi});
  rows.push_back({"moment_s3_sharp_new_k2", moment(nw, 2).value, 0.0});
  rows.push_back({"moment_s3_sharp_original_k0", moment(orig, 0).value, 0.0});
  rows.push_back({"moment_s3_sharp_original_k2", moment(orig, 2).value, 0.0});
  rows.push_back({"sharp_new_a", derive_sharp_one_condition(base, 2).coefficients[0], 1.0 / 3.0});
  const auto two = derive_sharp_two_conditions(base, {0, 2});
  rows.push_back({"sharp_original_a", two.coefficients[0], 5.0 / 3.0});
  rows.push_back({"sharp_original_b", two.coefficients[1], 1.0 / 3.0});
  return rows;
}

inline void write_moment_table(std::ostream& out, const std::vector<MomentRow>& rows) {
  out << "quantity,value,reference,difference\n";
  for (const auto& r : rows)
    out << r.quantity << ',' << detail::fmt("%.15e", r.value) << ',' << detail::fmt("%.15e", r.reference) << ','
        << detail::fmt("%.3e", r.value - r.reference) << '\n';
}

/// One row per (variant, h, iteration) of the interface solves.
struct TraceRow {
  std::string variant;
  double h;
  int iteration;
  double error;
};

inline void write_trace(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "variant,h,iteration,error\n";
  for (const auto& r : rows)
    out << r.variant << ',' << detail::fmt("%.10g", r.h) << ',' << r.iteration << ',' << detail::fmt("%.6e", r.error)
        << '\n';
}

struct RunResult {
  std::vector<ResultRow> rows;
  std::vector<MomentRow> moments;
  std::vector<TraceRow> trace;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string surface_name(const SurfaceSpec& s) {
  switch (s.kind) {
    case SurfaceKind::sphere: return "sphere";
    case SurfaceKind::ellipsoid: return "ellipsoid";
    case SurfaceKind::molecule: return "molecule";
    case SurfaceKind::custom: return "custom";
  }
  return "?";
}

inline std::vector<std::pair<std::string, StressletVariant>> variants(VariantChoice c) {
  std::vector<std::pair<std::string, StressletVariant>> out;
  if (c != VariantChoice::new_) out.emplace_back("original", StressletVariant::sharp_original);
  if (c != VariantChoice::original) out.emplace_back("new", StressletVariant::sharp_new);
  return out;
}

inline std::string grid_label(double h) {
  const double inv = 1.0 / h;
  if (std::abs(inv - std::round(inv)) < 1e-9) return std::to_string(static_cast<long>(std::round(inv)));
  return fmt("%g", h);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::pair<double, double> norms(const std::vector<double>& e) {
  double mx = 0.0, sum = 0.0;
  for (double x : e) {
    mx = std::max(mx, x);
    sum += x * x;
  }
  return {mx, e.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(e.size()))};
}

inline void write_nodes(const std::string& path, const QuadratureRule& rule) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "x,y,z,nx,ny,nz,weight,axis\n";
  char buf[256];
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const auto& n = rule[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", n.point.position[0],
                  n.point.position[1], n.point.position[2], n.point.normal[0], n.point.normal[1], n.point.normal[2],
                  n.weight, n.axis + 1);
    out << buf;
  }
}

inline void run_quadrature(const ExperimentConfig& cfg, ResultTable& table) {
  for (const auto& spec : cfg.surfaces) {
    const auto surface = make_surface(spec);
    const double area = exact_area(spec);
    for (double h : cfg.h) {
      Stopwatch clock;
      const auto rule = build_rule(surface, h, cfg.theta);
      ResultRow row = make_row("quadrature", "area", surface_name(spec), h);
      row.node_count = rule.size();
      const double err = std::abs(surface_area(rule) - area) / area;
      row.norm_max = row.norm_l2 = err;
      row.wall_time = clock.seconds();
      if (!cfg.nodes_output.empty())
        write_nodes(cfg.nodes_output + "_" + surface_name(spec) + "_h" + grid_label(h) + ".csv", rule);
      table.add(row);
    }
  }
}

/// Identity sums against chi I: on-surface at every node (max entry error per node),
/// and at the surface's interior point and at a point outside the bounding box.
inline void run_identity(const ExperimentConfig& cfg, ResultTable& table) {
  for (const auto& spec : cfg.surfaces) {
    const auto surface = make_surface(spec);
    const Vec3 outside = 2.0 * surface.bounding_box().hi;
    for (double h : cfg.h) {
      const auto rule = build_rule(surface, h, cfg.theta);
      for (const auto& [name, variant] : variants(cfg.variant)) {
        Stopwatch clock;
        const auto ctx = KernelContext::make(cfg.delta_factor * h, StokesletVariant::sharp, variant);
        const auto on = stresslet_identity(rule, node_positions(rule), ctx);
        std::vector<double> e(on.size());
        for (std::size_t i = 0; i < on.size(); ++i)
          e[i] = (on[i] - identity_chi(Location::on_surface) * Mat3::Identity()).cwiseAbs().maxCoeff();
        auto [mx, l2] = norms(e);
        ResultRow row = make_row("identity", "on_surface", surface_name(spec), h, cfg.delta_factor, name, mx, l2);
        row.node_count = rule.size();
        row.wall_time = clock.seconds();
        table.add(row);

        for (const auto& [label, y, loc] : {std::tuple{"inside", surface.interior_point(), Location::inside},
                                            std::tuple{"outside", outside, Location::outside}}) {
          Stopwatch c2;
          const double err = (stresslet_identity(rule, y, ctx) - identity_chi(loc) * Mat3::Identity()).cwiseAbs().maxCoeff();
          ResultRow r2 = make_row("identity", label, surface_name(spec), h, cfg.delta_factor, name, err, err);
          r2.node_count = rule.size();
          r2.wall_time = c2.seconds();
          table.add(r2);
        }
      }
    }
  }
}

/// Single plus double layer of the point-force jumps, compared at every node with the
/// exact on-surface velocity.
inline void run_layer_sum(const ExperimentConfig& cfg, ResultTable& table) {
  const PointForce pf;
  const auto vars = variants(cfg.variant);
  std::vector<SmoothingFunction> smoothings;
  for (const auto& v : vars) smoothings.push_back(make_smoothing(smoothing_id(v.second)));
  for (const auto& spec : cfg.surfaces) {
    const auto surface = make_surface(spec);
    for (double h : cfg.h) {
      const auto rule = build_rule(surface, h, cfg.theta);
      const auto [f, u] = jump_fields(rule, pf);
      Stopwatch clock;
      const auto ctx = KernelContext::make(cfg.delta_factor * h);
      const auto results = layer_sum_at_nodes(rule, f, u, ctx, smoothings);
      const double elapsed = clock.seconds() / static_cast<double>(vars.size());
      for (std::size_t k = 0; k < vars.size(); ++k) {
        std::vector<double> e(rule.size());
        for (std::size_t i = 0; i < rule.size(); ++i)
          e[i] = (results[k][i] - exact_boundary_velocity(rule.position(i), pf)).norm();
        auto [mx, l2] = norms(e);
        ResultRow row = make_row("layer-sum", "velocity", surface_name(spec), h, cfg.delta_factor, vars[k].first, mx, l2);
        row.node_count = rule.size();
        row.wall_time = elapsed;
        table.add(row);
      }
    }
  }
}

/// Interface solves at every h; rows report e_h = u_h - u_(h/2) at the nodes of h, so the
/// last h only serves as the finer partner.
inline void run_interface(const ExperimentConfig& cfg, ResultTable& table, RunResult& result) {
  for (const auto& spec : cfg.surfaces) {
    InterfaceProblem problem{make_surface(spec)};
    problem.mu0 = cfg.mu0;
    problem.mu1 = cfg.mu1;
    const auto fine = build_rule(problem.surface, cfg.fine_h, cfg.theta);
    std::vector<QuadratureRule> rules;
    std::vector<VectorField> rhs;
    std::vector<double> rhs_time;
    for (double h : cfg.h) {
      rules.push_back(build_rule(problem.surface, h, cfg.theta));
      Stopwatch clock;
      rhs.push_back(interface_rhs(problem, fine, node_positions(rules.back()), cfg.delta_factor * cfg.fine_h));
      rhs_time.push_back(clock.seconds());
    }
    const TransferMode mode =
        cfg.transfer == TransferChoice::nearest_node ? TransferMode::nearest_node : TransferMode::self_consistent;
    for (const auto& [name, variant] : variants(cfg.variant)) {
      VectorField previous;
      int previous_iterations = 0;
      double previous_time = 0.0;
      for (std::size_t l = 0; l < rules.size(); ++l) {
        Stopwatch clock;
        const auto ctx = KernelContext::make(cfg.delta_factor * cfg.h[l], StokesletVariant::sharp, variant);
        InterfaceSolution sol;
        try {
          sol = picard_solve(problem, rules[l], rhs[l], ctx, cfg.tol, cfg.max_iter);
        } catch (const NonConvergence& e) {
          for (std::size_t n = 0; n < e.trace().errors.size(); ++n)
            result.trace.push_back({name, cfg.h[l], static_cast<int>(n + 1), e.trace().errors[n]});
          throw;
        }
        for (std::size_t n = 0; n < sol.trace.errors.size(); ++n)
          result.trace.push_back({name, cfg.h[l], static_cast<int>(n + 1), sol.trace.errors[n]});
        if (l > 0) {
          const auto eval = evaluate_at_targets(problem, rules[l], sol.u, node_positions(rules[l - 1]), rhs[l - 1],
                                                ctx, mode);
          std::size_t far = 0;
          for (bool b : eval.far_from_nodes) far += b;
          if (far)
            result.warnings.push_back(std::to_string(far) + " targets of h=" + grid_label(cfg.h[l - 1]) +
                                      " lie farther than 2h from the finer nodes");
          const auto e = richardson_error(previous, eval.values);
          ResultRow row = make_row("interface", "richardson", surface_name(spec), cfg.h[l - 1], cfg.delta_factor, name, e.max, e.l2);
          row.node_count = rules[l - 1].size();
          row.iterations = previous_iterations;
          row.wall_time = previous_time + rhs_time[l - 1];
          table.add(row);
        }
        previous = std::move(sol.u);
        previous_iterations = sol.trace.iterations;
        previous_time = clock.seconds();
      }
    }
  }
}

}  // namespace detail

/// Runs the configured experiment into `result`. Rows are streamed to `csv` (if given) as they
/// complete; on an error `result` keeps the finished rows and the iteration trace so far.
inline void run(const ExperimentConfig& cfg, std::ostream* csv, RunResult& result) {
  if (cfg.threads > 0) set_num_threads(cfg.threads);
  if (cfg.experiment == ExperimentKind::moments) {
    result.moments = moment_table();
    if (csv) write_moment_table(*csv, result.moments);
    return;
  }
  ResultTable table(csv, cfg.deterministic);
  try {
    switch (cfg.experiment) {
      case ExperimentKind::quadrature: detail::run_quadrature(cfg, table); break;
      case ExperimentKind::identity: detail::run_identity(cfg, table); break;
      case ExperimentKind::layer_sum: detail::run_layer_sum(cfg, table); break;
      case ExperimentKind::interface: detail::run_interface(cfg, table, result); break;
      case ExperimentKind::moments: break;
    }
  } catch (...) {
    result.rows = table.rows();
    throw;
  }
  result.rows = table.rows();
}

inline RunResult run(const ExperimentConfig& cfg, std::ostream* csv = nullptr) {
  RunResult result;
  run(cfg, csv, result);
  return result;
}

}  // namespace stokesreg
