#pragma once

// Kernel smoothing functions of the form
//
//     s(rho) = A erf(rho) + P(rho) exp(-rho^2) / sqrt(pi),
//
// the scaled factors s(rho)/rho^m that replace 1/r^m in the regularized kernels,
// their moments, and the moment-condition machinery that builds on-surface
// ("sharp") variants as s + a r s' (+ b r^2 s'').

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "stokesreg/errors.hpp"
#include "stokesreg/types.hpp"

namespace stokesreg {

/// Dense polynomial, coefficient i multiplies rho^i.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients) : c_(std::move(coefficients)) { trim(); }

  const std::vector<double>& coefficients() const { return c_; }
  double coefficient(std::size_t i) const { return i < c_.size() ? c_[i] : 0.0; }
  std::size_t size() const { return c_.size(); }

  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  Polynomial derivative() const {
    std::vector<double> d;
    for (std::size_t i = 1; i < c_.size(); ++i) d.push_back(static_cast<double>(i) * c_[i]);
    return Polynomial(std::move(d));
  }

  /// Multiplies by rho^k.
  Polynomial shifted(std::size_t k) const {
    std::vector<double> d(k, 0.0);
    d.insert(d.end(), c_.begin(), c_.end());
    return Polynomial(std::move(d));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> d(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.coefficient(i) + b.coefficient(i);
    return Polynomial(std::move(d));
  }
  friend Polynomial operator*(double s, const Polynomial& a) {
    auto d = a.c_;
    for (double& v : d) v *= s;
    return Polynomial(std::move(d));
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-1.0) * b; }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
  }
  std::vector<double> c_;
};

/// A erf(rho) + P(rho) exp(-rho^2)/sqrt(pi).
class GaussPoly {
 public:
  GaussPoly() = default;
  GaussPoly(double erf_coefficient, Polynomial poly) : a_(erf_coefficient), p_(std::move(poly)) {}

  double erf_coefficient() const { return a_; }
  const Polynomial& poly() const { return p_; }

  double operator()(double rho) const { return a_ * std::erf(rho) + p_(rho) * std::exp(-rho * rho) / kSqrtPi; }

  /// value - A, evaluated without cancellation for large rho. A is the limit at infinity.
  double deviation(double rho) const { return -a_ * std::erfc(rho) + p_(rho) * std::exp(-rho * rho) / kSqrtPi; }

  /// rho f'(rho), again of this form (with A = 0).
  GaussPoly rho_derivative() const { return GaussPoly(0.0, derivative_poly().shifted(1)); }

  /// rho^2 f''(rho).
  GaussPoly rho2_second_derivative() const {
    const Polynomial q = derivative_poly();
    return GaussPoly(0.0, (q.derivative() - 2.0 * q.shifted(1)).shifted(2));
  }

  friend GaussPoly operator+(const GaussPoly& f, const GaussPoly& g) { return {f.a_ + g.a_, f.p_ + g.p_}; }
  friend GaussPoly operator*(double s, const GaussPoly& f) { return {s * f.a_, s * f.p_}; }

 private:
  // f' = (2A + P' - 2 rho P) exp(-rho^2)/sqrt(pi)
  Polynomial derivative_poly() const {
    return Polynomial({2.0 * a_}) + p_.derivative() - 2.0 * p_.shifted(1);
  }

  double a_ = 0.0;
  Polynomial p_;
};

enum class SmoothingId { s3_base, s3_sharp_original, s3_sharp_new, s1_base, s2_base, s1_sharp, s2_sharp, derived };

inline std::string to_string(SmoothingId id) {
  switch (id) {
    case SmoothingId::s3_base: return "s3_base";
    case SmoothingId::s3_sharp_original: return "s3_sharp_original";
    case SmoothingId::s3_sharp_new: return "s3_sharp_new";
    case SmoothingId::s1_base: return "s1_base";
    case SmoothingId::s2_base: return "s2_base";
    case SmoothingId::s1_sharp: return "s1_sharp";
    case SmoothingId::s2_sharp: return "s2_sharp";
    case SmoothingId::derived: return "derived";
  }
  return "unknown";
}

/// A smoothing function paired with the kernel power m it regularizes (1/r^m -> s(r/delta)/r^m).
class SmoothingFunction {
 public:
  /// Below this rho the scaled factor is taken from its Taylor series.
  static constexpr double kSeriesSwitch = 0.5;
  /// Above this rho |s - 1| is below 1e-20 for every built-in family; s is treated as 1.
  static constexpr double kFarCutoff = 8.0;

  SmoothingFunction(SmoothingId id, int power, GaussPoly form) : id_(id), power_(power), form_(std::move(form)) {
    if (power_ < 1) throw UsageError("SmoothingFunction: kernel power must be positive");
    build_series();
  }

  SmoothingId id() const { return id_; }
  int power() const { return power_; }
  const GaussPoly& form() const { return form_; }

  double operator()(double rho) const { return form_(rho); }

  /// s(rho)/rho^m, finite at rho = 0.
  double scaled(double rho) const {
    if (rho >= kFarCutoff) return inverse_power(rho);
    if (rho < kSeriesSwitch) return series(rho);
    return form_(rho) * inverse_power(rho);
  }

  /// As scaled(), reusing erf(rho) and exp(-rho^2) already computed for this rho.
  double scaled(double rho, double erf_rho, double gauss_rho) const {
    if (rho >= kFarCutoff) return inverse_power(rho);
    if (rho < kSeriesSwitch) return series(rho);
    return (form_.erf_coefficient() * erf_rho + form_.poly()(rho) * gauss_rho / kSqrtPi) * inverse_power(rho);
  }

  /// lim_{rho -> 0} s(rho)/rho^m.
  double limit_at_zero() const { return series_.front(); }

  /// Power-series coefficients of s(rho)/rho^m (coefficient j multiplies rho^j).
  const std::vector<double>& series_coefficients() const { return series_; }

  double series(double rho) const {
    double acc = 0.0;
    for (auto it = series_.rbegin(); it != series_.rend(); ++it) acc = acc * rho + *it;
    return acc;
  }

 private:
  double inverse_power(double rho) const {
    const double inv = 1.0 / rho;
    double out = inv;
    for (int i = 1; i < power_; ++i) out *= inv;
    return out;
  }

  void build_series() {
    constexpr int kTerms = 40;
    const int degree = power_ + kTerms;
    std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);  // coefficients of sqrt(pi) * s
    // erf(rho) sqrt(pi) = 2 sum_n (-1)^n rho^(2n+1) / (n! (2n+1))
    double fact = 1.0;
    for (int n = 0; 2 * n + 1 <= degree; ++n) {
      if (n > 0) fact *= n;
      const double sign = n % 2 == 0 ? 1.0 : -1.0;
      c[2 * n + 1] += form_.erf_coefficient() * 2.0 * sign / (fact * (2 * n + 1));
    }
    // P(rho) exp(-rho^2) = sum_n (-1)^n rho^(2n) / n! * sum_k p_k rho^k
    const auto& p = form_.poly().coefficients();
    fact = 1.0;
    for (int n = 0; 2 * n <= degree; ++n) {
      if (n > 0) fact *= n;
      const double e = (n % 2 == 0 ? 1.0 : -1.0) / fact;
      for (std::size_t k = 0; k < p.size() && 2 * n + static_cast<int>(k) <= degree; ++k) c[2 * n + k] += e * p[k];
    }
    double scale = 1.0;
    for (double v : c) scale = std::max(scale, std::abs(v));
    for (int j = 0; j < power_; ++j) {
      if (std::abs(c[j]) > 1e-11 * scale)
        throw DerivationError("SmoothingFunction: s(rho) is not O(rho^" + std::to_string(power_) + ") at zero");
    }
    series_.assign(c.begin() + power_, c.end());
    for (double& v : series_) v /= kSqrtPi;
  }

  SmoothingId id_;
  int power_;
  GaussPoly form_;
  std::vector<double> series_;
};

// ---------------------------------------------------------------------------
// Named functions

namespace detail {
inline GaussPoly s3_base_form() { return {1.0, Polynomial({0.0, -2.0, 0.0, -4.0 / 3.0})}; }
inline GaussPoly s3_sharp_original_form() {
  const double k = -2.0 / 9.0;
  return {1.0, Polynomial({0.0, 9.0 * k, 0.0, 6.0 * k, 0.0, -36.0 * k, 0.0, 8.0 * k})};
}
inline GaussPoly s3_sharp_new_form() {
  const double k = -2.0 / 9.0;
  return {1.0, Polynomial({0.0, 9.0 * k, 0.0, 6.0 * k, 0.0, -4.0 * k})};
}
}  // namespace detail

inline double s3_base(double rho) { return detail::s3_base_form()(rho); }
inline double s3_sharp_original(double rho) { return detail::s3_sharp_original_form()(rho); }
inline double s3_sharp_new(double rho) { return detail::s3_sharp_new_form()(rho); }

/// rho s3'(rho) = 8/(3 sqrt(pi)) rho^5 exp(-rho^2).
inline double r_s3_prime(double rho) {
  const double r2 = rho * rho;
  return 8.0 / (3.0 * kSqrtPi) * r2 * r2 * rho * std::exp(-r2);
}

inline SmoothingFunction make_smoothing(SmoothingId id);

inline double scaled_factor(const SmoothingFunction& f, double rho) { return f.scaled(rho); }

// ---------------------------------------------------------------------------
// Moments

struct MomentResult {
  int k;
  double value;
  double quadrature_error_estimate;
};

namespace detail {

/// Composite 5-point Gauss-Legendre over [0, upper].
template <class Fn>
double composite_gauss(Fn&& f, double upper, int panels) {
  static constexpr std::array<double, 5> x{0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                           0.9061798459386640};
  static constexpr std::array<double, 5> w{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                           0.2369268850561891, 0.2369268850561891};
  const double width = upper / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * width;
    double s = 0.0;
    for (int i = 0; i < 5; ++i) s += w[i] * f(mid + 0.5 * width * x[i]);
    total += 0.5 * width * s;
  }
  return total;
}

}  // namespace detail

/// Integral over [0, 12] of rho^k (f(rho) - A), A = lim f at infinity (the erf coefficient).
/// For a smoothing function this is the moment of s - 1; for a purely Gaussian term such as
/// rho s'(rho) it is the plain moment. The truncated tail is below 1e-60.
inline MomentResult moment(const GaussPoly& f, int k) {
  if (k < 0) throw UsageError("moment: k must be non-negative");
  constexpr double upper = 12.0;
  constexpr int panels = 10000;
  auto integrand = [&](double r) { return std::pow(r, k) * f.deviation(r); };
  const double fine = detail::composite_gauss(integrand, upper, panels);
  const double coarse = detail::composite_gauss(integrand, upper, panels / 2);
  return {k, fine, std::abs(fine - coarse)};
}

inline MomentResult moment(const SmoothingFunction& f, int k) { return moment(f.form(), k); }

// ---------------------------------------------------------------------------
// Sharp-variant derivation

struct SharpDerivation {
  std::vector<double> coefficients;  // a, or (a, b)
  SmoothingFunction sharp;
};

/// s# = s + a rho s', with a chosen so that the k-th moment of s# - 1 vanishes.
inline SharpDerivation derive_sharp_one_condition(const SmoothingFunction& base, int k,
                                                  SmoothingId result_id = SmoothingId::derived) {
  const GaussPoly d1 = base.form().rho_derivative();
  const double denom = moment(d1, k).value;
  if (std::abs(denom) < 1e-14) throw DerivationError("derive_sharp_one_condition: zero moment of rho s'");
  const double a = -moment(base.form(), k).value / denom;
  return {{a}, SmoothingFunction(result_id, base.power(), base.form() + a * d1)};
}

/// s# = s + a rho s' + b rho^2 s'', with (a, b) chosen so that the moments k_pair[0] and
/// k_pair[1] of s# - 1 both vanish.
inline SharpDerivation derive_sharp_two_conditions(const SmoothingFunction& base, std::array<int, 2> k_pair = {0, 2},
                                                   SmoothingId result_id = SmoothingId::derived) {
  const GaussPoly d1 = base.form().rho_derivative();
  const GaussPoly d2 = base.form().rho2_second_derivative();
  Eigen::Matrix2d m;
  Eigen::Vector2d rhs;
  for (int row = 0; row < 2; ++row) {
    m(row, 0) = moment(d1, k_pair[row]).value;
    m(row, 1) = moment(d2, k_pair[row]).value;
    rhs(row) = -moment(base.form(), k_pair[row]).value;
  }
  const double det = m.determinant();
  if (std::abs(det) < 1e-12 * m.cwiseAbs().maxCoeff() * m.cwiseAbs().maxCoeff())
    throw DerivationError("derive_sharp_two_conditions: singular moment system");
  const Eigen::Vector2d ab = m.partialPivLu().solve(rhs);
  return {{ab(0), ab(1)}, SmoothingFunction(result_id, base.power(), base.form() + ab(0) * d1 + ab(1) * d2)};
}

struct SingleLayerSmoothings {
  SmoothingFunction s1_base;
  SmoothingFunction s2_base;
  SmoothingFunction s1_sharp;
  SmoothingFunction s2_sharp;
};

/// Smoothing pair for the Stokeslet: s1 regularizes delta_ij/r, s2 regularizes y_i y_j / r^3.
/// The sharp versions annihilate the 0th and 2nd moments. Derived once, then shared.
inline const SingleLayerSmoothings& single_layer_smoothings() {
  static const SingleLayerSmoothings cached = [] {
    SmoothingFunction s1(SmoothingId::s1_base, 1, GaussPoly(1.0, Polynomial()));
    SmoothingFunction s2(SmoothingId::s2_base, 3, GaussPoly(1.0, Polynomial({0.0, -2.0})));
    auto s1_sharp = derive_sharp_two_conditions(s1, {0, 2}, SmoothingId::s1_sharp).sharp;
    auto s2_sharp = derive_sharp_two_conditions(s2, {0, 2}, SmoothingId::s2_sharp).sharp;
    return SingleLayerSmoothings{s1, s2, s1_sharp, s2_sharp};
  }();
  return cached;
}

inline SmoothingFunction make_smoothing(SmoothingId id) {
  switch (id) {
    case SmoothingId::s3_base: return {id, 5, detail::s3_base_form()};
    case SmoothingId::s3_sharp_original: return {id, 5, detail::s3_sharp_original_form()};
    case SmoothingId::s3_sharp_new: return {id, 5, detail::s3_sharp_new_form()};
    case SmoothingId::s1_base: return single_layer_smoothings().s1_base;
    case SmoothingId::s2_base: return single_layer_smoothings().s2_base;
    case SmoothingId::s1_sharp: return single_layer_smoothings().s1_sharp;
    case SmoothingId::s2_sharp: return single_layer_smoothings().s2_sharp;
    case SmoothingId::derived: break;
  }
  throw UsageError("make_smoothing: derived functions come from the derive_sharp_* routines");
}

}  // namespace stokesreg
