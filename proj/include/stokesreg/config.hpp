#pragma once

// Experiment configuration: a TOML subset (top-level `key = value` lines, `#` comments,
// strings, numbers, booleans and one-line arrays). Grid sizes may be written "1/32".

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "stokesreg/errors.hpp"
#include "stokesreg/implicit_surface.hpp"
#include "stokesreg/surface_quadrature.hpp"

namespace stokesreg {

enum class ExperimentKind { quadrature, identity, layer_sum, interface, moments };
enum class VariantChoice { original, new_, both };
enum class TransferChoice { nearest_node, self_consistent };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::quadrature: return "quadrature";
    case ExperimentKind::identity: return "identity";
    case ExperimentKind::layer_sum: return "layer-sum";
    case ExperimentKind::interface: return "interface";
    case ExperimentKind::moments: return "moments";
  }
  return "?";
}

inline std::optional<ExperimentKind> parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::quadrature, ExperimentKind::identity, ExperimentKind::layer_sum,
                 ExperimentKind::interface, ExperimentKind::moments})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::moments;
  std::vector<SurfaceSpec> surfaces;
  std::vector<double> h;
  double delta_factor = 3.0;
  VariantChoice variant = VariantChoice::both;
  double theta = kDefaultTheta;
  double fine_h = 1.0 / 128.0;
  double tol = 1e-10;
  int max_iter = 50;
  double mu0 = 1.0;
  double mu1 = 2.0;
  TransferChoice transfer = TransferChoice::nearest_node;
  int threads = 0;  // 0: all cores
  bool deterministic = false;
  std::string output;
  std::string nodes_output;  // quadrature only: prefix for per-rule node tables
};

namespace detail {

struct ConfigValue {
  using Array = std::vector<ConfigValue>;
  std::variant<std::string, double, bool, Array> v;
  std::string raw;  // source text of scalars, for error messages
  int line = 0;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class ConfigReader {
 public:
  ConfigReader(const std::string& text, int line) : s_(text), line_(line) {}

  ConfigValue value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return string_value();
    if (c == '[') return array_value();
    return scalar_value();
  }

  void finish() {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] != '#') fail("unexpected text after value: '" + s_.substr(pos_) + "'");
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, msg); }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }

  ConfigValue string_value() {
    std::string out;
    ++pos_;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
        const char e = s_[++pos_];
        out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        out += s_[pos_];
      }
      ++pos_;
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return {out, out, line_};
  }

  ConfigValue array_value() {
    ConfigValue::Array items;
    ++pos_;
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ']') break;
      items.push_back(value());
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] != ']') fail("expected ',' or ']' in array");
      break;
    }
    ++pos_;
    return {items, "", line_};
  }

  ConfigValue scalar_value() {
    const auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#') ++pos_;
    const std::string tok = trim(s_.substr(start, pos_ - start));
    if (tok == "true") return {true, tok, line_};
    if (tok == "false") return {false, tok, line_};
    std::string digits;
    for (char c : tok)
      if (c != '_') digits += c;
    double d = 0.0;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
    if (ec != std::errc() || end != digits.data() + digits.size() || digits.empty())
      return {std::string(), tok, line_};  // flagged as malformed where the key is known
    return {d, tok, line_};
  }

  std::string s_;
  std::size_t pos_ = 0;
  int line_;
};

/// Number from a numeric value or a "p/q" string.
inline double to_number(const std::string& key, const ConfigValue& v) {
  if (const double* d = std::get_if<double>(&v.v)) return *d;
  if (const std::string* s = std::get_if<std::string>(&v.v)) {
    const auto slash = s->find('/');
    auto parse = [&](const std::string& part) {
      const std::string t = trim(part);
      double out = 0.0;
      const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
      if (t.empty() || ec != std::errc() || end != t.data() + t.size())
        throw ParseError(v.line, "malformed number for '" + key + "': " + (v.raw.empty() ? *s : v.raw));
      return out;
    };
    if (slash == std::string::npos) return parse(*s);
    const double den = parse(s->substr(slash + 1));
    if (den == 0.0) throw ParseError(v.line, "malformed number for '" + key + "': zero denominator");
    return parse(s->substr(0, slash)) / den;
  }
  throw ParseError(v.line, "expected a number for '" + key + "'");
}

inline std::string to_string_value(const std::string& key, const ConfigValue& v) {
  const std::string* s = std::get_if<std::string>(&v.v);
  if (!s || v.raw != *s) throw ParseError(v.line, "expected a quoted string for '" + key + "'");
  return *s;
}

inline bool to_bool(const std::string& key, const ConfigValue& v) {
  if (const bool* b = std::get_if<bool>(&v.v)) return *b;
  throw ParseError(v.line, "expected true or false for '" + key + "'");
}

inline std::vector<ConfigValue> to_list(const ConfigValue& v) {
  if (const auto* a = std::get_if<ConfigValue::Array>(&v.v)) return *a;
  return {v};
}

inline int to_int(const std::string& key, const ConfigValue& v) {
  const double d = to_number(key, v);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw ParseError(v.line, "expected an integer for '" + key + "'");
  return static_cast<int>(d);
}

}  // namespace detail

/// `expected`, when given, is the experiment implied by the caller (the CLI subcommand):
/// it fills in a missing `experiment` key and must agree with a present one.
inline ExperimentConfig parse_config(const std::string& text, std::optional<ExperimentKind> expected = std::nullopt) {
  using detail::ConfigValue;
  std::map<std::string, ConfigValue> values;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = detail::trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (s[0] == '[') throw ParseError(line, "tables are not supported: " + s);
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected 'key = value': " + s);
    const std::string key = detail::trim(s.substr(0, eq));
    if (key.empty()) throw ParseError(line, "missing key");
    if (values.count(key)) throw ParseError(line, "duplicate key '" + key + "'");
    detail::ConfigReader reader(s.substr(eq + 1), line);
    ConfigValue v = reader.value();
    reader.finish();
    values.emplace(key, std::move(v));
  }

  static const std::set<std::string> known = {
      "experiment", "surface", "sphere_radius", "ellipsoid_axes", "molecule_radius", "molecule_level",
      "h", "delta_factor", "variant", "theta", "fine_h", "tol", "max_iter", "mu0", "mu1", "transfer",
      "threads", "deterministic", "output", "nodes_output"};
  for (const auto& [key, v] : values)
    if (!known.count(key)) throw ParseError(v.line, "unknown key '" + key + "'");

  ExperimentConfig cfg;
  auto get = [&](const std::string& key) -> const ConfigValue* {
    const auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  auto positive = [&](const std::string& key, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw InvalidConfig("'" + key + "' must be positive");
    return x;
  };

  const ConfigValue* exp = get("experiment");
  if (exp) {
    const auto kind = parse_experiment_kind(detail::to_string_value("experiment", *exp));
    if (!kind) throw ParseError(exp->line, "unknown experiment '" + exp->raw + "'");
    if (expected && *kind != *expected)
      throw ParseError(exp->line, "config is for '" + to_string(*kind) + "', not '" + to_string(*expected) + "'");
    cfg.experiment = *kind;
  } else if (expected) {
    cfg.experiment = *expected;
  } else {
    throw InvalidConfig("missing key 'experiment'");
  }
  const bool needs_surface = cfg.experiment != ExperimentKind::moments;

  SurfaceSpec base;
  if (const auto* v = get("sphere_radius")) base.sphere_radius = positive("sphere_radius", detail::to_number("sphere_radius", *v));
  if (const auto* v = get("ellipsoid_axes")) {
    const auto items = detail::to_list(*v);
    if (items.size() != 3) throw ParseError(v->line, "'ellipsoid_axes' needs three values");
    for (int i = 0; i < 3; ++i) base.ellipsoid_axes[i] = positive("ellipsoid_axes", detail::to_number("ellipsoid_axes", items[i]));
  }
  if (const auto* v = get("molecule_radius"))
    base.molecule_radius = positive("molecule_radius", detail::to_number("molecule_radius", *v));
  if (const auto* v = get("molecule_level"))
    base.molecule_level = positive("molecule_level", detail::to_number("molecule_level", *v));

  if (const auto* v = get("surface")) {
    for (const auto& item : detail::to_list(*v)) {
      const std::string name = detail::to_string_value("surface", item);
      SurfaceSpec spec = base;
      if (name == "sphere") spec.kind = SurfaceKind::sphere;
      else if (name == "ellipsoid") spec.kind = SurfaceKind::ellipsoid;
      else if (name == "molecule") spec.kind = SurfaceKind::molecule;
      else throw ParseError(item.line, "unknown surface '" + name + "'");
      cfg.surfaces.push_back(spec);
    }
  }
  if (needs_surface && cfg.surfaces.empty()) throw InvalidConfig("missing key 'surface'");

  if (const auto* v = get("h"))
    for (const auto& item : detail::to_list(*v)) cfg.h.push_back(positive("h", detail::to_number("h", item)));
  if (needs_surface && cfg.h.empty()) throw InvalidConfig("missing key 'h'");
  for (std::size_t i = 1; i < cfg.h.size(); ++i)
    if (std::abs(cfg.h[i] - 0.5 * cfg.h[i - 1]) > 1e-12 * cfg.h[i - 1])
      throw InvalidConfig("'h' must be a halving sequence (entry " + std::to_string(i + 1) + ")");
  if (cfg.experiment == ExperimentKind::interface && cfg.h.size() < 2)
    throw InvalidConfig("interface experiment needs at least two grid sizes");

  if (const auto* v = get("delta_factor")) cfg.delta_factor = positive("delta_factor", detail::to_number("delta_factor", *v));
  if (const auto* v = get("variant")) {
    const std::string s = detail::to_string_value("variant", *v);
    if (s == "original") cfg.variant = VariantChoice::original;
    else if (s == "new") cfg.variant = VariantChoice::new_;
    else if (s == "both") cfg.variant = VariantChoice::both;
    else throw ParseError(v->line, "unknown variant '" + s + "' (original, new or both)");
  }
  if (const auto* v = get("theta")) {
    cfg.theta = detail::to_number("theta", *v);
    if (!(cfg.theta > 0.0 && cfg.theta < 1.0 / std::sqrt(3.0))) throw InvalidConfig("'theta' must lie in (0, 1/sqrt(3))");
  }
  if (const auto* v = get("fine_h")) cfg.fine_h = positive("fine_h", detail::to_number("fine_h", *v));
  if (const auto* v = get("tol")) cfg.tol = positive("tol", detail::to_number("tol", *v));
  if (const auto* v = get("max_iter")) {
    cfg.max_iter = detail::to_int("max_iter", *v);
    if (cfg.max_iter < 1) throw InvalidConfig("'max_iter' must be at least 1");
  }
  if (const auto* v = get("mu0")) cfg.mu0 = positive("mu0", detail::to_number("mu0", *v));
  if (const auto* v = get("mu1")) cfg.mu1 = positive("mu1", detail::to_number("mu1", *v));
  if (const auto* v = get("transfer")) {
    const std::string s = detail::to_string_value("transfer", *v);
    if (s == "nearest_node") cfg.transfer = TransferChoice::nearest_node;
    else if (s == "self_consistent") cfg.transfer = TransferChoice::self_consistent;
    else throw ParseError(v->line, "unknown transfer '" + s + "' (nearest_node or self_consistent)");
  }
  if (const auto* v = get("threads")) {
    cfg.threads = detail::to_int("threads", *v);
    if (cfg.threads < 0) throw InvalidConfig("'threads' must be non-negative");
  }
  if (const auto* v = get("deterministic")) cfg.deterministic = detail::to_bool("deterministic", *v);
  if (const auto* v = get("output")) cfg.output = detail::to_string_value("output", *v);
  if (const auto* v = get("nodes_output")) cfg.nodes_output = detail::to_string_value("nodes_output", *v);
  if (cfg.experiment == ExperimentKind::interface && !cfg.h.empty() && cfg.fine_h > cfg.h.back())
    throw InvalidConfig("'fine_h' must not exceed the smallest 'h'");
  return cfg;
}

}  // namespace stokesreg
