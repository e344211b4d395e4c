// stokesreg <subcommand> --config <path> [--output <path>] [--threads N] [--deterministic]
//
// Subcommands: quadrature, identity, layer-sum, interface, moments. Results go to the
// output CSV (stdout when no path is given); next to a CSV file the tool also writes a
// gnuplot table (.dat) and, for interface runs, the iteration trace (_trace.csv).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "stokesreg/config.hpp"
#include "stokesreg/experiments.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw stokesreg::Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw stokesreg::Error("cannot write " + path.string());
  return out;
}

std::filesystem::path sibling(const std::filesystem::path& csv, const std::string& suffix, const std::string& ext) {
  std::filesystem::path p = csv;
  p.replace_filename(csv.stem().string() + suffix + ext);
  return p;
}

struct Options {
  std::string config;
  std::string output;
  std::string nodes;
  int threads = -1;
  bool deterministic = false;
};

int execute(stokesreg::ExperimentKind kind, const Options& opt) {
  using namespace stokesreg;
  ExperimentConfig cfg;
  if (opt.config.empty()) {
    if (kind != ExperimentKind::moments) throw UsageError("--config is required");
    cfg.experiment = kind;
  } else {
    const std::string text = read_file(opt.config);
    try {
      cfg = parse_config(text, kind);
    } catch (const ParseError& e) {
      throw Error(opt.config + ": " + e.what());
    }
  }
  if (!opt.output.empty()) cfg.output = opt.output;
  if (!opt.nodes.empty()) cfg.nodes_output = opt.nodes;
  if (opt.threads >= 0) cfg.threads = opt.threads;
  if (opt.deterministic) cfg.deterministic = true;

  std::ofstream file;
  std::ostream* csv = &std::cout;
  if (!cfg.output.empty()) {
    file = open_output(cfg.output);
    csv = &file;
  }
  RunResult result;
  int status = 0;
  try {
    run(cfg, csv, result);
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << " (last iteration error " << e.trace().errors.back() << ")\n";
    status = 1;
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  if (!cfg.output.empty() && !result.rows.empty()) {
    auto dat = open_output(sibling(cfg.output, "", ".dat"));
    write_gnuplot(dat, result.rows);
  }
  if (!cfg.output.empty() && cfg.experiment == ExperimentKind::interface && !result.trace.empty()) {
    auto trace = open_output(sibling(cfg.output, "_trace", ".csv"));
    write_trace(trace, result.trace);
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  using stokesreg::ExperimentKind;
  CLI::App app{"Regularized Stokes layer potentials: convergence experiments"};
  app.require_subcommand(1);
  Options opt;

  const std::pair<const char*, ExperimentKind> commands[] = {
      {"quadrature", ExperimentKind::quadrature}, {"identity", ExperimentKind::identity},
      {"layer-sum", ExperimentKind::layer_sum},   {"interface", ExperimentKind::interface},
      {"moments", ExperimentKind::moments}};
  const char* help[] = {"node counts and area error of the surface quadrature",
                        "stresslet identity sums inside, outside and on the surface",
                        "single plus double layer of a point-force solution",
                        "two-viscosity interface solve with Richardson errors",
                        "moment conditions and sharp smoothing coefficients"};
  ExperimentKind chosen = ExperimentKind::moments;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    auto* config = sub->add_option("--config", opt.config, "experiment config (TOML subset)");
    if (commands[i].second != ExperimentKind::moments) config->required();
    sub->add_option("--output", opt.output, "CSV output path (default: stdout)");
    sub->add_option("--threads", opt.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--deterministic", opt.deterministic, "write wall_time as 0 so reruns are byte-identical");
    if (commands[i].second == ExperimentKind::quadrature)
      sub->add_option("--nodes", opt.nodes, "prefix for per-rule node tables");
    sub->callback([&chosen, kind = commands[i].second] { chosen = kind; });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    return execute(chosen, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
