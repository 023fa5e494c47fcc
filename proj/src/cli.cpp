#include "conic/cli.hpp"

#include "conic/config.hpp"
#include "conic/errors.hpp"
#include "conic/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <thread>

namespace conic::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::string out_dir = "duality-output";
  std::string emit_path;
  int grid = 0;  // 0 means the config's grid size
  bool svg = false;
  std::map<std::string, double> tolerances;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

MarketConfig load(const Options& opt) {
  MarketConfig c = parse_config(read_file(opt.config_path));
  for (const auto& [name, value] : opt.tolerances) c.tolerance_overrides[name] = value;
  return c;
}

int cmd_validate(const Options& opt, std::ostream& out, std::ostream& err) {
  MarketConfig c = load(opt);
  std::size_t problems = 0;
  std::optional<ScenarioTree> tree;
  try {
    tree = build_tree(c);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kInvalid;
  }
  std::vector<Eigen::MatrixXd> entries;
  try {
    entries = bidask_entries(c, *tree);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kParseError : kInvalid;
  }
  const double rel = c.tolerances().bidask_relative;
  for (std::size_t v = 0; v < entries.size(); ++v) {
    for (const auto& viol : bidask_violations(entries[v], rel)) {
      out << to_string(viol.code) << " at node " << v << ": " << viol.describe() << '\n';
      ++problems;
    }
  }
  if (problems > 0) {
    out << problems << " violation(s)\n";
    return kInvalid;
  }
  out << "valid: d=" << c.d << " horizon=" << tree->horizon() << " nodes=" << tree->size()
      << " leaves=" << tree->leaf_count() << '\n';
  return kOk;
}

int cmd_no_arbitrage(const Options& opt, std::ostream& out) {
  Experiment e = build_experiment(load(opt));
  ArbitrageReport r = check_no_arbitrage(*e.market, e.tol);
  out << "verdict," << to_string(r.verdict) << '\n';
  out << "pricing_margin," << format_double(r.margin) << '\n';
  out << "arbitrage_lp_feasible," << (r.arbitrage_feasible ? "true" : "false") << '\n';
  if (r.verdict == Verdict::NoArbitrage) {
    write_certificate_csv(out, *e.market, *r.certificate);
    return kOk;
  }
  if (r.verdict == Verdict::Arbitrage) {
    write_witness_csv(out, *r.witness);
    write_plan_csv(out, *r.witness_plan);
    return kArbitrage;
  }
  return kInconclusive;
}

int cmd_duality(const Options& opt, std::ostream& out) {
  MarketConfig c = load(opt);
  Experiment e = build_experiment(c);
  const int points = opt.grid > 0 ? opt.grid : c.grid.points;
  const auto grid = weight_grid(c.d, points, c.grid.epsilon);
  DualityReport report = duality_report(*e.attainable, e.utility, grid, e.tol, thread_budget());

  fs::create_directories(opt.out_dir);
  const fs::path dir(opt.out_dir);
  std::ostringstream buf;
  write_scalarizations_csv(buf, report);
  write_file(dir / "scalarizations.csv", buf.str());
  buf.str("");
  write_outer_csv(buf, report.image);
  write_file(dir / "upper_image_outer.csv", buf.str());
  buf.str("");
  write_inner_csv(buf, report.image);
  write_file(dir / "upper_image_inner.csv", buf.str());
  buf.str("");
  write_summary_csv(buf, report);
  write_file(dir / "summary.csv", buf.str());
  if (opt.svg) {
    if (c.d == 2) {
      write_file(dir / "upper_image.svg", upper_image_svg(report.image));
      write_file(dir / "cones.svg", cones_svg(*e.market));
    } else {
      out << "note: drawings are only produced for two assets\n";
    }
  }

  write_summary_csv(out, report);
  if (report.arbitrage.verdict == Verdict::Arbitrage) return kArbitrage;
  if (report.arbitrage.verdict == Verdict::Inconclusive) return kInconclusive;
  if (report.failed > 0) return kSolverFailure;
  return kOk;
}

int cmd_paper_example(const Options& opt, std::ostream& out) {
  const std::string text = emit_config(paper_example_config());
  if (opt.emit_path.empty()) {
    out << text;
  } else {
    write_file(opt.emit_path, text);
  }
  return kOk;
}

int code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigError: return kParseError;
    case ErrorCode::SolverFailure:
    case ErrorCode::Overflow:
    case ErrorCode::SeparationFailure: return kSolverFailure;
    case ErrorCode::Inconclusive: return kInconclusive;
    case ErrorCode::WeakDualityViolation: return kWeakDualityViolation;
    default: return kInvalid;
  }
}

}  // namespace

unsigned thread_budget() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CONIC_DUALITY_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1) return static_cast<unsigned>(std::min<long>(n, 1024));
  }
  return hw;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Set-valued duality for portfolio optimization under proportional transaction costs",
               "conic-duality"};
  app.require_subcommand(1);
  app.fallthrough();
  for (const auto& name : tolerance_names()) {
    std::string flag = "--tol-" + name;
    std::replace(flag.begin(), flag.end(), '_', '-');
    app.add_option_function<double>(
        flag, [&opt, name](double v) { opt.tolerances[name] = v; }, "override tolerance " + name);
  }

  auto* validate = app.add_subcommand("validate", "check tree and bid-ask axioms of a config");
  validate->add_option("config", opt.config_path, "market config (JSON)")->required();

  auto* no_arb = app.add_subcommand("no-arbitrage", "consistent pricing certificate or arbitrage witness");
  no_arb->add_option("config", opt.config_path, "market config (JSON)")->required();

  auto* duality = app.add_subcommand("duality", "scalarized primal/dual solves over a weight grid");
  duality->add_option("config", opt.config_path, "market config (JSON)")->required();
  duality->add_option("--grid", opt.grid, "number of grid points along each simplex edge")->check(CLI::PositiveNumber);
  duality->add_option("--out", opt.out_dir, "output directory");
  duality->add_flag("--svg", opt.svg, "also draw the upper image and the cones (two assets)");

  auto* paper = app.add_subcommand("paper-example", "print the two-asset three-period example config");
  paper->add_option("--out", opt.emit_path, "write the config to this file instead of stdout");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kParseError;
  }

  try {
    if (*validate) return cmd_validate(opt, out, err);
    if (*no_arb) return cmd_no_arbitrage(opt, out);
    if (*duality) return cmd_duality(opt, out);
    if (*paper) return cmd_paper_example(opt, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kParseError;
}

}  // namespace conic::cli
