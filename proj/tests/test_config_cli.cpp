#include "conic/cli.hpp"
#include "conic/config.hpp"
#include "conic/errors.hpp"
#include "conic/report.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace conic;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / "conic-cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path.string();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "conic-duality");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kOneAsset = R"({
  "d": 1,
  "tree": {"branching": []},
  "bidask": {"rule": "explicit", "matrix": [[1.0]]},
  "utility": [{"family": "exponential"}],
  "x0": [0.0]
})";

const char* kOnePeriod = R"({
  "d": 2,
  "tree": {"branching": []},
  "bidask": {"rule": "explicit", "matrix": [[1, 1], [8, 1]]},
  "utility": [{"family": "exponential"}, {"family": "exponential"}],
  "x0": [0, 0]
})";

const char* kPriceMove = R"({
  "d": 2,
  "tree": {"branching": [1]},
  "bidask": {"rule": "explicit", "matrices": [[[1, 0.5], [2, 1]], [[1, 0.25], [4, 1]]]},
  "utility": [{"family": "exponential"}, {"family": "exponential"}],
  "x0": [0, 0]
})";

}  // namespace

TEST(Config, ExampleRule) {
  const auto c = paper_example_config();
  const auto tree = build_tree(c);
  const auto pis = bidask_entries(c, tree);
  EXPECT_EQ(pis[0](1, 0), 8.0);
  EXPECT_EQ(pis[3](1, 0), 16.0);  // t = 1, omega_1 = 1
  EXPECT_EQ(pis[13](1, 0), 1.0);  // path (-1, -1, -1)
  const auto e = build_experiment(c);
  const auto& k = e.market->K(13);
  EXPECT_TRUE(k.contains(Eigen::Vector2d(1, -1)));
  EXPECT_TRUE(k.contains(Eigen::Vector2d(-1, 1)));
  EXPECT_FALSE(k.contains(Eigen::Vector2d(-1, 0.9)));
  ASSERT_EQ(e.market->Kplus(13).generators().size(), 1u);
  EXPECT_NEAR(e.market->Kplus(13).generators()[0](0), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(e.market->Kplus(13).generators()[0](1), std::sqrt(0.5), 1e-12);
}

TEST(Config, RoundTripIsCanonical) {
  const std::string a = emit_config(paper_example_config());
  EXPECT_EQ(emit_config(parse_config(a)), a);
  for (const char* text : {kOneAsset, kOnePeriod, kPriceMove}) {
    const std::string once = emit_config(parse_config(text));
    EXPECT_EQ(emit_config(parse_config(once)), once);
  }
  MarketConfig r = paper_example_config();
  r.tree.branching = {2, 2};
  r.bidask.rule = BidAskRule::Random;
  r.bidask.spread_hi = 0.1;
  r.bidask.seed = 7;
  r.tolerance_overrides["lp_pivot"] = 1e-10;
  const std::string once = emit_config(r);
  EXPECT_EQ(emit_config(parse_config(once)), once);
  EXPECT_EQ(parse_config(once).tolerances().lp_pivot, 1e-10);
}

TEST(Config, ErrorsCarryPointer) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError);
      return e.detail();
    }
    return std::string("no error");
  };
  EXPECT_EQ(message("{").rfind("/: ", 0), 0u);
  const std::string bad_x0 = std::string(kOnePeriod).replace(std::string(kOnePeriod).find("[0, 0]"), 6, "[0, \"a\"]");
  EXPECT_EQ(message(bad_x0).rfind("/x0/1", 0), 0u);
  const std::string extra = std::string(kOnePeriod).replace(1, 0, "\"colour\": 1,");
  EXPECT_NE(message(extra).find("colour"), std::string::npos);
}

TEST(Config, BuildRejectsBadMatrix) {
  auto c = parse_config(kOnePeriod);
  c.bidask.matrix = (Eigen::MatrixXd(2, 2) << 1.1, 1, 8, 1).finished();
  try {
    build_experiment(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DiagonalNotOne);
    EXPECT_NE(std::string(e.what()).find("node 0"), std::string::npos);
  }
}

TEST(Cli, Validate) {
  const auto dir = scratch("validate");
  const auto example = dir / "example.json";
  EXPECT_EQ(run({"paper-example", "--out", example.string()}).code, 0);
  EXPECT_EQ(run({"validate", example.string()}).code, 0);

  std::string diag = kOnePeriod;
  diag.replace(diag.find("[[1, 1]"), 7, "[[1.1, 1]");
  const auto r = run({"validate", write(dir / "diag.json", diag)});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("DiagonalNotOne at node 0"), std::string::npos);

  EXPECT_EQ(run({"validate", write(dir / "broken.json", "{\"d\": 2,")}).code, 2);
  EXPECT_EQ(run({"validate", (dir / "missing.json").string()}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
}

TEST(Cli, NoArbitrage) {
  const auto dir = scratch("noarb");
  const auto example = dir / "example.json";
  run({"paper-example", "--out", example.string()});
  const auto ok = run({"no-arbitrage", example.string()});
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("verdict,no-arbitrage"), std::string::npos);

  const auto arb = run({"no-arbitrage", write(dir / "move.json", kPriceMove)});
  EXPECT_EQ(arb.code, 3);
  EXPECT_NE(arb.out.find("verdict,arbitrage"), std::string::npos);

  EXPECT_EQ(run({"no-arbitrage", write(dir / "one.json", kOneAsset)}).code, 0);
  EXPECT_EQ(run({"--tol-lp-max-iterations", "1", "no-arbitrage", example.string()}).code, 5);
}

TEST(Cli, DualityOutputs) {
  const auto dir = scratch("duality");
  const auto one = write(dir / "one.json", kOneAsset);
  ASSERT_EQ(run({"duality", one, "--out", (dir / "one").string()}).code, 0);
  std::istringstream rows(slurp(dir / "one" / "scalarizations.csv"));
  std::string header, row, extra;
  std::getline(rows, header);
  std::getline(rows, row);
  EXPECT_FALSE(std::getline(rows, extra));
  EXPECT_EQ(header, "z_1,primal_value,dual_value,gap,iters_p,iters_d,status");
  std::istringstream cells(row);
  std::string z, p, d;
  std::getline(cells, z, ',');
  std::getline(cells, p, ',');
  std::getline(cells, d, ',');
  EXPECT_NEAR(std::stod(p), 1.0, 1e-9);
  EXPECT_NEAR(std::stod(d), 1.0, 1e-9);

  const auto period = write(dir / "period.json", kOnePeriod);
  ASSERT_EQ(run({"duality", period, "--grid", "1", "--out", (dir / "period").string(), "--svg"}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "period" / "upper_image.svg"));
  EXPECT_TRUE(fs::exists(dir / "period" / "cones.svg"));
  std::istringstream prow(slurp(dir / "period" / "scalarizations.csv"));
  std::getline(prow, header);
  std::getline(prow, row);
  EXPECT_EQ(row.rfind("0.5,0.5,", 0), 0u);
  EXPECT_NEAR(std::stod(row.substr(8)), 1.0, 1e-7);

  EXPECT_EQ(run({"duality", write(dir / "move.json", kPriceMove), "--grid", "3", "--out", (dir / "move").string()}).code,
            3);
}

TEST(Cli, DeterministicCsv) {
  const auto dir = scratch("determinism");
  const auto example = dir / "example.json";
  auto c = paper_example_config();
  c.tree.branching = {3, 3};
  write(example, emit_config(c));
  ASSERT_EQ(run({"duality", example.string(), "--grid", "9", "--out", (dir / "a").string()}).code, 0);
  setenv("CONIC_DUALITY_THREADS", "1", 1);
  ASSERT_EQ(run({"duality", example.string(), "--grid", "9", "--out", (dir / "b").string()}).code, 0);
  unsetenv("CONIC_DUALITY_THREADS");
  for (const char* f : {"scalarizations.csv", "upper_image_outer.csv", "upper_image_inner.csv"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  auto without_runtime = [](const std::string& s) { return s.substr(0, s.find("runtime_seconds")); };
  EXPECT_EQ(without_runtime(slurp(dir / "a" / "summary.csv")), without_runtime(slurp(dir / "b" / "summary.csv")));
}

TEST(Cli, ThreadBudget) {
  setenv("CONIC_DUALITY_THREADS", "3", 1);
  EXPECT_EQ(cli::thread_budget(), 3u);
  setenv("CONIC_DUALITY_THREADS", "zero", 1);
  EXPECT_GE(cli::thread_budget(), 1u);
  unsetenv("CONIC_DUALITY_THREADS");
}

TEST(Report, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_extended(ExtendedReal::minus_infinity()), "-inf");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}
