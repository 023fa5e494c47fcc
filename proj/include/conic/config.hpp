#pragma once

#include "conic/cones.hpp"
#include "conic/duality.hpp"
#include "conic/market.hpp"
#include "conic/scenario_tree.hpp"
#include "conic/tolerances.hpp"
#include "conic/utility.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace conic {

struct TreeConfig {
  std::vector<int> branching;
  std::vector<std::vector<double>> conditional;  // optional, one list per level
  std::vector<NodeSpec> nodes;                   // explicit alternative to branching
};

enum class BidAskRule { PaperExample, Explicit, Random };

struct BidAskConfig {
  BidAskRule rule = BidAskRule::PaperExample;
  std::optional<Eigen::MatrixXd> matrix;  // Explicit: shared by every node
  std::vector<Eigen::MatrixXd> matrices;  // Explicit: one per node id
  double spread_lo = 0.0;                 // Random
  double spread_hi = 0.0;
  std::uint64_t seed = 0;
  double log_price_range = 1.0;
};

struct UtilityConfig {
  std::string family = "exponential";
  double a = 1.0;
  double b = 1.0;
};

struct GridConfig {
  int points = 21;
  double epsilon = 0.02;
};

/// Everything needed to set up one experiment. Parsing checks the schema
/// only; the market axioms are checked when the market is built.
struct MarketConfig {
  int d = 2;
  TreeConfig tree;
  BidAskConfig bidask;
  std::vector<UtilityConfig> utility;  // one entry per asset
  Eigen::VectorXd x0;
  GridConfig grid;
  std::map<std::string, double> tolerance_overrides;

  Tolerances tolerances() const;
};

/// Parses JSON text. Throws Error(ConfigError) whose message starts with the
/// JSON pointer of the offending value.
MarketConfig parse_config(const std::string& text);

/// Canonical JSON: fixed key order, two-space indent, trailing newline.
std::string emit_config(const MarketConfig& config);

/// The two-asset, three-period ternary example with Pi_21 = 8 * 2^(sum of omega).
MarketConfig paper_example_config();

/// Names accepted in "tolerances" and by --tol-<name> on the command line.
std::vector<std::string> tolerance_names();
void set_tolerance(Tolerances& tol, const std::string& name, double value);

ScenarioTree build_tree(const MarketConfig& config);

/// Raw per-node matrices before axiom checks.
std::vector<Eigen::MatrixXd> bidask_entries(const MarketConfig& config, const ScenarioTree& tree);

UtilitySpec build_utility(const MarketConfig& config);

struct Experiment {
  std::shared_ptr<const MarketModel> market;
  std::shared_ptr<const AttainableSet> attainable;
  UtilitySpec utility;
  Tolerances tol;
};

/// Validates tree and bid-ask process and assembles the market.
Experiment build_experiment(const MarketConfig& config);

}  // namespace conic
