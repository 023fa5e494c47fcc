#include "conic/config.hpp"

#include "conic/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace conic {

namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& ptr, const std::string& what) {
  throw Error(ErrorCode::ConfigError, (ptr.empty() ? std::string("/") : ptr) + ": " + what);
}

void allow_keys(const json& obj, const std::string& ptr, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(ptr, "expected an object");
  std::set<std::string> known(keys.begin(), keys.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) fail(ptr + "/" + it.key(), "unknown key");
  }
}

double number(const json& v, const std::string& ptr) {
  if (!v.is_number()) fail(ptr, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(ptr, "expected a finite number");
  return x;
}

long long integer(const json& v, const std::string& ptr) {
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::floor(x) == x && std::abs(x) < 9e15) return static_cast<long long>(x);
  }
  fail(ptr, "expected an integer");
}

std::vector<double> numbers(const json& v, const std::string& ptr) {
  if (!v.is_array()) fail(ptr, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], ptr + "/" + std::to_string(i)));
  return out;
}

Eigen::MatrixXd matrix(const json& v, const std::string& ptr) {
  if (!v.is_array() || v.empty()) fail(ptr, "expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string rp = ptr + "/" + std::to_string(r);
    auto row = numbers(v[static_cast<std::size_t>(r)], rp);
    if (r == 0) m.resize(rows, static_cast<Eigen::Index>(row.size()));
    if (static_cast<Eigen::Index>(row.size()) != m.cols()) fail(rp, "rows differ in length");
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  if (m.rows() != m.cols()) fail(ptr, "matrix must be square");
  return m;
}

ordered emit_matrix(const Eigen::MatrixXd& m) {
  ordered out = ordered::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered row = ordered::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

struct TolField {
  const char* name;
  double Tolerances::*real;
  int Tolerances::*count;
};

const std::vector<TolField>& tol_fields() {
  static const std::vector<TolField> fields = {
      {"lp_feasibility", &Tolerances::lp_feasibility, nullptr},
      {"lp_pivot", &Tolerances::lp_pivot, nullptr},
      {"lp_cost", &Tolerances::lp_cost, nullptr},
      {"lp_max_iterations", nullptr, &Tolerances::lp_max_iterations},
      {"armijo_c", &Tolerances::armijo_c, nullptr},
      {"armijo_beta", &Tolerances::armijo_beta, nullptr},
      {"barrier_growth", &Tolerances::barrier_growth, nullptr},
      {"barrier_gap", &Tolerances::barrier_gap, nullptr},
      {"newton_decrement", &Tolerances::newton_decrement, nullptr},
      {"interior_margin", &Tolerances::interior_margin, nullptr},
      {"divergence_bound", &Tolerances::divergence_bound, nullptr},
      {"smooth_max_iterations", nullptr, &Tolerances::smooth_max_iterations},
      {"cone_zero", &Tolerances::cone_zero, nullptr},
      {"bidask_relative", &Tolerances::bidask_relative, nullptr},
      {"containment", &Tolerances::containment, nullptr},
      {"strict_margin", &Tolerances::strict_margin, nullptr},
      {"membership", &Tolerances::membership, nullptr},
      {"weak_duality", &Tolerances::weak_duality, nullptr},
      {"strong_duality", &Tolerances::strong_duality, nullptr},
  };
  return fields;
}

TreeConfig parse_tree(const json& v, const std::string& ptr) {
  allow_keys(v, ptr, {"branching", "conditional_probabilities", "nodes"});
  TreeConfig t;
  const bool has_branching = v.contains("branching");
  const bool has_nodes = v.contains("nodes");
  if (has_branching == has_nodes) fail(ptr, "give exactly one of \"branching\" and \"nodes\"");
  if (has_branching) {
    const auto& b = v["branching"];
    if (!b.is_array()) fail(ptr + "/branching", "expected an array of integers");
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::string p = ptr + "/branching/" + std::to_string(i);
      const long long k = integer(b[i], p);
      if (k < 1 || k > 1000) fail(p, "branching factor must lie in [1, 1000]");
      t.branching.push_back(static_cast<int>(k));
    }
    if (v.contains("conditional_probabilities")) {
      const auto& c = v["conditional_probabilities"];
      const std::string cp = ptr + "/conditional_probabilities";
      if (!c.is_array() || c.size() != t.branching.size()) fail(cp, "expected one list per level");
      for (std::size_t i = 0; i < c.size(); ++i) {
        auto level = numbers(c[i], cp + "/" + std::to_string(i));
        if (level.size() != static_cast<std::size_t>(t.branching[i])) {
          fail(cp + "/" + std::to_string(i), "length differs from the branching factor");
        }
        t.conditional.push_back(std::move(level));
      }
    }
  } else {
    if (v.contains("conditional_probabilities")) fail(ptr + "/conditional_probabilities", "only valid with branching");
    const auto& n = v["nodes"];
    if (!n.is_array() || n.empty()) fail(ptr + "/nodes", "expected a nonempty array");
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string p = ptr + "/nodes/" + std::to_string(i);
      allow_keys(n[i], p, {"parent", "mass"});
      NodeSpec s;
      if (!n[i].contains("mass")) fail(p, "missing \"mass\"");
      s.mass = number(n[i]["mass"], p + "/mass");
      if (n[i].contains("parent") && !n[i]["parent"].is_null()) {
        const long long parent = integer(n[i]["parent"], p + "/parent");
        if (parent < 0 || static_cast<std::size_t>(parent) >= n.size()) fail(p + "/parent", "no such node");
        s.parent = static_cast<std::size_t>(parent);
      }
      t.nodes.push_back(s);
    }
  }
  return t;
}

BidAskConfig parse_bidask(const json& v, const std::string& ptr) {
  allow_keys(v, ptr, {"rule", "matrix", "matrices", "spread", "seed", "log_price_range"});
  BidAskConfig b;
  if (!v.contains("rule") || !v["rule"].is_string()) fail(ptr + "/rule", "expected a string");
  const auto rule = v["rule"].get<std::string>();
  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (v.contains(k)) fail(ptr + "/" + k, "not used by rule \"" + rule + "\"");
    }
  };
  if (rule == "paper-example") {
    b.rule = BidAskRule::PaperExample;
    forbid({"matrix", "matrices", "spread", "seed", "log_price_range"});
  } else if (rule == "explicit") {
    b.rule = BidAskRule::Explicit;
    forbid({"spread", "seed", "log_price_range"});
    if (v.contains("matrix") == v.contains("matrices")) fail(ptr, "give exactly one of \"matrix\" and \"matrices\"");
    if (v.contains("matrix")) {
      b.matrix = matrix(v["matrix"], ptr + "/matrix");
    } else {
      const auto& ms = v["matrices"];
      if (!ms.is_array() || ms.empty()) fail(ptr + "/matrices", "expected a nonempty array of matrices");
      for (std::size_t i = 0; i < ms.size(); ++i) b.matrices.push_back(matrix(ms[i], ptr + "/matrices/" + std::to_string(i)));
    }
  } else if (rule == "random") {
    b.rule = BidAskRule::Random;
    forbid({"matrix", "matrices"});
    if (!v.contains("spread")) fail(ptr, "missing \"spread\"");
    auto spread = numbers(v["spread"], ptr + "/spread");
    if (spread.size() != 2) fail(ptr + "/spread", "expected [lo, hi]");
    if (spread[0] < 0.0 || spread[1] < spread[0]) fail(ptr + "/spread", "need 0 <= lo <= hi");
    b.spread_lo = spread[0];
    b.spread_hi = spread[1];
    if (!v.contains("seed")) fail(ptr, "missing \"seed\"");
    const long long seed = integer(v["seed"], ptr + "/seed");
    if (seed < 0) fail(ptr + "/seed", "seed must be nonnegative");
    b.seed = static_cast<std::uint64_t>(seed);
    if (v.contains("log_price_range")) {
      b.log_price_range = number(v["log_price_range"], ptr + "/log_price_range");
      if (b.log_price_range < 0.0) fail(ptr + "/log_price_range", "must be nonnegative");
    }
  } else {
    fail(ptr + "/rule", "unknown rule \"" + rule + "\" (expected paper-example, explicit or random)");
  }
  return b;
}

}  // namespace

Tolerances MarketConfig::tolerances() const {
  Tolerances tol;
  tol.grid_epsilon = grid.epsilon;
  for (const auto& [name, value] : tolerance_overrides) set_tolerance(tol, name, value);
  return tol;
}

std::vector<std::string> tolerance_names() {
  std::vector<std::string> out;
  for (const auto& f : tol_fields()) out.emplace_back(f.name);
  return out;
}

void set_tolerance(Tolerances& tol, const std::string& name, double value) {
  for (const auto& f : tol_fields()) {
    if (name != f.name) continue;
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw Error(ErrorCode::ConfigError, "tolerance " + name + " must be positive and finite");
    }
    if (f.real) {
      tol.*f.real = value;
    } else {
      if (std::floor(value) != value || value > 1e9) {
        throw Error(ErrorCode::ConfigError, "tolerance " + name + " must be an integer");
      }
      tol.*f.count = static_cast<int>(value);
    }
    return;
  }
  throw Error(ErrorCode::ConfigError, "unknown tolerance " + name);
}

MarketConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("/: malformed JSON: ") + e.what());
  }
  allow_keys(doc, "", {"d", "tree", "bidask", "utility", "x0", "grid", "tolerances"});
  MarketConfig c;
  if (!doc.contains("d")) fail("", "missing \"d\"");
  const long long d = integer(doc["d"], "/d");
  if (d < 1 || d > PolyCone::max_dimension) fail("/d", "asset count must lie in [1, 8]");
  c.d = static_cast<int>(d);

  if (!doc.contains("tree")) fail("", "missing \"tree\"");
  c.tree = parse_tree(doc["tree"], "/tree");
  if (!doc.contains("bidask")) fail("", "missing \"bidask\"");
  c.bidask = parse_bidask(doc["bidask"], "/bidask");
  if (c.bidask.rule == BidAskRule::PaperExample && c.d != 2) fail("/bidask/rule", "paper-example needs d = 2");
  if (c.bidask.matrix && c.bidask.matrix->rows() != c.d) fail("/bidask/matrix", "size differs from d");
  for (std::size_t i = 0; i < c.bidask.matrices.size(); ++i) {
    if (c.bidask.matrices[i].rows() != c.d) fail("/bidask/matrices/" + std::to_string(i), "size differs from d");
  }

  if (doc.contains("utility")) {
    const auto& u = doc["utility"];
    if (!u.is_array() || u.size() != static_cast<std::size_t>(c.d)) fail("/utility", "expected one entry per asset");
    for (std::size_t i = 0; i < u.size(); ++i) {
      const std::string p = "/utility/" + std::to_string(i);
      allow_keys(u[i], p, {"family", "a", "b"});
      UtilityConfig uc;
      if (u[i].contains("family")) {
        if (!u[i]["family"].is_string()) fail(p + "/family", "expected a string");
        uc.family = u[i]["family"].get<std::string>();
      }
      if (uc.family != "exponential") fail(p + "/family", "unsupported family \"" + uc.family + "\"");
      if (u[i].contains("a")) uc.a = number(u[i]["a"], p + "/a");
      if (u[i].contains("b")) uc.b = number(u[i]["b"], p + "/b");
      if (!(uc.a > 0.0)) fail(p + "/a", "must be positive");
      if (!(uc.b > 0.0)) fail(p + "/b", "must be positive");
      c.utility.push_back(uc);
    }
  } else {
    c.utility.assign(static_cast<std::size_t>(c.d), UtilityConfig{});
  }

  c.x0 = Eigen::VectorXd::Zero(c.d);
  if (doc.contains("x0")) {
    auto x0 = numbers(doc["x0"], "/x0");
    if (x0.size() != static_cast<std::size_t>(c.d)) fail("/x0", "expected d entries");
    for (int i = 0; i < c.d; ++i) c.x0(i) = x0[static_cast<std::size_t>(i)];
  }

  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    allow_keys(g, "/grid", {"points", "epsilon"});
    if (g.contains("points")) {
      const long long pts = integer(g["points"], "/grid/points");
      if (pts < 1 || pts > 100000) fail("/grid/points", "must lie in [1, 100000]");
      c.grid.points = static_cast<int>(pts);
    }
    if (g.contains("epsilon")) {
      c.grid.epsilon = number(g["epsilon"], "/grid/epsilon");
      if (c.grid.epsilon < 0.0 || c.grid.epsilon * c.d >= 1.0) fail("/grid/epsilon", "must lie in [0, 1/d)");
    }
  }

  if (doc.contains("tolerances")) {
    const auto& t = doc["tolerances"];
    if (!t.is_object()) fail("/tolerances", "expected an object");
    Tolerances probe;
    for (auto it = t.begin(); it != t.end(); ++it) {
      const std::string p = "/tolerances/" + it.key();
      const double value = number(it.value(), p);
      try {
        set_tolerance(probe, it.key(), value);
      } catch (const Error& e) {
        fail(p, e.detail());
      }
      c.tolerance_overrides[it.key()] = value;
    }
  }
  return c;
}

std::string emit_config(const MarketConfig& c) {
  ordered doc;
  doc["d"] = c.d;

  ordered tree;
  if (!c.tree.nodes.empty()) {
    ordered nodes = ordered::array();
    for (const auto& n : c.tree.nodes) {
      ordered node;
      node["parent"] = n.parent ? ordered(*n.parent) : ordered(nullptr);
      node["mass"] = n.mass;
      nodes.push_back(std::move(node));
    }
    tree["nodes"] = std::move(nodes);
  } else {
    tree["branching"] = c.tree.branching;
    if (!c.tree.conditional.empty()) tree["conditional_probabilities"] = c.tree.conditional;
  }
  doc["tree"] = std::move(tree);

  ordered bidask;
  switch (c.bidask.rule) {
    case BidAskRule::PaperExample:
      bidask["rule"] = "paper-example";
      break;
    case BidAskRule::Explicit:
      bidask["rule"] = "explicit";
      if (c.bidask.matrix) {
        bidask["matrix"] = emit_matrix(*c.bidask.matrix);
      } else {
        ordered ms = ordered::array();
        for (const auto& m : c.bidask.matrices) ms.push_back(emit_matrix(m));
        bidask["matrices"] = std::move(ms);
      }
      break;
    case BidAskRule::Random:
      bidask["rule"] = "random";
      bidask["spread"] = {c.bidask.spread_lo, c.bidask.spread_hi};
      bidask["seed"] = c.bidask.seed;
      bidask["log_price_range"] = c.bidask.log_price_range;
      break;
  }
  doc["bidask"] = std::move(bidask);

  ordered utility = ordered::array();
  for (const auto& u : c.utility) {
    ordered entry;
    entry["family"] = u.family;
    entry["a"] = u.a;
    entry["b"] = u.b;
    utility.push_back(std::move(entry));
  }
  doc["utility"] = std::move(utility);

  ordered x0 = ordered::array();
  for (Eigen::Index i = 0; i < c.x0.size(); ++i) x0.push_back(c.x0(i));
  doc["x0"] = std::move(x0);

  ordered grid;
  grid["points"] = c.grid.points;
  grid["epsilon"] = c.grid.epsilon;
  doc["grid"] = std::move(grid);

  if (!c.tolerance_overrides.empty()) {
    ordered tol;
    for (const auto& [name, value] : c.tolerance_overrides) tol[name] = value;
    doc["tolerances"] = std::move(tol);
  }
  return doc.dump(2) + "\n";
}

MarketConfig paper_example_config() {
  MarketConfig c;
  c.d = 2;
  c.tree.branching = {3, 3, 3};
  c.bidask.rule = BidAskRule::PaperExample;
  c.utility.assign(2, UtilityConfig{});
  c.x0 = Eigen::VectorXd::Zero(2);
  return c;
}

ScenarioTree build_tree(const MarketConfig& c) {
  if (!c.tree.nodes.empty()) return ScenarioTree::from_nodes(c.tree.nodes);
  return ScenarioTree::from_branching(c.tree.branching, c.tree.conditional);
}

std::vector<Eigen::MatrixXd> bidask_entries(const MarketConfig& c, const ScenarioTree& tree) {
  std::vector<Eigen::MatrixXd> out;
  switch (c.bidask.rule) {
    case BidAskRule::PaperExample: {
      // omega = child position - 1 along the path; pi_21 = 8 * 2^(sum of omega).
      std::vector<int> shift(tree.size(), 0);
      for (NodeId v = 0; v < tree.size(); ++v) {
        const auto& kids = tree.node(v).children;
        for (std::size_t k = 0; k < kids.size(); ++k) shift[kids[k]] = shift[v] + static_cast<int>(k) - 1;
        Eigen::MatrixXd m(2, 2);
        m << 1.0, 1.0, 8.0 * std::ldexp(1.0, shift[v]), 1.0;
        out.push_back(m);
      }
      break;
    }
    case BidAskRule::Explicit:
      if (c.bidask.matrix) {
        out.assign(tree.size(), *c.bidask.matrix);
      } else {
        if (c.bidask.matrices.size() != tree.size()) {
          std::ostringstream msg;
          msg << "/bidask/matrices: expected " << tree.size() << " matrices (one per node), got "
              << c.bidask.matrices.size();
          throw Error(ErrorCode::ConfigError, msg.str());
        }
        out = c.bidask.matrices;
      }
      break;
    case BidAskRule::Random: {
      RandomMarketSpec spec;
      spec.d = c.d;
      spec.spread_lo = c.bidask.spread_lo;
      spec.spread_hi = c.bidask.spread_hi;
      spec.seed = c.bidask.seed;
      spec.log_price_range = c.bidask.log_price_range;
      for (const auto& m : random_bidask_process(spec, tree)) out.push_back(m.entries());
      break;
    }
  }
  return out;
}

UtilitySpec build_utility(const MarketConfig& c) {
  std::vector<std::shared_ptr<const UtilityFunction>> us;
  for (const auto& u : c.utility) us.push_back(std::make_shared<ExponentialUtility>(u.a, u.b));
  return UtilitySpec(std::move(us));
}

Experiment build_experiment(const MarketConfig& c) {
  Experiment e;
  e.tol = c.tolerances();
  ScenarioTree tree = build_tree(c);
  auto entries = bidask_entries(c, tree);
  std::vector<BidAskMatrix> bidask;
  for (std::size_t v = 0; v < entries.size(); ++v) {
    try {
      bidask.push_back(BidAskMatrix::validate(entries[v], e.tol.bidask_relative));
    } catch (const Error& err) {
      throw Error(err.code(), "node " + std::to_string(v) + ": " + err.detail());
    }
  }
  e.market = std::make_shared<const MarketModel>(std::move(tree), std::move(bidask), e.tol);
  e.attainable = std::make_shared<const AttainableSet>(e.market, c.x0);
  e.utility = build_utility(c);
  return e;
}

}  // namespace conic
