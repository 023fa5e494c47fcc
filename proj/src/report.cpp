#include "conic/report.hpp"

#include "conic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace conic {

namespace {

void header_columns(std::ostream& out, const char* prefix, Eigen::Index d) {
  for (Eigen::Index i = 0; i < d; ++i) out << prefix << i + 1 << ',';
}

// Fixed-point coordinates keep the SVG text stable across platforms.
std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_extended(const ExtendedReal& x) {
  return format_double(x.to_double());
}

void write_scalarizations_csv(std::ostream& out, const DualityReport& report) {
  const Eigen::Index d = report.rows.empty() ? 0 : report.rows.front().weight.z.size();
  header_columns(out, "z_", d);
  out << "primal_value,dual_value,gap,iters_p,iters_d,status\n";
  for (const auto& r : report.rows) {
    for (Eigen::Index i = 0; i < d; ++i) out << format_double(r.weight.z(i)) << ',';
    const bool both = r.primal_status == PrimalStatus::Attained && r.dual_status == DualStatus::Attained;
    out << format_extended(r.primal_value) << ',' << format_extended(r.dual_value) << ','
        << (both ? format_double(r.gap) : std::string("nan")) << ',' << r.primal_iterations << ','
        << r.dual_iterations << ',' << to_string(r.primal_status) << '/' << to_string(r.dual_status) << '\n';
  }
}

void write_outer_csv(std::ostream& out, const UpperImage& image) {
  const Eigen::Index d = image.outer.empty() ? 0 : image.outer.front().normal.size();
  header_columns(out, "z_", d);
  out << "support\n";
  for (const auto& h : image.outer) {
    for (Eigen::Index i = 0; i < d; ++i) out << format_double(h.normal(i)) << ',';
    out << format_extended(h.support) << '\n';
  }
}

void write_inner_csv(std::ostream& out, const UpperImage& image) {
  const Eigen::Index d = image.inner.empty() ? 0 : image.inner.front().size();
  for (Eigen::Index i = 0; i < d; ++i) out << (i ? "," : "") << "q_" << i + 1;
  out << '\n';
  for (const auto& q : image.inner) {
    for (Eigen::Index i = 0; i < d; ++i) out << (i ? "," : "") << format_double(q(i));
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const DualityReport& report) {
  out << "key,value\n";
  out << "weights," << report.rows.size() << '\n';
  out << "verdict," << to_string(report.arbitrage.verdict) << '\n';
  out << "pricing_margin," << format_double(report.arbitrage.margin) << '\n';
  out << "slater," << (report.slater ? "true" : "false") << '\n';
  out << "attained," << report.attained << '\n';
  out << "unattained," << report.unattained << '\n';
  out << "failed," << report.failed << '\n';
  out << "max_relative_gap," << format_double(report.max_relative_gap) << '\n';
  out << "min_sandwich_slack," << format_double(report.image.min_sandwich_slack()) << '\n';
  out << "runtime_seconds," << format_double(report.seconds) << '\n';
}

void write_certificate_csv(std::ostream& out, const MarketModel& market, const PricingProcess& prices) {
  out << "node,time,mass,";
  for (int i = 0; i < market.dim(); ++i) out << (i ? "," : "") << "Z_" << i + 1;
  out << '\n';
  for (NodeId v = 0; v < market.tree().size(); ++v) {
    const auto& n = market.tree().node(v);
    out << v << ',' << n.time << ',' << format_double(n.mass);
    for (int i = 0; i < market.dim(); ++i) out << ',' << format_double(prices.prices.values(i, static_cast<Eigen::Index>(v)));
    out << '\n';
  }
}

void write_witness_csv(std::ostream& out, const TerminalPosition& witness) {
  out << "leaf";
  for (Eigen::Index i = 0; i < witness.values.rows(); ++i) out << ",x_" << i + 1;
  out << '\n';
  for (Eigen::Index k = 0; k < witness.values.cols(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < witness.values.rows(); ++i) out << ',' << format_double(witness.values(i, k));
    out << '\n';
  }
}

void write_plan_csv(std::ostream& out, const TransferPlan& plan) {
  out << "node,generator,lambda\n";
  for (std::size_t v = 0; v < plan.lambda.size(); ++v) {
    for (Eigen::Index g = 0; g < plan.lambda[v].size(); ++g) {
      if (plan.lambda[v](g) != 0.0) out << v << ',' << g << ',' << format_double(plan.lambda[v](g)) << '\n';
    }
  }
}

std::string upper_image_svg(const UpperImage& image) {
  for (const auto& q : image.inner) {
    if (q.size() != 2) throw Error(ErrorCode::DimensionMismatch, "upper image drawing needs two assets");
  }
  constexpr double size = 480.0, pad = 40.0;
  double lo0 = 0.0, hi0 = 1.0, lo1 = 0.0, hi1 = 1.0;
  if (!image.inner.empty()) {
    lo0 = hi0 = image.inner.front()(0);
    lo1 = hi1 = image.inner.front()(1);
    for (const auto& q : image.inner) {
      lo0 = std::min(lo0, q(0));
      hi0 = std::max(hi0, q(0));
      lo1 = std::min(lo1, q(1));
      hi1 = std::max(hi1, q(1));
    }
  }
  const double span = std::max({hi0 - lo0, hi1 - lo1, 1e-6});
  lo0 -= 0.15 * span;
  lo1 -= 0.15 * span;
  hi0 = lo0 + 1.3 * span;
  hi1 = lo1 + 1.3 * span;
  auto sx = [&](double v) { return pad + (v - lo0) / (hi0 - lo0) * (size - 2 * pad); };
  auto sy = [&](double v) { return size - pad - (v - lo1) / (hi1 - lo1) * (size - 2 * pad); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << size - 2 * pad << "\" height=\""
      << size - 2 * pad << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (const auto& h : image.outer) {
    if (!h.support.is_finite()) continue;
    const double s = h.support.value();
    // Clip z1 q1 + z2 q2 = s to the plotting box.
    std::vector<std::pair<double, double>> ends;
    if (h.normal(1) != 0.0) {
      for (double a : {lo0, hi0}) {
        const double b = (s - h.normal(0) * a) / h.normal(1);
        if (b >= lo1 && b <= hi1) ends.emplace_back(a, b);
      }
    }
    if (h.normal(0) != 0.0) {
      for (double b : {lo1, hi1}) {
        const double a = (s - h.normal(1) * b) / h.normal(0);
        if (a >= lo0 && a <= hi0) ends.emplace_back(a, b);
      }
    }
    if (ends.size() < 2) continue;
    svg << "<line x1=\"" << px(sx(ends[0].first)) << "\" y1=\"" << px(sy(ends[0].second)) << "\" x2=\""
        << px(sx(ends[1].first)) << "\" y2=\"" << px(sy(ends[1].second))
        << "\" stroke=\"#1f77b4\" stroke-width=\"0.8\"/>\n";
  }
  auto pts = image.inner;
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a(0) < b(0); });
  if (!pts.empty()) {
    svg << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.2\" points=\"";
    for (const auto& q : pts) svg << px(sx(q(0))) << ',' << px(sy(q(1))) << ' ';
    svg << "\"/>\n";
  }
  for (const auto& q : pts) {
    svg << "<circle cx=\"" << px(sx(q(0))) << "\" cy=\"" << px(sy(q(1))) << "\" r=\"2.5\" fill=\"#d62728\"/>\n";
  }
  svg << "<text x=\"" << pad << "\" y=\"" << pad - 12 << "\" font-size=\"12\" font-family=\"sans-serif\">"
      << "upper image: outer halfspaces (blue), attained points (red)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::string cones_svg(const MarketModel& market) {
  if (market.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "cone drawing needs two assets");
  constexpr double cell = 120.0, r = 48.0;
  constexpr int columns = 9;
  const auto nodes = static_cast<int>(market.tree().size());
  const int rows = (nodes + columns - 1) / columns;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << columns * cell << "\" height=\"" << rows * cell
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int v = 0; v < nodes; ++v) {
    const double cx = (v % columns + 0.5) * cell, cy = (v / columns + 0.5) * cell;
    svg << "<g>\n<line x1=\"" << px(cx - r) << "\" y1=\"" << px(cy) << "\" x2=\"" << px(cx + r) << "\" y2=\""
        << px(cy) << "\" stroke=\"#ccc\"/>\n<line x1=\"" << px(cx) << "\" y1=\"" << px(cy - r) << "\" x2=\""
        << px(cx) << "\" y2=\"" << px(cy + r) << "\" stroke=\"#ccc\"/>\n";
    auto ray = [&](const Eigen::VectorXd& g, const char* colour) {
      svg << "<line x1=\"" << px(cx) << "\" y1=\"" << px(cy) << "\" x2=\"" << px(cx + r * g(0)) << "\" y2=\""
          << px(cy - r * g(1)) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    };
    for (const auto& g : market.K(static_cast<NodeId>(v)).generators()) ray(g, "#1f77b4");
    for (const auto& g : market.Kplus(static_cast<NodeId>(v)).generators()) ray(g, "#d62728");
    svg << "<text x=\"" << px(cx - r) << "\" y=\"" << px(cy - r - 4) << "\" font-size=\"10\" font-family=\"sans-serif\">node "
        << v << "</text>\n</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace conic
