#pragma once

#include "conic/duality.hpp"
#include "conic/market.hpp"
#include "conic/utility.hpp"

#include <ostream>
#include <string>

namespace conic {

/// Shortest text that reads back to the same double ("%.17g"); infinities as inf/-inf.
std::string format_double(double x);
std::string format_extended(const ExtendedReal& x);

/// Columns: z_1..z_d, primal_value, dual_value, gap, iters_p, iters_d, status.
void write_scalarizations_csv(std::ostream& out, const DualityReport& report);
/// Columns: z_1..z_d, support.
void write_outer_csv(std::ostream& out, const UpperImage& image);
/// Columns: q_1..q_d.
void write_inner_csv(std::ostream& out, const UpperImage& image);
/// key,value rows.
void write_summary_csv(std::ostream& out, const DualityReport& report);

/// Columns: node, time, mass, Z_1..Z_d.
void write_certificate_csv(std::ostream& out, const MarketModel& market, const PricingProcess& prices);
/// Columns: leaf, x_1..x_d.
void write_witness_csv(std::ostream& out, const TerminalPosition& witness);
/// Columns: node, generator, lambda.
void write_plan_csv(std::ostream& out, const TransferPlan& plan);

/// Two-asset drawings. Both throw DimensionMismatch for d != 2.
std::string upper_image_svg(const UpperImage& image);
std::string cones_svg(const MarketModel& market);

}  // namespace conic
