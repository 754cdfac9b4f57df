#pragma once

#include "tcba/harness.hpp"
#include "tcba/oracle.hpp"
#include "tcba/recursion.hpp"
#include "tcba/simulator.hpp"

#include <json.hpp>

#include <ostream>

namespace tcba {

using json = nlohmann::ordered_json;

json params_to_json(const Params& params);
// Strings are read as rationals ("1/3", "0.25"); numbers as their exact double value.
Params params_from_json(const json& j);

json histogram_to_json(const Histogram& h, const Params& params, const SpacingLaw& law, std::uint64_t seed);
json comparison_to_json(const RecursionComparison& c);
json report_to_json(const VerificationReport& r);
json rao_blackwell_to_json(const RaoBlackwell& rb);
json reversal_to_json(const ReversalReport& r);

std::string format_double(double x);

template <class S>
void write_table_csv(std::ostream& os, const RecursionTable<S>& table);

}  // namespace tcba
