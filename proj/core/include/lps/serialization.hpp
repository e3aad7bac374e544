#pragma once

#include <json.hpp>

#include "lps/distribution.hpp"
#include "lps/measure.hpp"

namespace lps {

/// {atoms: [[loc, w], ...], pieces: [[a, b, [c0,c1,c2,c3]], ...],
///  exp_tail: [start, rate, scale] | [[...], ...] | null}
nlohmann::json measure_to_json(const Measure& m);
Measure measure_from_json(const nlohmann::json& j);

/// {family: "exp"|"hyperexp"|"det"|"uniform"|"lognormal", params: {...}, p: 0.5}
nlohmann::json distribution_to_json(const DistributionSpec& s);
DistributionSpec distribution_from_json(const nlohmann::json& j);

} // namespace lps
