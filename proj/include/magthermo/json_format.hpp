#pragma once

#include <complex>
#include <string>

#include <json.hpp>

namespace magthermo {

using json = nlohmann::json;

/// Serializes like json::dump(indent) but prints every floating-point number
/// with 17 significant digits, so repeated runs are byte-comparable and
/// values round-trip exactly.
std::string dump17(const json& j, int indent = 2);

json to_json(std::complex<double> z);
/// Accepts [re, im] or a bare real number.
std::complex<double> complex_from_json(const json& j);

} // namespace magthermo
