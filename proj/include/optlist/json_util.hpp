#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace optlist {

using Json = nlohmann::json;

// Decimal with 17 significant digits; round-trips any finite double exactly.
std::string format_double17(double v);

// Non-finite losses serialize as the string "NaN" (JSON has no NaN literal).
std::string format_loss(double v);
double parse_loss(const Json& j);

// Append v formatted per format_loss, comma-separated, into a JSON array body.
std::string loss_array_json(const std::vector<double>& values);

std::string hash_hex(std::uint64_t h);

}  // namespace optlist
