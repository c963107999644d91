#include "optlist/json_util.hpp"

#include <cmath>
#include <cstdio>

#include "optlist/errors.hpp"

namespace optlist {

std::string format_double17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_loss(double v) {
  if (!std::isfinite(v)) return "\"NaN\"";
  return format_double17(v);
}

double parse_loss(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "NaN") {
      return std::numeric_limits<double>::quiet_NaN();
    }
    throw ValidationError("loss entry: unexpected string " + j.dump());
  }
  return j.get<double>();
}

std::string loss_array_json(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += format_loss(values[i]);
  }
  out += "]";
  return out;
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace optlist
