#include "optlist/finite_diff.hpp"

#include <cmath>
#include <string>

#include "optlist/errors.hpp"

namespace optlist {

namespace {

std::vector<double> central_differences(const ScalarFn& f,
                                        std::span<const double> x,
                                        const std::vector<double>& h) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (h[i] <= 0.0) throw UsageError("finite_diff_gradient: h must be > 0");
    const double xi = probe[i];
    probe[i] = xi + h[i];
    const double fp = f(probe);
    probe[i] = xi - h[i];
    const double fm = f(probe);
    probe[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw OracleError("finite_diff_gradient: non-finite f at probe for "
                        "coordinate " +
                        std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h[i]);
  }
  return grad;
}

}  // namespace

std::vector<double> finite_diff_gradient(const ScalarFn& f,
                                         std::span<const double> x, double h) {
  return central_differences(f, x, std::vector<double>(x.size(), h));
}

std::vector<double> finite_diff_gradient(const ScalarFn& f,
                                         std::span<const double> x,
                                         std::span<const double> h) {
  if (h.size() != x.size()) {
    throw ShapeError("finite_diff_gradient: h length != x length");
  }
  return central_differences(f, x, std::vector<double>(h.begin(), h.end()));
}

}  // namespace optlist
