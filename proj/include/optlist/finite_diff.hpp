#pragma once

#include <functional>
#include <span>
#include <vector>

namespace optlist {

using ScalarFn = std::function<double(std::span<const double>)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / (2h) per coordinate.
// Throws OracleError naming the coordinate if f is non-finite at a probe.
std::vector<double> finite_diff_gradient(const ScalarFn& f,
                                         std::span<const double> x, double h);

// Per-coordinate step sizes; used by the gradient-agreement oracle with
// h_i = 1e-5 * (1 + |x_i|).
std::vector<double> finite_diff_gradient(const ScalarFn& f,
                                         std::span<const double> x,
                                         std::span<const double> h);

}  // namespace optlist
