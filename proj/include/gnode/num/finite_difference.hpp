#pragma once

#include <functional>
#include <span>
#include <vector>

namespace gnode::num {

// Central differences, one coordinate at a time. Test oracle; independent of
// the tape.
std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f, std::span<const double> x,
    double h = 1e-6);

// max_i |a_i - b_i| / max(max_i |b_i|, floor)
double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12);

}  // namespace gnode::num
