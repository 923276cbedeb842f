#pragma once

#include <string_view>

#include "bbox/dfo.hpp"

namespace bbox::bench {

/// sum (x_i - o_i)^2
double sphere(const Vector& x, const Vector& optimum);
/// sum condition^(i / (d-1)) (x_i - o_i)^2, axis aligned.
double ellipsoid(const Vector& x, const Vector& optimum, double condition = 100.0);
/// 10 d + sum (z_i^2 - 10 cos(2 pi z_i)), z = x - o
double rastrigin(const Vector& x, const Vector& optimum);

/// "sphere", "ellipsoid" or "rastrigin", with the optimum at `optimum`.
Objective by_name(std::string_view name, Vector optimum);

}  // namespace bbox::bench
