#include "bbox/benchmarks.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bbox/error.hpp"

namespace bbox::bench {

double sphere(const Vector& x, const Vector& optimum) { return (x - optimum).squaredNorm(); }

double ellipsoid(const Vector& x, const Vector& optimum, double condition) {
    const auto d = x.size();
    double total = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double scale = d > 1 ? std::pow(condition, static_cast<double>(i) / static_cast<double>(d - 1)) : 1.0;
        const double z = x[i] - optimum[i];
        total += scale * z * z;
    }
    return total;
}

double rastrigin(const Vector& x, const Vector& optimum) {
    double total = 10.0 * static_cast<double>(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double z = x[i] - optimum[i];
        total += z * z - 10.0 * std::cos(2.0 * std::numbers::pi * z);
    }
    return total;
}

Objective by_name(std::string_view name, Vector optimum) {
    if (name == "sphere") return [o = std::move(optimum)](const Vector& x) { return sphere(x, o); };
    if (name == "ellipsoid") return [o = std::move(optimum)](const Vector& x) { return ellipsoid(x, o); };
    if (name == "rastrigin") return [o = std::move(optimum)](const Vector& x) { return rastrigin(x, o); };
    throw InvalidInput("unknown benchmark function '" + std::string(name) + "'");
}

}  // namespace bbox::bench
