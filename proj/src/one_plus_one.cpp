#include <cmath>
#include <limits>

#include "bbox/dfo.hpp"
#include "bbox/error.hpp"

namespace bbox {

const double OnePlusOne::kShrink = std::pow(2.0, -0.25);

void Optimizer::seed_incumbent(const Vector&, double) {}

OnePlusOne::OnePlusOne(Vector mean, Sampler sampler, double sigma)
    : mean_(std::move(mean)),
      sigma_(sigma),
      sampler_(sampler),
      best_value_(std::numeric_limits<double>::infinity()) {
    if (mean_.size() < 1) throw InvalidInput("dimension must be at least 1");
    if (!(sigma_ > 0.0)) throw InvalidInput("sigma must be positive");
    if (!mean_.allFinite()) throw InvalidInput("initial mean must be finite");
}

Vector OnePlusOne::sample(Rng& rng) const {
    Vector x(mean_.size());
    if (sampler_ == Sampler::Gaussian) {
        std::normal_distribution<double> dist(0.0, 1.0);
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = dist(rng);
    } else {
        std::cauchy_distribution<double> dist(0.0, 1.0);
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = dist(rng);
    }
    return mean_ + sigma_ * x;
}

void OnePlusOne::update(const Vector& candidate, double value) {
    if (candidate.size() != mean_.size()) throw InvalidInput("candidate dimension mismatch");
    if (std::isfinite(value) && value <= best_value_) {
        mean_ = candidate;
        best_value_ = value;
        sigma_ *= kGrowth;
    } else {
        sigma_ *= kShrink;
    }
}

std::vector<Vector> OnePlusOne::ask(Rng& rng) { return {sample(rng)}; }

void OnePlusOne::tell(std::span<const Vector> candidates, std::span<const double> values) {
    if (candidates.size() != values.size()) throw InvalidInput("one value per candidate required");
    for (std::size_t i = 0; i < candidates.size(); ++i) update(candidates[i], values[i]);
}

void OnePlusOne::seed_incumbent(const Vector& point, double value) {
    if (point.size() != mean_.size()) throw InvalidInput("incumbent dimension mismatch");
    mean_ = point;
    best_value_ = std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
}

}  // namespace bbox
