#include <cmath>
#include <limits>
#include <string>

#include "bbox/dfo.hpp"
#include "bbox/error.hpp"

namespace bbox {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sanitize(double v) { return std::isfinite(v) ? v : kInf; }

}  // namespace

OptimizerKind parse_optimizer_kind(std::string_view name) {
    if (name == "opo-cauchy") return OptimizerKind::OnePlusOneCauchy;
    if (name == "opo-gauss") return OptimizerKind::OnePlusOneGaussian;
    if (name == "cma") return OptimizerKind::CmaFull;
    if (name == "cma-diag") return OptimizerKind::CmaDiagonal;
    if (name == "random") return OptimizerKind::RandomSearch;
    if (name == "de") return OptimizerKind::DifferentialEvolution;
    throw InvalidInput("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::OnePlusOneCauchy: return "opo-cauchy";
        case OptimizerKind::OnePlusOneGaussian: return "opo-gauss";
        case OptimizerKind::CmaFull: return "cma";
        case OptimizerKind::CmaDiagonal: return "cma-diag";
        case OptimizerKind::RandomSearch: return "random";
        case OptimizerKind::DifferentialEvolution: return "de";
    }
    return "unknown";
}

RandomSearch::RandomSearch(Vector center, double sigma)
    : center_(std::move(center)), sigma_(sigma), best_point_(center_), best_value_(kInf) {
    if (center_.size() < 1) throw InvalidInput("dimension must be at least 1");
    if (!(sigma_ > 0.0)) throw InvalidInput("sigma must be positive");
}

std::vector<Vector> RandomSearch::ask(Rng& rng) {
    std::cauchy_distribution<double> dist(0.0, 1.0);
    Vector x(center_.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = center_[i] + sigma_ * dist(rng);
    return {x};
}

void RandomSearch::tell(std::span<const Vector> candidates, std::span<const double> values) {
    if (candidates.size() != values.size()) throw InvalidInput("one value per candidate required");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double v = sanitize(values[i]);
        if (v < best_value_) {
            best_value_ = v;
            best_point_ = candidates[i];
        }
    }
}

DifferentialEvolution::DifferentialEvolution(Vector center, double sigma)
    : DifferentialEvolution(std::move(center), sigma, Settings{}) {}

DifferentialEvolution::DifferentialEvolution(Vector center, double sigma, Settings settings)
    : center_(std::move(center)), sigma_(sigma), settings_(settings) {
    if (center_.size() < 1) throw InvalidInput("dimension must be at least 1");
    if (!(sigma_ > 0.0)) throw InvalidInput("sigma must be positive");
    if (settings_.population < 4) throw InvalidInput("DE needs a population of at least 4");
    if (!(settings_.crossover_rate >= 0.0 && settings_.crossover_rate <= 1.0))
        throw InvalidInput("crossover rate must lie in [0,1]");
}

void DifferentialEvolution::seed_incumbent(const Vector& point, double value) {
    if (initialized_ || !population_.empty()) return;
    if (point.size() != center_.size()) throw InvalidInput("incumbent dimension mismatch");
    population_.push_back(point);
    fitness_.push_back(sanitize(value));
}

std::vector<Vector> DifferentialEvolution::ask(Rng& rng) {
    std::vector<Vector> batch;
    if (!initialized_) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t k = population_.size(); k < settings_.population; ++k) {
            Vector x(center_.size());
            for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = center_[i] + sigma_ * normal(rng);
            batch.push_back(std::move(x));
        }
        return batch;
    }

    const std::size_t n = population_.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<Eigen::Index> coordinate(0, center_.size() - 1);
    batch.reserve(n);
    for (std::size_t target = 0; target < n; ++target) {
        std::size_t r1, r2, r3;
        do { r1 = pick(rng); } while (r1 == target);
        do { r2 = pick(rng); } while (r2 == target || r2 == r1);
        do { r3 = pick(rng); } while (r3 == target || r3 == r1 || r3 == r2);
        const Vector mutant =
            population_[r1] + settings_.differential_weight * (population_[r2] - population_[r3]);
        Vector trial = population_[target];
        const Eigen::Index forced = coordinate(rng);
        for (Eigen::Index i = 0; i < trial.size(); ++i) {
            if (i == forced || unit(rng) < settings_.crossover_rate) trial[i] = mutant[i];
        }
        batch.push_back(std::move(trial));
    }
    return batch;
}

void DifferentialEvolution::tell(std::span<const Vector> candidates, std::span<const double> values) {
    if (candidates.size() != values.size()) throw InvalidInput("one value per candidate required");
    if (!initialized_) {
        if (population_.size() + candidates.size() != settings_.population)
            throw InvalidInput("initial DE batch has the wrong size");
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            population_.push_back(candidates[i]);
            fitness_.push_back(sanitize(values[i]));
        }
        initialized_ = true;
        return;
    }
    if (candidates.size() != population_.size())
        throw InvalidInput("DE tell expects one trial per population member");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double v = sanitize(values[i]);
        if (v <= fitness_[i]) {
            population_[i] = candidates[i];
            fitness_[i] = v;
        }
    }
}

double DifferentialEvolution::step_size() const {
    if (population_.empty()) return sigma_;
    Vector centroid = Vector::Zero(center_.size());
    for (const auto& x : population_) centroid += x;
    centroid /= static_cast<double>(population_.size());
    double total = 0.0;
    for (const auto& x : population_) total += (x - centroid).squaredNorm();
    return std::sqrt(total / static_cast<double>(population_.size()));
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, Vector initial_mean) {
    switch (kind) {
        case OptimizerKind::OnePlusOneCauchy:
            return std::make_unique<OnePlusOne>(std::move(initial_mean), Sampler::Cauchy);
        case OptimizerKind::OnePlusOneGaussian:
            return std::make_unique<OnePlusOne>(std::move(initial_mean), Sampler::Gaussian);
        case OptimizerKind::CmaFull:
            return std::make_unique<Cma>(std::move(initial_mean), Covariance::Full);
        case OptimizerKind::CmaDiagonal:
            return std::make_unique<Cma>(std::move(initial_mean), Covariance::Diagonal);
        case OptimizerKind::RandomSearch:
            return std::make_unique<RandomSearch>(std::move(initial_mean));
        case OptimizerKind::DifferentialEvolution:
            return std::make_unique<DifferentialEvolution>(std::move(initial_mean));
    }
    throw InvalidInput("unknown optimizer kind");
}

}  // namespace bbox
