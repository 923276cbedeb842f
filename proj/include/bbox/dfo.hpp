#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bbox/rng.hpp"

namespace bbox {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class OptimizerKind {
    OnePlusOneCauchy,
    OnePlusOneGaussian,
    CmaFull,
    CmaDiagonal,
    RandomSearch,
    DifferentialEvolution,
};

/// Accepts the CLI names: opo-cauchy, opo-gauss, cma, cma-diag, random, de.
OptimizerKind parse_optimizer_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind);

/// Ask/tell interface shared by every optimizer. All optimizers minimize, and
/// treat non-finite values as +infinity.
class Optimizer {
public:
    virtual ~Optimizer() = default;

    virtual std::size_t dimension() const = 0;
    /// Point the search distribution is centred on.
    virtual const Vector& center() const = 0;
    /// Next batch of candidates to evaluate.
    virtual std::vector<Vector> ask(Rng& rng) = 0;
    /// Values for the batch returned by the last ask(), in the same order.
    virtual void tell(std::span<const Vector> candidates, std::span<const double> values) = 0;
    /// Informs the optimizer that `point` (its initial mean) was evaluated to `value`
    /// before the first ask. Default: ignored.
    virtual void seed_incumbent(const Vector& point, double value);
    /// Current global search scale, reported in traces.
    virtual double step_size() const = 0;
};

enum class Sampler { Gaussian, Cauchy };

/// (1+1)-ES with the one-fifth rule: sigma doubles when the candidate is at
/// least as good as the incumbent and shrinks by 2^(-1/4) otherwise.
class OnePlusOne final : public Optimizer {
public:
    OnePlusOne(Vector mean, Sampler sampler, double sigma = 1.0);

    /// mean + sigma * X, X componentwise i.i.d. standard Gaussian or Cauchy.
    Vector sample(Rng& rng) const;
    /// Acceptance on `value <= best_value`. The incumbent is never re-evaluated.
    void update(const Vector& candidate, double value);

    std::size_t dimension() const override { return static_cast<std::size_t>(mean_.size()); }
    const Vector& center() const override { return mean_; }
    std::vector<Vector> ask(Rng& rng) override;
    void tell(std::span<const Vector> candidates, std::span<const double> values) override;
    void seed_incumbent(const Vector& point, double value) override;
    double step_size() const override { return sigma_; }

    const Vector& mean() const noexcept { return mean_; }
    double sigma() const noexcept { return sigma_; }
    double best_value() const noexcept { return best_value_; }
    Sampler sampler() const noexcept { return sampler_; }

    static constexpr double kGrowth = 2.0;
    static const double kShrink;  ///< 2^(-1/4)

private:
    Vector mean_;
    double sigma_;
    Sampler sampler_;
    double best_value_;
};

enum class Covariance { Full, Diagonal };

/// Strategy constants of CMA-ES. defaults() gives the standard settings for a
/// dimension; in diagonal mode the covariance learning rates are scaled up by
/// (d + 1.5) / 3 as in separable CMA-ES.
struct CmaParameters {
    std::size_t lambda = 0;
    std::size_t mu = 0;
    Vector weights;  ///< strictly decreasing, positive, summing to 1
    double mu_eff = 0.0;
    double c_c = 0.0;       ///< covariance path cumulation
    double c_sigma = 0.0;   ///< step-size path cumulation
    double c_1 = 0.0;       ///< rank-one learning rate
    double c_mu = 0.0;      ///< rank-mu learning rate
    double damping = 0.0;
    double chi_n = 0.0;     ///< E||N(0, I)||

    static CmaParameters defaults(std::size_t dimension, Covariance mode);
};

class Cma final : public Optimizer {
public:
    Cma(Vector mean, Covariance mode, double sigma = 1.0);
    Cma(Vector mean, Covariance mode, double sigma, CmaParameters params);

    std::size_t dimension() const override { return static_cast<std::size_t>(mean_.size()); }
    const Vector& center() const override { return mean_; }
    /// lambda samples of mean + sigma * N(0, C).
    std::vector<Vector> ask(Rng& rng) override;
    /// Ranks candidates (stable on ties), recombines the mean from the mu best,
    /// then updates both evolution paths, C and sigma. Throws InvalidInput when
    /// the value count differs from the candidate count or from lambda.
    void tell(std::span<const Vector> candidates, std::span<const double> values) override;
    double step_size() const override { return sigma_; }

    Covariance mode() const noexcept { return mode_; }
    const CmaParameters& parameters() const noexcept { return params_; }
    const Vector& mean() const noexcept { return mean_; }
    double sigma() const noexcept { return sigma_; }
    /// Full covariance; a diagonal matrix in diagonal mode.
    Matrix covariance() const;
    const Vector& path_c() const noexcept { return path_c_; }
    const Vector& path_sigma() const noexcept { return path_sigma_; }
    std::size_t generation() const noexcept { return generation_; }
    /// How many times a non-positive eigenvalue (or diagonal entry) was floored.
    std::size_t repairs() const noexcept { return repairs_; }

    /// Replaces C; must be d x d (full mode) or have a diagonal (diagonal mode
    /// keeps only the diagonal).
    void set_covariance(const Matrix& c);

private:
    void decompose();

    Covariance mode_;
    CmaParameters params_;
    Vector mean_;
    double sigma_;
    Matrix cov_;       // full mode
    Vector diag_;      // diagonal mode
    Matrix basis_;     // eigenvectors of C
    Vector scales_;    // sqrt of eigenvalues (or of the diagonal)
    Vector path_c_;
    Vector path_sigma_;
    std::size_t generation_ = 0;
    std::size_t decomposed_at_ = 0;
    bool stale_ = true;
    bool force_decompose_ = true;
    std::size_t repairs_ = 0;
};

/// Keeps the best of i.i.d. center + sigma * Cauchy samples.
class RandomSearch final : public Optimizer {
public:
    explicit RandomSearch(Vector center, double sigma = 1.0);

    std::size_t dimension() const override { return static_cast<std::size_t>(center_.size()); }
    const Vector& center() const override { return center_; }
    std::vector<Vector> ask(Rng& rng) override;
    void tell(std::span<const Vector> candidates, std::span<const double> values) override;
    double step_size() const override { return sigma_; }

    double best_value() const noexcept { return best_value_; }
    const Vector& best_point() const noexcept { return best_point_; }

private:
    Vector center_;
    double sigma_;
    Vector best_point_;
    double best_value_;
};

/// DE/rand/1/bin. The initial population is the center plus N(0, sigma^2 I) draws.
class DifferentialEvolution final : public Optimizer {
public:
    struct Settings {
        std::size_t population = 30;
        double differential_weight = 0.8;
        double crossover_rate = 0.5;
    };

    DifferentialEvolution(Vector center, double sigma = 1.0);
    DifferentialEvolution(Vector center, double sigma, Settings settings);

    std::size_t dimension() const override { return static_cast<std::size_t>(center_.size()); }
    const Vector& center() const override { return center_; }
    std::vector<Vector> ask(Rng& rng) override;
    void tell(std::span<const Vector> candidates, std::span<const double> values) override;
    void seed_incumbent(const Vector& point, double value) override;
    /// RMS distance of the population to its mean.
    double step_size() const override;

    const std::vector<Vector>& population() const noexcept { return population_; }
    const std::vector<double>& fitness() const noexcept { return fitness_; }

private:
    Vector center_;
    double sigma_;
    Settings settings_;
    std::vector<Vector> population_;
    std::vector<double> fitness_;
    bool initialized_ = false;
};

/// One optimizer of the given kind centred on `initial_mean`, with sigma = 1.
std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, Vector initial_mean);

using Objective = std::function<double(const Vector&)>;
/// Called after every evaluation; returning true ends the run.
using StopPredicate = std::function<bool(const Vector&, double)>;

struct MinimizeOptions {
    std::size_t budget = 1000;
    /// Evaluate the optimizer's initial mean before the first ask (warm start).
    bool evaluate_initial_mean = false;
    StopPredicate stop;
    /// When set, receives `eval,best,sigma` CSV rows, one per completed generation.
    std::ostream* trace = nullptr;
};

struct MinimizeResult {
    Vector best_point;
    double best_value = 0.0;
    std::size_t evaluations = 0;
    bool stopped_early = false;
    /// The objective threw; `error` holds the exception and the other fields
    /// describe the run up to that point.
    bool aborted = false;
    std::exception_ptr error;
    std::string error_message;
};

/// Runs ask/evaluate/tell until `budget` evaluations, the stop predicate, or an
/// objective exception. Throws InvalidInput when budget is 0.
MinimizeResult minimize(const Objective& objective, Optimizer& optimizer, const MinimizeOptions& options,
                        Rng& rng);

/// Convenience overload starting from the zero vector.
MinimizeResult minimize(const Objective& objective, OptimizerKind kind, std::size_t dimension,
                        const MinimizeOptions& options, Rng& rng);

}  // namespace bbox
