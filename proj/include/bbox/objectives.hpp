#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bbox/dfo.hpp"
#include "bbox/models.hpp"
#include "bbox/rng.hpp"
#include "bbox/tensor.hpp"
#include "bbox/tiling.hpp"

namespace bbox {

enum class AttackMode { Untargeted, Targeted };

/// Which search space the optimizer works in.
enum class ProblemForm {
    Continuous,  ///< delta = expand(eps * tanh(tau))
    Discrete,    ///< delta = expand(eps * tau), tau a random corner drawn from (a, b)
};

/// How a discrete-form search point maps to corner probabilities.
enum class CornerParameterization {
    TwoVariable,     ///< point = [a..., b...], P(+1) = e^a / (e^a + e^b)
    SingleVariable,  ///< point = [a...], P(+1) = 1 / (1 + e^-a)
};

/// What is being attacked: one image, its label, the l-infinity budget, the
/// loss and the tiling. Immutable.
class AttackSpec {
public:
    /// Throws InvalidInput unless epsilon > 0, and target != true_label when given.
    AttackSpec(ImageTensor image, std::size_t true_label, double epsilon, LossKind loss, TileGrid grid,
               std::optional<std::size_t> target = std::nullopt);

    const ImageTensor& image() const noexcept { return image_; }
    std::size_t true_label() const noexcept { return true_label_; }
    std::optional<std::size_t> target() const noexcept { return target_; }
    AttackMode mode() const noexcept { return target_ ? AttackMode::Targeted : AttackMode::Untargeted; }
    double epsilon() const noexcept { return epsilon_; }
    LossKind loss() const noexcept { return loss_; }
    const TileGrid& grid() const noexcept { return grid_; }

private:
    ImageTensor image_;
    std::size_t true_label_;
    std::optional<std::size_t> target_;
    double epsilon_;
    LossKind loss_;
    TileGrid grid_;
};

/// Corner logits for the discrete problem, one (a_i, b_i) pair per tile value.
struct DiscreteParams {
    std::vector<double> a;
    std::vector<double> b;

    /// Splits an optimizer point according to the parameterization; the
    /// single-variable form uses b = 0.
    static DiscreteParams from_search_point(std::span<const double> point, CornerParameterization form);
};

/// e^a / (e^a + e^b), computed without overflow.
double corner_probability(double a, double b);

/// tau_i = +1 with probability corner_probability(a_i, b_i), else -1.
std::vector<double> sample_corner(const DiscreteParams& params, Rng& rng);

/// Queries charged to one attack. consume() throws BudgetExhausted once the
/// limit is reached, so used() never exceeds limit().
class QueryCounter {
public:
    explicit QueryCounter(std::size_t limit);

    void consume();
    std::size_t used() const noexcept { return used_; }
    std::size_t limit() const noexcept { return limit_; }
    std::size_t remaining() const noexcept { return limit_ - used_; }

private:
    std::size_t used_ = 0;
    std::size_t limit_;
};

/// L(f, y) untargeted, L(f, y_t) targeted.
double attack_loss(const AttackSpec& spec, const LogitsVector& logits);
/// Value the optimizer minimizes: -L(f, y) untargeted, +L(f, y_t) targeted.
double attack_score(const AttackSpec& spec, const LogitsVector& logits);
/// Untargeted: argmax != y. Targeted: argmax == y_t. Ties go to the lowest index.
bool is_success(const AttackSpec& spec, const LogitsVector& logits);

/// expand(eps * tanh(tau)); never leaves the l-infinity ball.
std::vector<double> continuous_delta(const AttackSpec& spec, std::span<const double> tau);
/// expand(eps * corner) for a +/-1 corner.
std::vector<double> corner_delta(const AttackSpec& spec, std::span<const double> corner);

struct Evaluation {
    double score = 0.0;
    double loss = 0.0;
    bool success = false;
    LogitsVector logits;
    std::vector<double> corner;  ///< the sampled +/-1 corner (discrete form only)
};

/// One query at x + expand(eps * tanh(tau)).
Evaluation continuous_eval(const AttackSpec& spec, std::span<const double> tau, const ModelOracle& model,
                           QueryCounter& counter);

/// Samples one corner from `params` and queries x + expand(eps * corner).
Evaluation discrete_eval(const AttackSpec& spec, const DiscreteParams& params, const ModelOracle& model,
                         QueryCounter& counter, Rng& rng);

/// Scalar objective over optimizer points for one attack, with success tracking.
/// The objective holds references; spec, model, counter and rng must outlive it.
class AttackObjective {
public:
    AttackObjective(const AttackSpec& spec, const ModelOracle& model, QueryCounter& counter, ProblemForm form,
                    Rng& rng, CornerParameterization corners = CornerParameterization::TwoVariable);

    double operator()(const Vector& point);

    std::size_t search_dimension() const noexcept;
    /// Search point whose queried perturbation is (close to) eps * signs, with
    /// `signs` a +/-1 tile pattern. `scale` sets the distance from the origin.
    Vector warm_start(std::span<const double> signs, double scale) const;

    bool succeeded() const noexcept { return succeeded_; }
    /// Attack loss at the best-scoring query so far.
    double best_loss() const noexcept { return best_loss_; }
    double best_score() const noexcept { return best_score_; }
    const std::optional<Evaluation>& last() const noexcept { return last_; }

private:
    const AttackSpec& spec_;
    const ModelOracle& model_;
    QueryCounter& counter_;
    ProblemForm form_;
    Rng& rng_;
    CornerParameterization corners_;
    bool succeeded_ = false;
    double best_loss_ = 0.0;
    double best_score_;
    std::optional<Evaluation> last_;
};

}  // namespace bbox
