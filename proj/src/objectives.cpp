#include "bbox/objectives.hpp"

#include <cmath>
#include <limits>

#include "bbox/error.hpp"

namespace bbox {

AttackSpec::AttackSpec(ImageTensor image, std::size_t true_label, double epsilon, LossKind loss,
                       TileGrid grid, std::optional<std::size_t> target)
    : image_(std::move(image)),
      true_label_(true_label),
      target_(target),
      epsilon_(epsilon),
      loss_(loss),
      grid_(std::move(grid)) {
    if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) throw InvalidInput("epsilon must be positive");
    if (target_ && *target_ == true_label_) throw InvalidInput("target label must differ from the true label");
    if (grid_.image_shape() != image_.shape()) throw ShapeError("tile grid does not match the image shape");
}

DiscreteParams DiscreteParams::from_search_point(std::span<const double> point, CornerParameterization form) {
    DiscreteParams params;
    if (form == CornerParameterization::SingleVariable) {
        params.a.assign(point.begin(), point.end());
        params.b.assign(point.size(), 0.0);
        return params;
    }
    if (point.size() % 2 != 0) throw ShapeError("two-variable corner point must have even length");
    const auto half = point.size() / 2;
    params.a.assign(point.begin(), point.begin() + static_cast<std::ptrdiff_t>(half));
    params.b.assign(point.begin() + static_cast<std::ptrdiff_t>(half), point.end());
    return params;
}

double corner_probability(double a, double b) {
    const double diff = a - b;
    if (std::isnan(diff)) return 0.5;
    // logistic(diff), evaluated on the side that cannot overflow
    if (diff >= 0.0) return 1.0 / (1.0 + std::exp(-diff));
    const double e = std::exp(diff);
    return e / (1.0 + e);
}

std::vector<double> sample_corner(const DiscreteParams& params, Rng& rng) {
    if (params.a.size() != params.b.size()) throw ShapeError("a and b must have equal lengths");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> tau(params.a.size());
    for (std::size_t i = 0; i < tau.size(); ++i)
        tau[i] = unit(rng) < corner_probability(params.a[i], params.b[i]) ? 1.0 : -1.0;
    return tau;
}

QueryCounter::QueryCounter(std::size_t limit) : limit_(limit) {
    if (limit_ < 1) throw InvalidInput("query limit must be at least 1");
}

void QueryCounter::consume() {
    if (used_ >= limit_) throw BudgetExhausted("query budget of " + std::to_string(limit_) + " exhausted");
    ++used_;
}

double attack_loss(const AttackSpec& spec, const LogitsVector& logits) {
    const auto label = spec.target().value_or(spec.true_label());
    return loss(spec.loss(), logits, label);
}

double attack_score(const AttackSpec& spec, const LogitsVector& logits) {
    const double l = attack_loss(spec, logits);
    return spec.mode() == AttackMode::Targeted ? l : -l;
}

bool is_success(const AttackSpec& spec, const LogitsVector& logits) {
    const auto predicted = argmax(logits.values());
    if (spec.target()) return predicted == *spec.target();
    return predicted != spec.true_label();
}

std::vector<double> continuous_delta(const AttackSpec& spec, std::span<const double> tau) {
    if (tau.size() != spec.grid().search_dimension()) throw ShapeError("search point length mismatch");
    std::vector<double> values(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const double t = std::isnan(tau[i]) ? 0.0 : tau[i];
        values[i] = spec.epsilon() * std::tanh(t);
    }
    return spec.grid().expand(values);
}

std::vector<double> corner_delta(const AttackSpec& spec, std::span<const double> corner) {
    if (corner.size() != spec.grid().search_dimension()) throw ShapeError("corner length mismatch");
    std::vector<double> values(corner.size());
    for (std::size_t i = 0; i < corner.size(); ++i) values[i] = corner[i] > 0.0 ? spec.epsilon() : -spec.epsilon();
    return spec.grid().expand(values);
}

namespace {

Evaluation query(const AttackSpec& spec, std::span<const double> delta, const ModelOracle& model,
                 QueryCounter& counter) {
    const auto perturbed = apply_perturbation(spec.image(), delta);
    counter.consume();
    Evaluation e;
    e.logits = model.logits(perturbed);
    e.loss = attack_loss(spec, e.logits);
    e.score = spec.mode() == AttackMode::Targeted ? e.loss : -e.loss;
    e.success = is_success(spec, e.logits);
    return e;
}

}  // namespace

Evaluation continuous_eval(const AttackSpec& spec, std::span<const double> tau, const ModelOracle& model,
                           QueryCounter& counter) {
    return query(spec, continuous_delta(spec, tau), model, counter);
}

Evaluation discrete_eval(const AttackSpec& spec, const DiscreteParams& params, const ModelOracle& model,
                         QueryCounter& counter, Rng& rng) {
    auto corner = sample_corner(params, rng);
    auto e = query(spec, corner_delta(spec, corner), model, counter);
    e.corner = std::move(corner);
    return e;
}

AttackObjective::AttackObjective(const AttackSpec& spec, const ModelOracle& model, QueryCounter& counter,
                                 ProblemForm form, Rng& rng, CornerParameterization corners)
    : spec_(spec),
      model_(model),
      counter_(counter),
      form_(form),
      rng_(rng),
      corners_(corners),
      best_score_(std::numeric_limits<double>::infinity()) {}

std::size_t AttackObjective::search_dimension() const noexcept {
    const auto d = spec_.grid().search_dimension();
    if (form_ == ProblemForm::Discrete && corners_ == CornerParameterization::TwoVariable) return 2 * d;
    return d;
}

Vector AttackObjective::warm_start(std::span<const double> signs, double scale) const {
    const auto d = spec_.grid().search_dimension();
    if (signs.size() != d) throw ShapeError("warm-start pattern length mismatch");
    Vector point = Vector::Zero(static_cast<Eigen::Index>(search_dimension()));
    for (std::size_t i = 0; i < d; ++i) {
        const double s = signs[i] > 0.0 ? 1.0 : -1.0;
        const auto k = static_cast<Eigen::Index>(i);
        if (form_ == ProblemForm::Discrete && corners_ == CornerParameterization::TwoVariable) {
            // a - b = scale * s
            point[k] = 0.5 * scale * s;
            point[k + static_cast<Eigen::Index>(d)] = -0.5 * scale * s;
        } else {
            point[k] = scale * s;
        }
    }
    return point;
}

double AttackObjective::operator()(const Vector& point) {
    const std::span<const double> values(point.data(), static_cast<std::size_t>(point.size()));
    Evaluation e = form_ == ProblemForm::Continuous
                       ? continuous_eval(spec_, values, model_, counter_)
                       : discrete_eval(spec_, DiscreteParams::from_search_point(values, corners_), model_,
                                       counter_, rng_);
    if (e.success) succeeded_ = true;
    if (e.score < best_score_) {
        best_score_ = e.score;
        best_loss_ = e.loss;
    }
    const double score = e.score;
    last_ = std::move(e);
    return score;
}

}  // namespace bbox
