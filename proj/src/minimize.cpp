#include <cmath>
#include <limits>
#include <ostream>

#include "bbox/dfo.hpp"
#include "bbox/error.hpp"

namespace bbox {

namespace {

class Run {
public:
    Run(const Objective& objective, const MinimizeOptions& options, std::size_t dimension)
        : objective_(objective), options_(options) {
        result_.best_point = Vector::Zero(static_cast<Eigen::Index>(dimension));
        result_.best_value = std::numeric_limits<double>::infinity();
    }

    // Returns false when the run must end (stop predicate or objective failure).
    bool evaluate(const Vector& x, double& value) {
        ++result_.evaluations;
        try {
            value = objective_(x);
        } catch (const std::exception& e) {
            result_.aborted = true;
            result_.error = std::current_exception();
            result_.error_message = e.what();
            return false;
        }
        if (!std::isfinite(value)) value = std::numeric_limits<double>::infinity();
        if (value < result_.best_value || result_.evaluations == 1) {
            result_.best_value = value;
            result_.best_point = x;
        }
        if (options_.stop && options_.stop(x, value)) {
            result_.stopped_early = true;
            return false;
        }
        return true;
    }

    bool budget_left() const { return result_.evaluations < options_.budget; }

    void trace(double sigma) {
        if (!options_.trace) return;
        *options_.trace << result_.evaluations << ',' << result_.best_value << ',' << sigma << '\n';
    }

    MinimizeResult take() { return std::move(result_); }

private:
    const Objective& objective_;
    const MinimizeOptions& options_;
    MinimizeResult result_;
};

}  // namespace

MinimizeResult minimize(const Objective& objective, Optimizer& optimizer, const MinimizeOptions& options,
                        Rng& rng) {
    if (options.budget < 1) throw InvalidInput("budget must be at least 1");
    Run run(objective, options, optimizer.dimension());
    if (options.trace) {
        options.trace->precision(17);
        *options.trace << "eval,best,sigma\n";
    }

    if (options.evaluate_initial_mean) {
        const Vector start = optimizer.center();
        double value = 0.0;
        if (!run.evaluate(start, value)) return run.take();
        optimizer.seed_incumbent(start, value);
        run.trace(optimizer.step_size());
    }

    while (run.budget_left()) {
        const auto candidates = optimizer.ask(rng);
        std::vector<double> values;
        values.reserve(candidates.size());
        for (const auto& x : candidates) {
            if (!run.budget_left()) {
                run.trace(optimizer.step_size());
                return run.take();
            }
            double value = 0.0;
            if (!run.evaluate(x, value)) return run.take();
            values.push_back(value);
        }
        optimizer.tell(candidates, values);
        run.trace(optimizer.step_size());
    }
    return run.take();
}

MinimizeResult minimize(const Objective& objective, OptimizerKind kind, std::size_t dimension,
                        const MinimizeOptions& options, Rng& rng) {
    auto optimizer = make_optimizer(kind, Vector::Zero(static_cast<Eigen::Index>(dimension)));
    return minimize(objective, *optimizer, options, rng);
}

}  // namespace bbox
