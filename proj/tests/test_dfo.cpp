#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bbox/benchmarks.hpp"
#include "bbox/dfo.hpp"
#include "bbox/error.hpp"

using namespace bbox;

namespace {

const OptimizerKind kAllKinds[] = {
    OptimizerKind::OnePlusOneCauchy, OptimizerKind::OnePlusOneGaussian, OptimizerKind::CmaFull,
    OptimizerKind::CmaDiagonal,      OptimizerKind::RandomSearch,       OptimizerKind::DifferentialEvolution,
};

double sample_std(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(xs.size() - 1));
}

bool positive_definite(const Matrix& c) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

TEST_CASE("optimizer names round-trip") {
    for (auto kind : kAllKinds) CHECK(parse_optimizer_kind(to_string(kind)) == kind);
    CHECK_THROWS_AS(parse_optimizer_kind("nelder-mead"), InvalidInput);
}

TEST_CASE("(1+1)-ES step size follows the one-fifth rule") {
    OnePlusOne improve(Vector::Zero(3), Sampler::Gaussian, 1.0);
    improve.update(Vector::Ones(3), 1.0);
    CHECK(improve.sigma() == 2.0);
    CHECK(improve.mean() == Vector::Ones(3));

    OnePlusOne fail(Vector::Zero(3), Sampler::Gaussian, 1.0);
    fail.update(Vector::Zero(3), 5.0);  // accepted: first value beats +inf
    const double after_first = fail.sigma();
    fail.update(Vector::Ones(3), 6.0);
    CHECK(fail.sigma() == doctest::Approx(after_first * 0.840896).epsilon(1e-6));
    CHECK(fail.mean() == Vector::Zero(3));

    // one success and four failures leave sigma where it started
    OnePlusOne cycle(Vector::Zero(2), Sampler::Cauchy, 1.0);
    cycle.seed_incumbent(Vector::Zero(2), 1.0);
    cycle.update(Vector::Ones(2), 0.5);
    for (int i = 0; i < 4; ++i) cycle.update(Vector::Zero(2), 9.0);
    CHECK(cycle.sigma() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("(1+1)-ES accepts ties and rejects non-finite values") {
    OnePlusOne opt(Vector::Zero(2), Sampler::Gaussian, 1.0);
    opt.seed_incumbent(Vector::Zero(2), 1.0);
    const Vector tie = Vector::Constant(2, 0.5);
    opt.update(tie, 1.0);
    CHECK(opt.mean() == tie);
    CHECK(opt.sigma() == 2.0);
    opt.update(Vector::Ones(2), std::nan(""));
    CHECK(opt.mean() == tie);
    CHECK(opt.sigma() < 2.0);
}

TEST_CASE("(1+1)-ES sigma ratio is always one of the two factors") {
    Rng rng(1);
    std::uniform_real_distribution<double> value(0.0, 1.0);
    OnePlusOne opt(Vector::Zero(4), Sampler::Cauchy, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double before = opt.sigma();
        const double best = opt.best_value();
        const double v = value(rng);
        opt.update(opt.sample(rng), v);
        CHECK(opt.sigma() == (v <= best ? before * OnePlusOne::kGrowth : before * OnePlusOne::kShrink));
    }
}

TEST_CASE("(1+1)-ES sampling") {
    const Vector m = Vector::LinSpaced(5, -1.0, 1.0);
    OnePlusOne tiny(m, Sampler::Cauchy, 1e-300);
    Rng rng(2);
    CHECK((tiny.sample(rng) - m).cwiseAbs().maxCoeff() < 1e-200);

    OnePlusOne a(m, Sampler::Gaussian), b(m, Sampler::Gaussian);
    Rng ra(9), rb(9);
    CHECK(a.sample(ra) == b.sample(rb));

    // P(|X| > 10) = 1 - (2/pi) atan(10) for a standard Cauchy variable
    OnePlusOne unit(Vector::Zero(1), Sampler::Cauchy, 1.0);
    int tail = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        if (std::abs(unit.sample(rng)[0]) > 10.0) ++tail;
    CHECK(static_cast<double>(tail) / n == doctest::Approx(0.0635).epsilon(0.005 / 0.0635));
}

TEST_CASE("CMA default weights") {
    for (std::size_t d : {1u, 2u, 10u, 100u}) {
        for (auto mode : {Covariance::Full, Covariance::Diagonal}) {
            const auto p = CmaParameters::defaults(d, mode);
            CHECK(p.lambda == 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(d)))));
            CHECK(p.mu == p.lambda / 2);
            REQUIRE(static_cast<std::size_t>(p.weights.size()) == p.mu);
            CHECK(p.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
            for (Eigen::Index i = 0; i < p.weights.size(); ++i) {
                CHECK(p.weights[i] > 0.0);
                if (i > 0) CHECK(p.weights[i] < p.weights[i - 1]);
            }
            CHECK(p.mu_eff == doctest::Approx(1.0 / p.weights.squaredNorm()));
        }
    }
}

TEST_CASE("CMA sampling matches the covariance") {
    Rng rng(3);
    Cma tiny(Vector::Constant(3, 0.7), Covariance::Full, 1e-300);
    for (const auto& x : tiny.ask(rng)) CHECK((x - tiny.mean()).cwiseAbs().maxCoeff() < 1e-200);

    Cma one(Vector::Zero(1), Covariance::Full, 1.0);
    Matrix c(1, 1);
    c << 4.0;
    one.set_covariance(c);
    std::vector<double> xs;
    while (xs.size() < 10000)
        for (const auto& x : one.ask(rng)) xs.push_back(x[0]);
    CHECK(sample_std(xs) == doctest::Approx(2.0).epsilon(0.07 / 2.0));

    Cma diag(Vector::Zero(2), Covariance::Diagonal, 1.0);
    diag.set_covariance(Vector(Eigen::Vector2d(1.0, 100.0)).asDiagonal().toDenseMatrix());
    std::vector<double> x0, x1;
    while (x0.size() < 10000)
        for (const auto& x : diag.ask(rng)) {
            x0.push_back(x[0]);
            x1.push_back(x[1]);
        }
    CHECK(sample_std(x1) / sample_std(x0) == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("CMA tell with equal values recombines the first mu candidates") {
    Rng rng(4);
    Cma cma(Vector::Zero(4), Covariance::Full, 0.5);
    const auto xs = cma.ask(rng);
    const std::vector<double> same(xs.size(), 1.0);
    Vector want = Vector::Zero(4);
    for (std::size_t i = 0; i < cma.parameters().mu; ++i) want += cma.parameters().weights[i] * xs[i];
    cma.tell(xs, same);
    CHECK((cma.mean() - want).norm() < 1e-12);
    CHECK(positive_definite(cma.covariance()));
}

TEST_CASE("CMA tell rejects a wrong number of values") {
    Rng rng(5);
    Cma cma(Vector::Zero(3), Covariance::Full);
    const auto xs = cma.ask(rng);
    const std::vector<double> short_values(xs.size() - 1, 0.0);
    CHECK_THROWS_AS(cma.tell(std::span(xs).subspan(1), short_values), InvalidInput);
    const std::vector<double> values(xs.size(), 0.0);
    CHECK_THROWS_AS(cma.tell(std::span(xs).subspan(1), values), InvalidInput);
}

TEST_CASE("CMA covariance stays symmetric positive definite") {
    for (auto mode : {Covariance::Full, Covariance::Diagonal}) {
        Rng rng(6);
        Cma cma(Vector::Constant(6, 2.0), mode);
        const auto f = bench::by_name("rastrigin", Vector::Zero(6));
        for (int g = 0; g < 300; ++g) {
            auto xs = cma.ask(rng);
            std::vector<double> values;
            for (const auto& x : xs) values.push_back(f(x));
            cma.tell(xs, values);
            const Matrix c = cma.covariance();
            CHECK((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * c.cwiseAbs().maxCoeff());
            CHECK(positive_definite(c));
            CHECK(cma.sigma() > 0.0);
        }
    }
}

TEST_CASE("CMA repairs an indefinite covariance") {
    Rng rng(7);
    Cma cma(Vector::Zero(2), Covariance::Full);
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
    cma.set_covariance(bad);
    const auto xs = cma.ask(rng);
    CHECK(cma.repairs() > 0);
    for (const auto& x : xs) CHECK(x.allFinite());
}

TEST_CASE("CMA converges on the sphere") {
    for (auto mode : {Covariance::Full, Covariance::Diagonal}) {
        Rng rng(8);
        Cma cma(Vector::Zero(10), mode);
        MinimizeOptions opts;
        opts.budget = 3000;
        const auto r = minimize(bench::by_name("sphere", Vector::Ones(10)), cma, opts, rng);
        CHECK(r.best_value <= 1e-9);
    }
}

TEST_CASE("random search keeps its best value non-increasing") {
    Rng rng(9);
    RandomSearch rs(Vector::Zero(3));
    const auto f = bench::by_name("sphere", Vector::Ones(3));
    double last = rs.best_value();
    for (int i = 0; i < 200; ++i) {
        auto xs = rs.ask(rng);
        std::vector<double> values;
        for (const auto& x : xs) values.push_back(f(x));
        rs.tell(xs, values);
        CHECK(rs.best_value() <= last);
        last = rs.best_value();
    }
}

TEST_CASE("random search loses to CMA on a 10-d sphere") {
    MinimizeOptions opts;
    opts.budget = 3000;
    const auto f = bench::by_name("sphere", Vector::Ones(10));
    Rng r1(10), r2(10);
    const auto random = minimize(f, OptimizerKind::RandomSearch, 10, opts, r1);
    const auto cma = minimize(f, OptimizerKind::CmaFull, 10, opts, r2);
    CHECK(random.best_value > cma.best_value);
}

TEST_CASE("differential evolution keeps its population size") {
    Rng rng(11);
    DifferentialEvolution de(Vector::Zero(4));
    const auto f = bench::by_name("sphere", Vector::Ones(4));
    for (int g = 0; g < 20; ++g) {
        auto xs = de.ask(rng);
        std::vector<double> values;
        for (const auto& x : xs) values.push_back(f(x));
        de.tell(xs, values);
        CHECK(de.population().size() == 30);
        CHECK(de.fitness().size() == 30);
    }
}

TEST_CASE("minimize respects the budget and the stop predicate") {
    const auto f = bench::by_name("sphere", Vector::Ones(3));
    for (auto kind : kAllKinds) {
        CAPTURE(to_string(kind));
        Rng rng(12);
        MinimizeOptions one;
        one.budget = 1;
        auto r = minimize(f, kind, 3, one, rng);
        CHECK(r.evaluations == 1);

        MinimizeOptions stop;
        stop.budget = 100;
        stop.stop = [](const Vector&, double) { return true; };
        r = minimize(f, kind, 3, stop, rng);
        CHECK(r.evaluations == 1);
        CHECK(r.stopped_early);

        MinimizeOptions constant;
        constant.budget = 97;
        std::size_t calls = 0;
        r = minimize(
            [&](const Vector&) {
                ++calls;
                return 4.25;
            },
            kind, 3, constant, rng);
        CHECK(r.best_value == 4.25);
        CHECK(r.evaluations == 97);
        CHECK(calls == 97);
    }
    Rng rng(0);
    MinimizeOptions zero;
    zero.budget = 0;
    CHECK_THROWS_AS(minimize(f, OptimizerKind::CmaFull, 3, zero, rng), InvalidInput);
}

TEST_CASE("minimize evaluates the initial mean first when asked") {
    Rng rng(13);
    OnePlusOne opt(Vector::Constant(2, 3.0), Sampler::Gaussian);
    MinimizeOptions opts;
    opts.budget = 5;
    opts.evaluate_initial_mean = true;
    std::vector<Vector> seen;
    minimize(
        [&](const Vector& x) {
            seen.push_back(x);
            return x.squaredNorm();
        },
        opt, opts, rng);
    REQUIRE(seen.size() == 5);
    CHECK(seen[0] == Vector::Constant(2, 3.0));
}

TEST_CASE("minimize aborts on an objective exception") {
    Rng rng(14);
    std::size_t calls = 0;
    MinimizeOptions opts;
    opts.budget = 100;
    const auto r = minimize(
        [&](const Vector& x) {
            if (++calls == 7) throw std::runtime_error("oracle down");
            return x.squaredNorm();
        },
        OptimizerKind::OnePlusOneCauchy, 3, opts, rng);
    CHECK(r.aborted);
    CHECK(r.error);
    CHECK(r.error_message == "oracle down");
    CHECK(r.evaluations == 7);
    CHECK(std::isfinite(r.best_value));
}

TEST_CASE("every optimizer except random search solves a shifted 2-d sphere") {
    const Vector opt = Vector::Constant(2, 3.0);
    for (auto kind : kAllKinds) {
        if (kind == OptimizerKind::RandomSearch) continue;
        CAPTURE(to_string(kind));
        Rng rng(15);
        MinimizeOptions opts;
        opts.budget = 2000;
        const auto r = minimize(bench::by_name("sphere", opt), kind, 2, opts, rng);
        CHECK(r.best_value <= 1e-2);
        CHECK((r.best_point - opt).norm() <= 0.1);
    }
}

TEST_CASE("minimize is deterministic for a fixed seed") {
    const auto f = bench::by_name("ellipsoid", Vector::Ones(5));
    for (auto kind : kAllKinds) {
        CAPTURE(to_string(kind));
        std::vector<Vector> first, second;
        MinimizeOptions opts;
        opts.budget = 300;
        Rng a(16), b(16);
        minimize(
            [&](const Vector& x) {
                first.push_back(x);
                return f(x);
            },
            kind, 5, opts, a);
        minimize(
            [&](const Vector& x) {
                second.push_back(x);
                return f(x);
            },
            kind, 5, opts, b);
        REQUIRE(first.size() == second.size());
        for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i] == second[i]);
    }
}

TEST_CASE("minimize writes a trace") {
    Rng rng(17);
    std::ostringstream trace;
    MinimizeOptions opts;
    opts.budget = 50;
    opts.trace = &trace;
    minimize(bench::by_name("sphere", Vector::Ones(3)), OptimizerKind::CmaFull, 3, opts, rng);
    std::istringstream lines(trace.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "eval,best,sigma");
    int rows = 0;
    double last_best = INFINITY;
    std::size_t last_eval = 0;
    while (std::getline(lines, line)) {
        ++rows;
        std::size_t eval;
        double best, sigma;
        REQUIRE(std::sscanf(line.c_str(), "%zu,%lf,%lf", &eval, &best, &sigma) == 3);
        CHECK(eval > last_eval);
        CHECK(best <= last_best);
        CHECK(sigma > 0.0);
        last_eval = eval;
        last_best = best;
    }
    CHECK(rows >= 1);
    CHECK(last_eval == 50);
}
