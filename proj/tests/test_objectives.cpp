#include <doctest.h>

#include <cmath>

#include "bbox/error.hpp"
#include "bbox/objectives.hpp"

using namespace bbox;

namespace {

const Shape kShape{1, 4, 4};

// logits = [0, sum(x) - 8 + offset]: class 1 wins once the image brightens
LinearModel brightness_model(double offset) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 16);
    w.row(1).setOnes();
    return LinearModel(kShape, w, Eigen::Vector2d(0.0, -8.0 + offset));
}

AttackSpec grey_spec(double eps, int n_tiles = 2, std::optional<std::size_t> target = std::nullopt) {
    return AttackSpec(ImageTensor::filled(kShape, 0.5), 0, eps, LossKind::CrossEntropy, TileGrid(kShape, n_tiles),
                      target);
}

LogitsVector logits(std::vector<double> v) { return LogitsVector(std::move(v)); }

}  // namespace

TEST_CASE("attack spec validation") {
    CHECK_THROWS_AS(grey_spec(0.0), InvalidInput);
    CHECK_THROWS_AS(grey_spec(-0.1), InvalidInput);
    CHECK_THROWS_AS(grey_spec(0.1, 2, 0), InvalidInput);
    CHECK_THROWS_AS(AttackSpec(ImageTensor::filled(kShape, 0.5), 0, 0.1, LossKind::CrossEntropy,
                               TileGrid(Shape{1, 8, 8}, 2)),
                    ShapeError);
    CHECK(grey_spec(0.1, 2, 1).mode() == AttackMode::Targeted);
}

TEST_CASE("continuous delta stays inside the ball and saturates") {
    const auto spec = grey_spec(0.05);
    CHECK(continuous_delta(spec, std::vector<double>(4, 0.0)) == std::vector<double>(16, 0.0));
    for (double v : continuous_delta(spec, std::vector<double>(4, 50.0))) CHECK(std::abs(v - 0.05) <= 1e-8);
    for (double v : continuous_delta(spec, std::vector<double>(4, -50.0))) CHECK(std::abs(v + 0.05) <= 1e-8);

    Rng rng(1);
    std::cauchy_distribution<double> wild(0.0, 100.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> tau(4);
        for (double& t : tau) t = wild(rng);
        for (double v : continuous_delta(spec, tau)) CHECK(std::abs(v) <= 0.05);
    }
}

TEST_CASE("continuous evaluation at tau = 0 queries the clean image") {
    const auto spec = grey_spec(0.05);
    const auto model = brightness_model(1.0);
    QueryCounter counter(10);
    const auto e = continuous_eval(spec, std::vector<double>(4, 0.0), model, counter);
    CHECK(e.logits == model.logits(spec.image()));
    CHECK(counter.used() == 1);
}

TEST_CASE("corner probabilities") {
    CHECK(corner_probability(0.0, 0.0) == 0.5);
    CHECK(corner_probability(3.0, 3.0) == 0.5);
    CHECK(corner_probability(std::log(3.0), 0.0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(corner_probability(40.0, 0.0) == doctest::Approx(1.0).epsilon(1e-17));
    CHECK(corner_probability(0.0, 40.0) < 1e-17);
    CHECK(corner_probability(1000.0, -1000.0) == 1.0);
    CHECK(corner_probability(-1000.0, 1000.0) == 0.0);

    const auto p = DiscreteParams::from_search_point(std::vector<double>{1, 2, 3, 4}, CornerParameterization::TwoVariable);
    CHECK(p.a == std::vector<double>{1, 2});
    CHECK(p.b == std::vector<double>{3, 4});
    const auto q = DiscreteParams::from_search_point(std::vector<double>{1, 2}, CornerParameterization::SingleVariable);
    CHECK(q.a == std::vector<double>{1, 2});
    CHECK(q.b == std::vector<double>{0, 0});
}

TEST_CASE("sampled corners follow their probabilities") {
    Rng rng(2);
    DiscreteParams fair{std::vector<double>(1, 0.0), std::vector<double>(1, 0.0)};
    DiscreteParams biased{std::vector<double>(1, std::log(3.0)), std::vector<double>(1, 0.0)};
    int plus_fair = 0, plus_biased = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto f = sample_corner(fair, rng);
        const auto b = sample_corner(biased, rng);
        CHECK((f[0] == 1.0 || f[0] == -1.0));
        plus_fair += f[0] > 0;
        plus_biased += b[0] > 0;
    }
    CHECK(std::abs(plus_fair / double(n) - 0.5) < 4.0 * std::sqrt(0.25 / n));
    CHECK(std::abs(plus_biased / double(n) - 0.75) < 4.0 * std::sqrt(0.1875 / n));
}

TEST_CASE("discrete evaluation queries a corner of the ball") {
    const auto spec = grey_spec(0.05);
    const auto model = brightness_model(1.0);
    QueryCounter counter(100);
    Rng rng(3);
    DiscreteParams params{{0.5, -2.0, 0.0, 7.0}, {0.0, 1.0, 0.0, -7.0}};
    for (int i = 0; i < 50; ++i) {
        const auto e = discrete_eval(spec, params, model, counter, rng);
        REQUIRE(e.corner.size() == 4);
        const auto delta = corner_delta(spec, e.corner);
        for (double v : delta) CHECK(std::abs(std::abs(v) - 0.05) < 1e-15);
        CHECK(e.logits == model.logits(apply_perturbation(spec.image(), delta)));
    }
    CHECK(counter.used() == 50);
}

TEST_CASE("success rule") {
    const auto untargeted = grey_spec(0.1);
    CHECK_FALSE(is_success(untargeted, logits({1.0, 0.0})));
    CHECK(is_success(untargeted, logits({0.0, 1.0})));
    // a tie goes to class 0, the true label
    CHECK_FALSE(is_success(untargeted, logits({0.5, 0.5})));

    const AttackSpec targeted(ImageTensor::filled(kShape, 0.5), 1, 0.1, LossKind::CrossEntropy,
                              TileGrid(kShape, 2), 2);
    CHECK(is_success(targeted, logits({0.0, 1.0, 2.0})));
    CHECK_FALSE(is_success(targeted, logits({3.0, 1.0, 2.0})));
    CHECK_FALSE(is_success(targeted, logits({2.0, 1.0, 2.0})));
}

TEST_CASE("attack scores") {
    const auto l = logits({2.0, 0.0, -1.0});
    const auto untargeted = grey_spec(0.1);
    CHECK(attack_loss(untargeted, l) == cross_entropy_loss(l, 0));
    CHECK(attack_score(untargeted, l) == -cross_entropy_loss(l, 0));

    const AttackSpec targeted(ImageTensor::filled(kShape, 0.5), 0, 0.1, LossKind::CarliniWagner,
                              TileGrid(kShape, 2), 2);
    CHECK(attack_loss(targeted, l) == cw_loss(l, 2));
    CHECK(attack_score(targeted, l) == cw_loss(l, 2));
}

TEST_CASE("query counter") {
    CHECK_THROWS_AS(QueryCounter(0), InvalidInput);
    QueryCounter c(2);
    c.consume();
    c.consume();
    CHECK(c.used() == 2);
    CHECK(c.remaining() == 0);
    CHECK_THROWS_AS(c.consume(), BudgetExhausted);
    CHECK(c.used() == 2);
}

TEST_CASE("each evaluation costs exactly one model call") {
    const auto spec = grey_spec(0.05);
    const auto inner = brightness_model(0.5);
    CountingOracle model(inner);
    QueryCounter counter(5);
    Rng rng(4);
    for (auto form : {ProblemForm::Continuous, ProblemForm::Discrete}) {
        QueryCounter local(3);
        AttackObjective obj(spec, model, local, form, rng);
        const auto before = model.calls();
        Vector point = Vector::Zero(static_cast<Eigen::Index>(obj.search_dimension()));
        obj(point);
        obj(point);
        CHECK(model.calls() - before == 2);
        CHECK(local.used() == 2);
        obj(point);
        CHECK_THROWS_AS(obj(point), BudgetExhausted);
        CHECK(model.calls() - before == 3);
    }
    // the success check itself never queries
    const auto before = model.calls();
    is_success(spec, logits({0.0, 1.0}));
    CHECK(model.calls() == before);
}

TEST_CASE("attack objective tracks success and best loss") {
    const auto spec = grey_spec(0.05, 1);
    // fooled once the image brightens by more than 0.5 / 16
    const auto model = brightness_model(-0.5);
    QueryCounter counter(10);
    Rng rng(5);
    AttackObjective obj(spec, model, counter, ProblemForm::Continuous, rng);
    CHECK(obj.search_dimension() == 1);
    const double dark = obj(Vector::Constant(1, -5.0));
    CHECK_FALSE(obj.succeeded());
    const double bright = obj(Vector::Constant(1, 5.0));
    CHECK(obj.succeeded());
    CHECK(bright < dark);
    CHECK(obj.best_score() == bright);
    CHECK(obj.best_loss() == -bright);
    REQUIRE(obj.last());
    CHECK(obj.last()->success);
}

TEST_CASE("warm start points reproduce the sign pattern") {
    const auto spec = grey_spec(0.05);
    const auto model = brightness_model(0.0);
    QueryCounter counter(10);
    Rng rng(6);
    const std::vector<double> signs{1, -1, -1, 1};

    AttackObjective cont(spec, model, counter, ProblemForm::Continuous, rng);
    const Vector c = cont.warm_start(signs, 2.0);
    const auto delta = continuous_delta(spec, std::span(c.data(), c.size()));
    for (int i = 0; i < 4; ++i) CHECK(delta[i * 2 + (i / 2) * 4] * signs[i] > 0.9 * 0.05);

    AttackObjective disc(spec, model, counter, ProblemForm::Discrete, rng);
    CHECK(disc.search_dimension() == 8);
    const Vector d = disc.warm_start(signs, 2.0);
    const auto params = DiscreteParams::from_search_point(std::span(d.data(), d.size()), CornerParameterization::TwoVariable);
    for (int i = 0; i < 4; ++i) CHECK((corner_probability(params.a[i], params.b[i]) > 0.5) == (signs[i] > 0));

    AttackObjective single(spec, model, counter, ProblemForm::Discrete, rng, CornerParameterization::SingleVariable);
    CHECK(single.search_dimension() == 4);
}

TEST_CASE("discrete objective is deterministic for a fixed seed") {
    const auto spec = grey_spec(0.05);
    const auto model = brightness_model(0.0);
    auto run = [&] {
        QueryCounter counter(20);
        Rng rng(7);
        AttackObjective obj(spec, model, counter, ProblemForm::Discrete, rng);
        std::vector<double> out;
        for (int i = 0; i < 20; ++i) out.push_back(obj(Vector::Zero(8)));
        return out;
    };
    CHECK(run() == run());
}
