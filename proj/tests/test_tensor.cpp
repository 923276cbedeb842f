#include <doctest.h>

#include <cmath>
#include <limits>

#include "bbox/error.hpp"
#include "bbox/rng.hpp"
#include "bbox/tensor.hpp"

using namespace bbox;

namespace {

LogitsVector logits(std::vector<double> v) { return LogitsVector(std::move(v)); }

std::vector<double> random_logits(Rng& rng, std::size_t k, double scale) {
    std::normal_distribution<double> n(0.0, scale);
    std::vector<double> v(k);
    for (double& x : v) x = n(rng);
    return v;
}

}  // namespace

TEST_CASE("softmax examples") {
    auto p = softmax(logits({0, 0}));
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));

    for (double c : {-1000.0, 0.0, 3.5, 1000.0}) {
        p = softmax(logits({c, c, c}));
        for (double x : p) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }

    p = softmax(logits({2, 0}));
    CHECK(p[0] == doctest::Approx(0.880797).epsilon(1e-5));
    CHECK(p[1] == doctest::Approx(0.119203).epsilon(1e-5));
}

TEST_CASE("logits reject non-finite values and fewer than two classes") {
    CHECK_THROWS_AS(logits({0.0, std::numeric_limits<double>::quiet_NaN()}), InvalidInput);
    CHECK_THROWS_AS(logits({0.0, std::numeric_limits<double>::infinity()}), InvalidInput);
    CHECK_THROWS_AS(logits({1.0}), InvalidInput);
}

TEST_CASE("softmax is a distribution and shift invariant") {
    Rng rng(11);
    std::uniform_real_distribution<double> shift(-500.0, 500.0);
    for (int trial = 0; trial < 500; ++trial) {
        auto v = random_logits(rng, 2 + trial % 9, 20.0);
        const auto p = softmax(LogitsVector(v));
        double total = 0.0;
        for (double x : p) {
            CHECK(x > 0.0);
            CHECK(x <= 1.0);
            total += x;
        }
        CHECK(std::abs(total - 1.0) < 1e-9);

        const double c = shift(rng);
        for (double& x : v) x += c;
        const auto q = softmax(LogitsVector(v));
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-9);
    }
}

TEST_CASE("cross-entropy examples") {
    CHECK(cross_entropy_loss(logits({0, 0}), 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // -log(1 / (1 + e^-20)) = log1p(e^-20)
    CHECK(cross_entropy_loss(logits({10, -10}), 0) == doctest::Approx(2.0611536e-9).epsilon(1e-6));
    CHECK(cross_entropy_loss(logits({2, 0}), 1) == doctest::Approx(2.126928).epsilon(1e-5));
    CHECK_THROWS_AS(cross_entropy_loss(logits({0, 0}), 2), InvalidInput);
}

TEST_CASE("Carlini-Wagner loss examples") {
    CHECK(cw_loss(logits({0, 0}), 0) == doctest::Approx(0.0));
    CHECK(cw_loss(logits({2, 0}), 0) == doctest::Approx(-0.761594).epsilon(1e-5));
    CHECK(cw_loss(logits({0, 2}), 0) == doctest::Approx(0.761594).epsilon(1e-5));
    CHECK_THROWS_AS(cw_loss(logits({0, 0}), 5), InvalidInput);
}

TEST_CASE("losses are non-negative / bounded and CW sign tracks misclassification") {
    Rng rng(3);
    std::uniform_int_distribution<std::size_t> pick(0, 5);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto v = random_logits(rng, 6, 4.0);
        const LogitsVector l(v);
        const auto y = pick(rng);
        CHECK(cross_entropy_loss(l, y) >= 0.0);
        const double cw = cw_loss(l, y);
        CHECK(cw >= -1.0);
        CHECK(cw <= 1.0);
        // random normal logits are tie-free with probability one
        CHECK((cw > 0.0) == (argmax(v) != y));
    }
}

TEST_CASE("lowering the label logit strictly increases both losses") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        auto v = random_logits(rng, 4, 2.0);
        const double before_ce = cross_entropy_loss(LogitsVector(v), 1);
        const double before_cw = cw_loss(LogitsVector(v), 1);
        v[1] -= 0.5;
        CHECK(cross_entropy_loss(LogitsVector(v), 1) > before_ce);
        CHECK(cw_loss(LogitsVector(v), 1) > before_cw);
    }
}

TEST_CASE("argmax breaks ties towards the lowest index") {
    const std::vector<double> v{1.0, 3.0, 3.0, 2.0};
    CHECK(argmax(v) == 1);
}

TEST_CASE("image construction validates shape and range") {
    const Shape s{1, 2, 2};
    CHECK_THROWS_AS(ImageTensor(s, {0.1, 0.2, 0.3}), ShapeError);
    CHECK_THROWS_AS(ImageTensor(s, {0.1, 0.2, 0.3, 1.5}), InvalidInput);
    const ImageTensor x(s, {0.0, 0.25, 0.5, 1.0});
    CHECK(x.at(0, 1, 0) == 0.5);
}

TEST_CASE("apply_perturbation examples") {
    const Shape s{3, 4, 4};
    const auto half = ImageTensor::filled(s, 0.5);
    const auto same = apply_perturbation(half, std::vector<double>(s.size(), 0.0));
    CHECK(std::equal(same.data().begin(), same.data().end(), half.data().begin()));

    const auto ones = ImageTensor::filled(s, 1.0);
    const auto clipped = apply_perturbation(ones, std::vector<double>(s.size(), 0.05));
    for (double v : clipped.data()) CHECK(v == 1.0);

    const auto lower = apply_perturbation(half, std::vector<double>(s.size(), -0.05));
    for (double v : lower.data()) CHECK(v == doctest::Approx(0.45));
    for (double v : half.data()) CHECK(v == 0.5);

    CHECK_THROWS_AS(apply_perturbation(half, std::vector<double>(s.size() - 1, 0.0)), ShapeError);
}

TEST_CASE("apply_perturbation always yields a valid image") {
    Rng rng(9);
    std::uniform_real_distribution<double> pixel(0.0, 1.0);
    std::normal_distribution<double> delta(0.0, 3.0);
    const Shape s{2, 3, 5};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> px(s.size()), d(s.size());
        for (double& v : px) v = pixel(rng);
        for (double& v : d) v = delta(rng);
        const auto out = apply_perturbation(ImageTensor(s, px), d);
        for (double v : out.data()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}
