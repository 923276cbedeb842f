#include "bbox/models.hpp"

#include <cmath>
#include <string>

#include "bbox/error.hpp"

namespace bbox {

namespace {

void check_shape(const Shape& expected, const ImageTensor& x) {
    if (x.shape() != expected)
        throw ShapeError("model expects a " + std::to_string(expected.channels) + "x" +
                         std::to_string(expected.height) + "x" + std::to_string(expected.width) +
                         " image");
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw InvalidInput(std::string("non-finite ") + what);
}

Eigen::Map<const Eigen::VectorXd> as_vector(const ImageTensor& x) {
    return {x.data().data(), static_cast<Eigen::Index>(x.size())};
}

LogitsVector to_logits(const Eigen::VectorXd& v) {
    return LogitsVector(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

LinearModel::LinearModel(Shape shape, Eigen::MatrixXd weights, Eigen::VectorXd bias)
    : shape_(shape), weights_(std::move(weights)), bias_(std::move(bias)) {
    if (weights_.cols() != static_cast<Eigen::Index>(shape_.size()))
        throw ShapeError("linear model weight columns must equal C*H*W");
    if (weights_.rows() != bias_.size()) throw ShapeError("linear model bias length must equal K");
    if (bias_.size() < 2) throw InvalidInput("linear model needs at least two classes");
    check_finite(weights_, "linear weights");
    check_finite(bias_, "linear bias");
}

LogitsVector LinearModel::logits(const ImageTensor& x) const {
    check_shape(shape_, x);
    return to_logits(weights_ * as_vector(x) + bias_);
}

MlpModel::MlpModel(Shape shape, Eigen::MatrixXd w1, Eigen::VectorXd b1, Eigen::MatrixXd w2,
                   Eigen::VectorXd b2)
    : shape_(shape), w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)) {
    if (w1_.cols() != static_cast<Eigen::Index>(shape_.size()))
        throw ShapeError("first layer columns must equal C*H*W");
    if (w1_.rows() != b1_.size() || w2_.cols() != b1_.size())
        throw ShapeError("hidden width mismatch between layers");
    if (w2_.rows() != b2_.size()) throw ShapeError("output layer bias length must equal K");
    if (b2_.size() < 2) throw InvalidInput("MLP needs at least two classes");
    check_finite(w1_, "MLP weights");
    check_finite(b1_, "MLP bias");
    check_finite(w2_, "MLP weights");
    check_finite(b2_, "MLP bias");
}

MlpModel MlpModel::random(Shape shape, int hidden, int classes, Rng& rng) {
    if (hidden < 1 || classes < 2) throw InvalidInput("MLP needs hidden >= 1 and classes >= 2");
    const auto inputs = static_cast<Eigen::Index>(shape.size());
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd w1(hidden, inputs);
    Eigen::MatrixXd w2(classes, hidden);
    const double s1 = std::sqrt(2.0 / static_cast<double>(inputs));
    const double s2 = std::sqrt(1.0 / static_cast<double>(hidden));
    for (Eigen::Index i = 0; i < w1.rows(); ++i)
        for (Eigen::Index j = 0; j < w1.cols(); ++j) w1(i, j) = s1 * normal(rng);
    for (Eigen::Index i = 0; i < w2.rows(); ++i)
        for (Eigen::Index j = 0; j < w2.cols(); ++j) w2(i, j) = s2 * normal(rng);
    return MlpModel(shape, std::move(w1), Eigen::VectorXd::Zero(hidden), std::move(w2),
                    Eigen::VectorXd::Zero(classes));
}

LogitsVector MlpModel::logits(const ImageTensor& x) const {
    check_shape(shape_, x);
    const Eigen::VectorXd hidden = (w1_ * as_vector(x) + b1_).cwiseMax(0.0);
    return to_logits(w2_ * hidden + b2_);
}

std::size_t MlpModel::parameter_count() const noexcept {
    return static_cast<std::size_t>(w1_.size() + b1_.size() + w2_.size() + b2_.size());
}

Eigen::VectorXd MlpModel::flat_parameters() const {
    Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < w1_.rows(); ++i)
        for (Eigen::Index j = 0; j < w1_.cols(); ++j) flat[k++] = w1_(i, j);
    for (Eigen::Index i = 0; i < b1_.size(); ++i) flat[k++] = b1_[i];
    for (Eigen::Index i = 0; i < w2_.rows(); ++i)
        for (Eigen::Index j = 0; j < w2_.cols(); ++j) flat[k++] = w2_(i, j);
    for (Eigen::Index i = 0; i < b2_.size(); ++i) flat[k++] = b2_[i];
    return flat;
}

MlpModel MlpModel::with_parameters(const Eigen::VectorXd& flat) const {
    if (flat.size() != static_cast<Eigen::Index>(parameter_count()))
        throw ShapeError("parameter vector length mismatch");
    Eigen::MatrixXd w1(w1_.rows(), w1_.cols());
    Eigen::VectorXd b1(b1_.size());
    Eigen::MatrixXd w2(w2_.rows(), w2_.cols());
    Eigen::VectorXd b2(b2_.size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < w1.rows(); ++i)
        for (Eigen::Index j = 0; j < w1.cols(); ++j) w1(i, j) = flat[k++];
    for (Eigen::Index i = 0; i < b1.size(); ++i) b1[i] = flat[k++];
    for (Eigen::Index i = 0; i < w2.rows(); ++i)
        for (Eigen::Index j = 0; j < w2.cols(); ++j) w2(i, j) = flat[k++];
    for (Eigen::Index i = 0; i < b2.size(); ++i) b2[i] = flat[k++];
    return MlpModel(shape_, std::move(w1), std::move(b1), std::move(w2), std::move(b2));
}

double accuracy(const ModelOracle& model, const Dataset& data) {
    if (data.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& item : data) {
        const auto l = model.logits(item.image);
        if (argmax(l.values()) == item.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace bbox
