#include <cmath>

#include "bbox/error.hpp"
#include "bbox/models.hpp"

namespace bbox {

namespace {

constexpr double kCentre = 0.5;

struct Batch {
    Eigen::MatrixXd inputs;  // D x N
    std::vector<std::size_t> labels;
};

Batch make_batch(const Dataset& data, std::size_t classes, Shape shape) {
    if (data.empty()) throw InvalidInput("empty training set");
    Batch batch;
    batch.inputs.resize(static_cast<Eigen::Index>(shape.size()), static_cast<Eigen::Index>(data.size()));
    batch.labels.reserve(data.size());
    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto& item = data[n];
        if (item.image.shape() != shape) throw ShapeError("training image shape mismatch");
        if (item.label >= classes) throw InvalidInput("training label out of range");
        const auto px = item.image.data();
        for (std::size_t i = 0; i < px.size(); ++i)
            batch.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) = px[i];
        batch.labels.push_back(item.label);
    }
    return batch;
}

MlpGradient loss_gradient(const MlpModel& model, const Batch& batch) {
    const auto n = batch.inputs.cols();
    const Eigen::MatrixXd pre = (model.w1() * batch.inputs).colwise() + model.b1();
    const Eigen::MatrixXd act = pre.cwiseMax(0.0);
    Eigen::MatrixXd out = (model.w2() * act).colwise() + model.b2();

    // out becomes d(loss)/d(out): softmax minus one-hot, scaled by 1/N
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        auto col = out.col(j);
        const double top = col.maxCoeff();
        const Eigen::VectorXd e = (col.array() - top).exp();
        const double z = e.sum();
        const auto y = static_cast<Eigen::Index>(batch.labels[static_cast<std::size_t>(j)]);
        total += std::log(z) - (col[y] - top);
        col = e / z;
        col[y] -= 1.0;
    }
    const double scale = 1.0 / static_cast<double>(n);
    out *= scale;

    const Eigen::MatrixXd dw2 = out * act.transpose();
    const Eigen::VectorXd db2 = out.rowwise().sum();
    const Eigen::MatrixXd dact = model.w2().transpose() * out;
    const Eigen::MatrixXd dpre = dact.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd dw1 = dpre * batch.inputs.transpose();
    const Eigen::VectorXd db1 = dpre.rowwise().sum();

    MlpGradient g;
    g.loss = total * scale;
    g.gradient.resize(static_cast<Eigen::Index>(model.parameter_count()));
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < dw1.rows(); ++i)
        for (Eigen::Index j = 0; j < dw1.cols(); ++j) g.gradient[k++] = dw1(i, j);
    for (Eigen::Index i = 0; i < db1.size(); ++i) g.gradient[k++] = db1[i];
    for (Eigen::Index i = 0; i < dw2.rows(); ++i)
        for (Eigen::Index j = 0; j < dw2.cols(); ++j) g.gradient[k++] = dw2(i, j);
    for (Eigen::Index i = 0; i < db2.size(); ++i) g.gradient[k++] = db2[i];
    return g;
}

}  // namespace

MlpGradient mlp_loss_gradient(const MlpModel& model, const Dataset& data) {
    return loss_gradient(model, make_batch(data, model.num_classes(), model.input_shape()));
}

MlpModel train_mlp(MlpModel model, const Dataset& data, int epochs, double learning_rate) {
    if (epochs < 0) throw InvalidInput("epochs must be non-negative");
    if (!(learning_rate >= 0.0)) throw InvalidInput("learning rate must be non-negative");
    // Descend in coordinates centred on the mid-grey image: W1 x + b1 is written
    // as W1 (x - 0.5) + b1c with b1c = b1 + 0.5 W1 1. Same function, but the
    // constant input component no longer dominates the curvature.
    Batch batch = make_batch(data, model.num_classes(), model.input_shape());
    batch.inputs.array() -= kCentre;
    const Eigen::VectorXd shift = kCentre * model.w1().rowwise().sum();
    MlpModel centred(model.input_shape(), model.w1(), model.b1() + shift, model.w2(), model.b2());
    Eigen::VectorXd params = centred.flat_parameters();
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const auto g = loss_gradient(centred, batch);
        params -= learning_rate * g.gradient;
        centred = centred.with_parameters(params);
    }
    const Eigen::VectorXd back = kCentre * centred.w1().rowwise().sum();
    return MlpModel(model.input_shape(), centred.w1(), centred.b1() - back, centred.w2(), centred.b2());
}

MlpModel train_toy_mlp(const Dataset& data, const TrainOptions& options, Rng& rng) {
    if (data.empty()) throw InvalidInput("empty training set");
    std::size_t classes = 0;
    for (const auto& item : data) classes = std::max(classes, item.label + 1);
    if (classes < 2) throw InvalidInput("training set needs at least two classes");
    const Shape shape = data.front().image.shape();

    double last = 0.0;
    for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
        auto init = MlpModel::random(shape, options.hidden, static_cast<int>(classes), rng);
        auto model = train_mlp(std::move(init), data, options.epochs, options.learning_rate);
        last = accuracy(model, data);
        if (last >= options.min_accuracy) return model;
    }
    throw TrainingError("MLP reached only " + std::to_string(last) + " training accuracy after " +
                        std::to_string(options.max_attempts) + " attempts");
}

}  // namespace bbox
