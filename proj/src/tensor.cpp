#include "bbox/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bbox/error.hpp"

namespace bbox {

ImageTensor::ImageTensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
    if (shape_.channels < 1 || shape_.height < 1 || shape_.width < 1)
        throw ShapeError("image shape must be positive in every dimension");
    if (data_.size() != shape_.size())
        throw ShapeError("image data length " + std::to_string(data_.size()) +
                         " does not match shape size " + std::to_string(shape_.size()));
    for (double v : data_) {
        if (!(v >= 0.0 && v <= 1.0))
            throw InvalidInput("pixel intensity outside [0,1]");
    }
}

ImageTensor ImageTensor::filled(Shape shape, double value) {
    return ImageTensor(shape, std::vector<double>(shape.size(), value));
}

double ImageTensor::at(int c, int h, int w) const {
    return data_[(static_cast<std::size_t>(c) * shape_.height + h) * shape_.width + w];
}

LogitsVector::LogitsVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2)
        throw InvalidInput("logits need at least two classes");
    for (double v : values_) {
        if (!std::isfinite(v))
            throw InvalidInput("non-finite logit");
    }
}

LossKind parse_loss_kind(std::string_view name) {
    if (name == "ce" || name == "cross_entropy") return LossKind::CrossEntropy;
    if (name == "cw" || name == "carlini_wagner") return LossKind::CarliniWagner;
    throw InvalidInput("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) {
    return kind == LossKind::CrossEntropy ? "ce" : "cw";
}

std::vector<double> softmax(const LogitsVector& logits) {
    const auto v = logits.values();
    const double top = *std::max_element(v.begin(), v.end());
    std::vector<double> p(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        p[i] = std::exp(v[i] - top);
        total += p[i];
    }
    for (double& x : p) x /= total;
    return p;
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw InvalidInput("argmax of an empty vector");
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

namespace {

void check_label(const LogitsVector& logits, std::size_t label) {
    if (label >= logits.size())
        throw InvalidInput("label " + std::to_string(label) + " out of range for " +
                           std::to_string(logits.size()) + " classes");
}

}  // namespace

double cross_entropy_loss(const LogitsVector& logits, std::size_t label) {
    check_label(logits, label);
    const auto v = logits.values();
    const std::size_t top = argmax(v);
    // logsumexp = v[top] + log1p(sum of the remaining exp terms)
    double rest = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i != top) rest += std::exp(v[i] - v[top]);
    }
    const double result = (v[top] - v[label]) + std::log1p(rest);
    return std::max(result, 0.0);
}

double cw_loss(const LogitsVector& logits, std::size_t label) {
    check_label(logits, label);
    const auto p = softmax(logits);
    double best_other = -1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i != label && p[i] > best_other) best_other = p[i];
    }
    return -p[label] + best_other;
}

double loss(LossKind kind, const LogitsVector& logits, std::size_t label) {
    return kind == LossKind::CrossEntropy ? cross_entropy_loss(logits, label)
                                          : cw_loss(logits, label);
}

ImageTensor apply_perturbation(const ImageTensor& x, std::span<const double> delta) {
    if (delta.size() != x.size())
        throw ShapeError("perturbation length " + std::to_string(delta.size()) +
                         " does not match image size " + std::to_string(x.size()));
    std::vector<double> out(x.size());
    const auto src = x.data();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::clamp(src[i] + delta[i], 0.0, 1.0);
    return ImageTensor(x.shape(), std::move(out));
}

}  // namespace bbox
