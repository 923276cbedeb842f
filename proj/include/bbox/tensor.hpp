#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace bbox {

/// Channels x height x width. Storage order everywhere is row-major (c, h, w).
struct Shape {
    int channels = 0;
    int height = 0;
    int width = 0;

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
               static_cast<std::size_t>(width);
    }
    friend bool operator==(const Shape&, const Shape&) = default;
};

/// Image with pixel intensities in [0,1].
class ImageTensor {
public:
    ImageTensor() = default;
    /// Throws ShapeError on a length mismatch and InvalidInput on values outside [0,1].
    ImageTensor(Shape shape, std::vector<double> data);

    /// Constant image.
    static ImageTensor filled(Shape shape, double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::span<const double> data() const noexcept { return data_; }
    double operator[](std::size_t i) const { return data_[i]; }
    double at(int c, int h, int w) const;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Finite class scores, at least two of them.
class LogitsVector {
public:
    LogitsVector() = default;
    explicit LogitsVector(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    friend bool operator==(const LogitsVector&, const LogitsVector&) = default;

private:
    std::vector<double> values_;
};

enum class LossKind { CrossEntropy, CarliniWagner };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

/// Softmax with max-subtraction.
std::vector<double> softmax(const LogitsVector& logits);

/// Index of the largest logit; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// -log P(label | logits), evaluated as logsumexp(logits) - logits[label].
double cross_entropy_loss(const LogitsVector& logits, std::size_t label);

/// -P(label) + max over the other classes of P.
double cw_loss(const LogitsVector& logits, std::size_t label);

double loss(LossKind kind, const LogitsVector& logits, std::size_t label);

/// clip(x + delta, 0, 1), elementwise.
ImageTensor apply_perturbation(const ImageTensor& x, std::span<const double> delta);

}  // namespace bbox
