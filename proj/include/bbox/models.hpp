#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "bbox/rng.hpp"
#include "bbox/tensor.hpp"

namespace bbox {

/// Logits-only classifier. Implementations must be deterministic and safe to
/// query concurrently.
class ModelOracle {
public:
    virtual ~ModelOracle() = default;

    virtual Shape input_shape() const = 0;
    virtual std::size_t num_classes() const = 0;
    /// Throws ShapeError when `x` does not have input_shape(); OracleError on
    /// transport problems.
    virtual LogitsVector logits(const ImageTensor& x) const = 0;
};

/// Forwards to another oracle and counts every invocation. The count includes
/// calls that end in an exception.
class CountingOracle final : public ModelOracle {
public:
    explicit CountingOracle(const ModelOracle& inner) : inner_(inner) {}

    Shape input_shape() const override { return inner_.input_shape(); }
    std::size_t num_classes() const override { return inner_.num_classes(); }
    LogitsVector logits(const ImageTensor& x) const override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_.logits(x);
    }

    std::uint64_t calls() const noexcept { return calls_.load(); }

private:
    const ModelOracle& inner_;
    mutable std::atomic<std::uint64_t> calls_{0};
};

/// logits = W * flatten(x) + bias
class LinearModel final : public ModelOracle {
public:
    LinearModel(Shape shape, Eigen::MatrixXd weights, Eigen::VectorXd bias);

    Shape input_shape() const override { return shape_; }
    std::size_t num_classes() const override { return static_cast<std::size_t>(bias_.size()); }
    LogitsVector logits(const ImageTensor& x) const override;

    const Eigen::MatrixXd& weights() const noexcept { return weights_; }
    const Eigen::VectorXd& bias() const noexcept { return bias_; }

private:
    Shape shape_;
    Eigen::MatrixXd weights_;
    Eigen::VectorXd bias_;
};

/// Two dense layers with a ReLU in between:
/// logits = W2 * max(0, W1 * flatten(x) + b1) + b2
class MlpModel final : public ModelOracle {
public:
    MlpModel(Shape shape, Eigen::MatrixXd w1, Eigen::VectorXd b1, Eigen::MatrixXd w2,
             Eigen::VectorXd b2);

    /// He-style random initialization.
    static MlpModel random(Shape shape, int hidden, int classes, Rng& rng);

    Shape input_shape() const override { return shape_; }
    std::size_t num_classes() const override { return static_cast<std::size_t>(b2_.size()); }
    LogitsVector logits(const ImageTensor& x) const override;

    int hidden_width() const noexcept { return static_cast<int>(b1_.size()); }
    std::size_t parameter_count() const noexcept;
    /// Parameters in the order W1 (row-major), b1, W2 (row-major), b2.
    Eigen::VectorXd flat_parameters() const;
    MlpModel with_parameters(const Eigen::VectorXd& flat) const;

    const Eigen::MatrixXd& w1() const noexcept { return w1_; }
    const Eigen::VectorXd& b1() const noexcept { return b1_; }
    const Eigen::MatrixXd& w2() const noexcept { return w2_; }
    const Eigen::VectorXd& b2() const noexcept { return b2_; }

private:
    Shape shape_;
    Eigen::MatrixXd w1_;
    Eigen::VectorXd b1_;
    Eigen::MatrixXd w2_;
    Eigen::VectorXd b2_;
};

struct LabeledImage {
    ImageTensor image;
    std::size_t label = 0;
};

using Dataset = std::vector<LabeledImage>;

/// Class templates are 0.5 +/- separation/2 on a 4x4 block grid (per channel), with
/// every 2x2 group of blocks balanced between + and -. Each image is its class
/// template plus N(0, 0.1^2) pixel noise, clipped to [0,1]. Images are ordered
/// class-major.
Dataset synthetic_blob_dataset(std::size_t n_per_class, Shape shape, std::size_t n_classes,
                               double separation, Rng& rng);

/// The noise-free class templates used by synthetic_blob_dataset for the same rng state.
std::vector<ImageTensor> blob_templates(Shape shape, std::size_t n_classes, double separation,
                                        Rng& rng);

/// Linear classifier whose logits are <x, sign pattern of template k>; it
/// predicts the nearest template for balanced blob templates.
LinearModel nearest_template_model(const std::vector<ImageTensor>& templates);

struct MlpGradient {
    double loss = 0.0;  ///< mean cross-entropy over the dataset
    Eigen::VectorXd gradient;  ///< same layout as MlpModel::flat_parameters
};

/// Full-batch mean cross-entropy and its gradient by backpropagation.
MlpGradient mlp_loss_gradient(const MlpModel& model, const Dataset& data);

/// Plain full-batch gradient descent on mean cross-entropy.
MlpModel train_mlp(MlpModel model, const Dataset& data, int epochs, double learning_rate);

struct TrainOptions {
    int hidden = 32;
    int epochs = 200;
    double learning_rate = 0.1;
    double min_accuracy = 0.9;
    int max_attempts = 3;
};

/// Initializes and trains an MLP; retries with a fresh initialization when the
/// training accuracy stays below `min_accuracy`. Throws TrainingError after
/// `max_attempts` failures.
MlpModel train_toy_mlp(const Dataset& data, const TrainOptions& options, Rng& rng);

double accuracy(const ModelOracle& model, const Dataset& data);

/// Binary model file: 16-byte header (magic "BBOX", version, kind, classes as
/// little-endian u32) followed by little-endian float32 values. Parameters are
/// stored at float32 precision.
enum class ModelFileKind : std::uint32_t { Linear = 1, Mlp = 2 };

void save_model(const LinearModel& model, const std::filesystem::path& path);
void save_model(const MlpModel& model, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_model(const LinearModel& model);
std::vector<std::uint8_t> encode_model(const MlpModel& model);
std::unique_ptr<ModelOracle> decode_model(std::span<const std::uint8_t> bytes);
std::unique_ptr<ModelOracle> load_model(const std::filesystem::path& path);

}  // namespace bbox
