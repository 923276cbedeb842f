#include <algorithm>
#include <array>

#include "bbox/error.hpp"
#include "bbox/models.hpp"
#include "bbox/tiling.hpp"

namespace bbox {

namespace {

constexpr int kTemplateBlocks = 4;
constexpr double kPixelNoise = 0.1;

}  // namespace

std::vector<ImageTensor> blob_templates(Shape shape, std::size_t n_classes, double separation,
                                        Rng& rng) {
    if (!(separation > 0.0)) throw InvalidInput("separation must be positive");
    if (separation > 1.0) throw InvalidInput("separation above 1 would leave [0,1]");
    const auto rows = tile_boundaries(shape.height, kTemplateBlocks);
    const auto cols = tile_boundaries(shape.width, kTemplateBlocks);
    const double amplitude = 0.5 * separation;

    std::vector<ImageTensor> templates;
    templates.reserve(n_classes);
    for (std::size_t k = 0; k < n_classes; ++k) {
        std::vector<double> data(shape.size());
        for (int c = 0; c < shape.channels; ++c) {
            // every 2x2 group of blocks gets two + and two -, so the template has
            // the same mean as the background at both 1x1 and 2x2 tile scales
            std::array<int, kTemplateBlocks * kTemplateBlocks> sign{};
            for (int gr = 0; gr < kTemplateBlocks; gr += 2) {
                for (int gc = 0; gc < kTemplateBlocks; gc += 2) {
                    std::array<int, 4> group{1, 1, -1, -1};
                    std::shuffle(group.begin(), group.end(), rng);
                    sign[gr * kTemplateBlocks + gc] = group[0];
                    sign[gr * kTemplateBlocks + gc + 1] = group[1];
                    sign[(gr + 1) * kTemplateBlocks + gc] = group[2];
                    sign[(gr + 1) * kTemplateBlocks + gc + 1] = group[3];
                }
            }
            for (int br = 0; br < kTemplateBlocks; ++br) {
                for (int bc = 0; bc < kTemplateBlocks; ++bc) {
                    const double v = 0.5 + amplitude * sign[br * kTemplateBlocks + bc];
                    for (int r = rows[br]; r < rows[br + 1]; ++r)
                        for (int col = cols[bc]; col < cols[bc + 1]; ++col)
                            data[(static_cast<std::size_t>(c) * shape.height + r) * shape.width + col] = v;
                }
            }
        }
        templates.emplace_back(shape, std::move(data));
    }
    return templates;
}

Dataset synthetic_blob_dataset(std::size_t n_per_class, Shape shape, std::size_t n_classes,
                               double separation, Rng& rng) {
    if (n_classes < 2) throw InvalidInput("blob dataset needs at least two classes");
    const auto templates = blob_templates(shape, n_classes, separation, rng);
    std::normal_distribution<double> noise(0.0, kPixelNoise);
    Dataset data;
    data.reserve(n_per_class * n_classes);
    for (std::size_t k = 0; k < n_classes; ++k) {
        const auto base = templates[k].data();
        for (std::size_t i = 0; i < n_per_class; ++i) {
            std::vector<double> px(base.begin(), base.end());
            for (double& v : px) v = std::clamp(v + noise(rng), 0.0, 1.0);
            data.push_back({ImageTensor(shape, std::move(px)), k});
        }
    }
    return data;
}

}  // namespace bbox

namespace bbox {

LinearModel nearest_template_model(const std::vector<ImageTensor>& templates) {
    if (templates.size() < 2) throw InvalidInput("need at least two templates");
    const Shape shape = templates.front().shape();
    Eigen::MatrixXd weights(static_cast<Eigen::Index>(templates.size()), static_cast<Eigen::Index>(shape.size()));
    for (std::size_t k = 0; k < templates.size(); ++k) {
        if (templates[k].shape() != shape) throw ShapeError("templates must share one shape");
        const auto px = templates[k].data();
        for (std::size_t i = 0; i < px.size(); ++i) {
            const double centered = px[i] - 0.5;
            weights(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
                centered > 0.0 ? 1.0 : (centered < 0.0 ? -1.0 : 0.0);
        }
    }
    return LinearModel(shape, std::move(weights), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(templates.size())));
}

}  // namespace bbox
