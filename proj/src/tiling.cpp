#include "bbox/tiling.hpp"

#include <algorithm>
#include <string>

#include "bbox/error.hpp"
#include "bbox/models.hpp"

namespace bbox {

std::vector<int> tile_boundaries(int extent, int n_tiles) {
    if (n_tiles < 1 || n_tiles > extent)
        throw InvalidGrid("cannot cut an extent of " + std::to_string(extent) + " into " +
                          std::to_string(n_tiles) + " tiles");
    std::vector<int> cuts(static_cast<std::size_t>(n_tiles) + 1);
    for (int i = 0; i <= n_tiles; ++i)
        cuts[static_cast<std::size_t>(i)] =
            static_cast<int>(static_cast<long long>(i) * extent / n_tiles);
    return cuts;
}

TileGrid::TileGrid(Shape image_shape, int n_tiles, bool per_channel)
    : shape_(image_shape), n_tiles_(n_tiles), per_channel_(per_channel) {
    if (shape_.channels < 1) throw InvalidGrid("image must have at least one channel");
    if (n_tiles < 1 || n_tiles > std::min(shape_.height, shape_.width))
        throw InvalidGrid(std::to_string(n_tiles) + " tiles per side do not fit a " + std::to_string(shape_.height) +
                          "x" + std::to_string(shape_.width) + " image");
    rows_ = tile_boundaries(shape_.height, n_tiles);
    cols_ = tile_boundaries(shape_.width, n_tiles);
}

std::size_t TileGrid::search_dimension() const noexcept {
    const auto cells = static_cast<std::size_t>(n_tiles_) * static_cast<std::size_t>(n_tiles_);
    return per_channel_ ? cells * static_cast<std::size_t>(shape_.channels) : cells;
}

std::vector<double> TileGrid::expand(std::span<const double> tile_values) const {
    if (tile_values.size() != search_dimension())
        throw ShapeError("expected " + std::to_string(search_dimension()) + " tile values, got " +
                         std::to_string(tile_values.size()));
    const auto h = static_cast<std::size_t>(shape_.height);
    const auto w = static_cast<std::size_t>(shape_.width);
    const auto cells = static_cast<std::size_t>(n_tiles_) * static_cast<std::size_t>(n_tiles_);
    std::vector<double> delta(shape_.size());
    for (int c = 0; c < shape_.channels; ++c) {
        const std::size_t base = per_channel_ ? static_cast<std::size_t>(c) * cells : 0;
        for (int tr = 0; tr < n_tiles_; ++tr) {
            for (int tc = 0; tc < n_tiles_; ++tc) {
                const double v = tile_values[base + static_cast<std::size_t>(tr * n_tiles_ + tc)];
                for (int r = rows_[tr]; r < rows_[tr + 1]; ++r) {
                    auto* row = delta.data() + (static_cast<std::size_t>(c) * h + r) * w;
                    std::fill(row + cols_[tc], row + cols_[tc + 1], v);
                }
            }
        }
    }
    return delta;
}

std::vector<double> random_signed_tiles(const TileGrid& grid, double epsilon, Rng& rng) {
    if (!(epsilon >= 0.0)) throw InvalidInput("epsilon must be non-negative");
    std::bernoulli_distribution coin(0.5);
    std::vector<double> values(grid.search_dimension());
    for (double& v : values) v = coin(rng) ? epsilon : -epsilon;
    return values;
}

SingleShotOutcome single_shot_tiled_attack(const ModelOracle& model, const ImageTensor& x,
                                           std::size_t label, double epsilon,
                                           const TileGrid& grid, Rng& rng) {
    const auto values = random_signed_tiles(grid, epsilon, rng);
    SingleShotOutcome outcome;
    outcome.perturbed = apply_perturbation(x, grid.expand(values));
    const auto logits = model.logits(outcome.perturbed);
    outcome.success = argmax(logits.values()) != label;
    return outcome;
}

}  // namespace bbox
