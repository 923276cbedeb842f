#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bbox/rng.hpp"
#include "bbox/tensor.hpp"

namespace bbox {

class ModelOracle;

/// Cut positions floor(i * extent / n_tiles) for i = 0..n_tiles. Throws
/// InvalidGrid unless 1 <= n_tiles <= extent.
std::vector<int> tile_boundaries(int extent, int n_tiles);

/// Square tiling of an image: n_tiles x n_tiles cells, each holding one value
/// (one per channel when per_channel is set). Tile values are ordered
/// row-major over (channel, tile_row, tile_col).
class TileGrid {
public:
    TileGrid(Shape image_shape, int n_tiles, bool per_channel = true);

    const Shape& image_shape() const noexcept { return shape_; }
    int n_tiles() const noexcept { return n_tiles_; }
    bool per_channel() const noexcept { return per_channel_; }
    std::size_t search_dimension() const noexcept;

    const std::vector<int>& row_cuts() const noexcept { return rows_; }
    const std::vector<int>& col_cuts() const noexcept { return cols_; }

    /// Full-resolution perturbation (length C*H*W) that is constant on each tile.
    std::vector<double> expand(std::span<const double> tile_values) const;

private:
    Shape shape_;
    int n_tiles_;
    bool per_channel_;
    std::vector<int> rows_;
    std::vector<int> cols_;
};

/// Independent fair +/-epsilon signs, one per tile value.
std::vector<double> random_signed_tiles(const TileGrid& grid, double epsilon, Rng& rng);

struct SingleShotOutcome {
    bool success = false;
    ImageTensor perturbed;
};

/// Draws one random tiled sign pattern, applies it and queries the model once.
/// Success means the predicted class moved away from `label`.
SingleShotOutcome single_shot_tiled_attack(const ModelOracle& model, const ImageTensor& x,
                                           std::size_t label, double epsilon,
                                           const TileGrid& grid, Rng& rng);

}  // namespace bbox
