#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bbox/dfo.hpp"
#include "bbox/models.hpp"
#include "bbox/objectives.hpp"

namespace bbox {

struct CampaignConfig {
    OptimizerKind optimizer = OptimizerKind::OnePlusOneCauchy;
    ProblemForm form = ProblemForm::Continuous;
    AttackMode mode = AttackMode::Untargeted;
    LossKind loss = LossKind::CrossEntropy;
    double epsilon = 0.05;
    int n_tiles = 50;
    bool per_channel = true;
    std::size_t query_limit = 10000;
    /// Attack at most this many images (0 means all of them).
    std::size_t image_count = 0;
    std::uint64_t seed = 0;
    /// Start the optimizer at a random tiled sign pattern.
    bool warm_start = true;
    double warm_start_scale = 2.0;
    CornerParameterization corners = CornerParameterization::TwoVariable;
    std::size_t workers = 1;
    /// Store measured wall time in results; off keeps exports byte-reproducible.
    bool record_wall_time = false;

    /// Throws InvalidInput on out-of-range fields.
    void validate() const;
};

/// Reads `key = value` lines (field names as in CampaignConfig, '#' comments).
/// Unknown keys are rejected.
/// `keys`, when given, receives the names of the keys that were set.
CampaignConfig load_config(const std::filesystem::path& path, std::vector<std::string>* keys = nullptr);
CampaignConfig parse_config(const std::string& text, CampaignConfig base = {},
                            std::vector<std::string>* keys = nullptr);

struct AttackResult {
    std::size_t image_id = 0;
    bool initially_correct = false;
    bool success = false;
    std::size_t queries_used = 0;
    double final_loss = 0.0;
    double wall_ms = 0.0;
    bool failed = false;  ///< the oracle raised an error; the image was aborted
    std::string error;
};

struct CampaignStats {
    /// Fraction of initially correct images that were fooled; empty when no
    /// image was initially correct.
    std::optional<double> success_rate;
    /// Query statistics over successful attacks; empty without successes.
    std::optional<double> average_queries;
    std::optional<double> median_queries;
    /// Same statistics over every initially correct image (failures count
    /// with the queries they used).
    std::optional<double> average_queries_all;
    std::optional<double> median_queries_all;
    std::size_t query_limit = 0;
    std::vector<AttackResult> results;  ///< ordered by image id
};

/// Recomputes every statistic from per-image results.
CampaignStats summarize(std::vector<AttackResult> results, std::size_t query_limit);

/// Median of a non-empty sample; mean of the middle pair for even sizes.
double median(std::vector<double> values);

/// Attacks one image. The clean classification is one extra, uncharged model
/// call. `target` is required in targeted mode and ignored otherwise.
AttackResult run_attack(const CampaignConfig& config, const ImageTensor& image, std::size_t label,
                        std::optional<std::size_t> target, const ModelOracle& model, Rng& rng,
                        std::size_t image_id = 0);

/// Runs independent attacks on the first `image_count` images, each with its
/// own stream derived from (seed, image id). Targets for targeted mode are drawn
/// uniformly among the wrong labels from a campaign-level stream.
CampaignStats run_campaign(const CampaignConfig& config, const Dataset& images, const ModelOracle& model);

struct SweepResult {
    std::vector<double> epsilons;
    std::vector<int> tile_counts;
    /// success_rate[e][t] for epsilons[e] and tile_counts[t]
    std::vector<std::vector<double>> success_rate;
    std::size_t images_used = 0;  ///< initially correct images
};

/// One single-shot random tiled attack per (epsilon, tile count, image), over
/// the images the model classifies correctly.
SweepResult tile_sweep(const ModelOracle& model, const Dataset& images, const std::vector<double>& epsilons,
                       const std::vector<int>& tile_counts, Rng& rng, bool per_channel = true);

/// (queries, cumulative success rate) at each distinct success query count, plus
/// a final row at the query limit. Rates are over initially correct images.
std::vector<std::pair<std::size_t, double>> cumulative_success_curve(const CampaignStats& stats);

/// Writes results.csv, curve.csv and summary.csv into `directory` (created if missing).
void export_results(const CampaignStats& stats, const std::filesystem::path& directory);
/// Reads a results.csv written by export_results.
std::vector<AttackResult> read_results(const std::filesystem::path& path);
/// Rebuilds the statistics from a directory written by export_results.
CampaignStats import_results(const std::filesystem::path& directory);
void export_sweep(const SweepResult& sweep, const std::filesystem::path& path);

}  // namespace bbox
