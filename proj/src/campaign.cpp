#include "bbox/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "bbox/error.hpp"
#include "bbox/tiling.hpp"

namespace bbox {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw InvalidInput("config key '" + key + "' expects a boolean, got '" + value + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out{};
    in >> out;
    if (!in || !in.eof() || (std::is_unsigned_v<T> && value.find('-') != std::string::npos))
        throw InvalidInput("config key '" + key + "' has invalid value '" + value + "'");
    return out;
}

}  // namespace

void CampaignConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidInput("epsilon must be positive");
    if (n_tiles < 1) throw InvalidInput("n_tiles must be at least 1");
    if (query_limit < 1) throw InvalidInput("query limit must be at least 1");
    if (workers < 1) throw InvalidInput("workers must be at least 1");
    if (!(warm_start_scale > 0.0)) throw InvalidInput("warm_start_scale must be positive");
}

CampaignConfig parse_config(const std::string& text, CampaignConfig config, std::vector<std::string>* keys) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(line_no) + " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (keys) keys->push_back(key);
        if (key == "optimizer") {
            config.optimizer = parse_optimizer_kind(value);
        } else if (key == "form") {
            if (value == "continuous") config.form = ProblemForm::Continuous;
            else if (value == "discrete") config.form = ProblemForm::Discrete;
            else throw InvalidInput("form must be continuous or discrete");
        } else if (key == "mode") {
            if (value == "untargeted") config.mode = AttackMode::Untargeted;
            else if (value == "targeted") config.mode = AttackMode::Targeted;
            else throw InvalidInput("mode must be untargeted or targeted");
        } else if (key == "loss") {
            config.loss = parse_loss_kind(value);
        } else if (key == "epsilon") {
            config.epsilon = parse_number<double>(key, value);
        } else if (key == "n_tiles") {
            config.n_tiles = parse_number<int>(key, value);
        } else if (key == "per_channel") {
            config.per_channel = parse_bool(key, value);
        } else if (key == "query_limit") {
            config.query_limit = parse_number<std::size_t>(key, value);
        } else if (key == "image_count") {
            config.image_count = parse_number<std::size_t>(key, value);
        } else if (key == "seed") {
            config.seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "warm_start") {
            config.warm_start = parse_bool(key, value);
        } else if (key == "warm_start_scale") {
            config.warm_start_scale = parse_number<double>(key, value);
        } else if (key == "corners") {
            if (value == "two") config.corners = CornerParameterization::TwoVariable;
            else if (value == "single") config.corners = CornerParameterization::SingleVariable;
            else throw InvalidInput("corners must be two or single");
        } else if (key == "workers") {
            config.workers = parse_number<std::size_t>(key, value);
        } else if (key == "record_wall_time") {
            config.record_wall_time = parse_bool(key, value);
        } else {
            throw InvalidInput("unknown config key '" + key + "'");
        }
    }
    config.validate();
    return config;
}

CampaignConfig load_config(const std::filesystem::path& path, std::vector<std::string>* keys) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), {}, keys);
}

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("median of an empty sample");
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

CampaignStats summarize(std::vector<AttackResult> results, std::size_t query_limit) {
    std::sort(results.begin(), results.end(),
              [](const AttackResult& a, const AttackResult& b) { return a.image_id < b.image_id; });
    CampaignStats stats;
    stats.query_limit = query_limit;
    std::vector<double> success_queries;
    std::vector<double> all_queries;
    for (const auto& r : results) {
        if (!r.initially_correct) continue;
        all_queries.push_back(static_cast<double>(r.queries_used));
        if (r.success) success_queries.push_back(static_cast<double>(r.queries_used));
    }
    auto mean = [](const std::vector<double>& v) {
        double total = 0.0;
        for (double x : v) total += x;
        return total / static_cast<double>(v.size());
    };
    if (!all_queries.empty()) {
        stats.success_rate = static_cast<double>(success_queries.size()) / static_cast<double>(all_queries.size());
        stats.average_queries_all = mean(all_queries);
        stats.median_queries_all = median(all_queries);
    }
    if (!success_queries.empty()) {
        stats.average_queries = mean(success_queries);
        stats.median_queries = median(success_queries);
    }
    stats.results = std::move(results);
    return stats;
}

AttackResult run_attack(const CampaignConfig& config, const ImageTensor& image, std::size_t label,
                        std::optional<std::size_t> target, const ModelOracle& model, Rng& rng,
                        std::size_t image_id) {
    const auto start = std::chrono::steady_clock::now();
    AttackResult result;
    result.image_id = image_id;
    auto finish = [&]() -> AttackResult {
        if (config.record_wall_time)
            result.wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return result;
    };

    try {
        const auto clean = model.logits(image);
        result.initially_correct = argmax(clean.values()) == label;
    } catch (const Error& e) {
        result.failed = true;
        result.error = e.what();
        return finish();
    }
    if (!result.initially_correct) return finish();
    if (config.mode == AttackMode::Targeted && !target)
        throw InvalidInput("targeted attacks need a target label");
    if (config.mode == AttackMode::Untargeted) target.reset();

    const AttackSpec spec(image, label, config.epsilon, config.loss,
                          TileGrid(image.shape(), config.n_tiles, config.per_channel), target);
    QueryCounter counter(config.query_limit);
    AttackObjective objective(spec, model, counter, config.form, rng, config.corners);

    Vector mean = Vector::Zero(static_cast<Eigen::Index>(objective.search_dimension()));
    if (config.warm_start) {
        const auto signs = random_signed_tiles(spec.grid(), 1.0, rng);
        mean = objective.warm_start(signs, config.warm_start_scale);
    }
    auto optimizer = make_optimizer(config.optimizer, std::move(mean));

    MinimizeOptions options;
    options.budget = config.query_limit;
    options.evaluate_initial_mean = config.warm_start;
    options.stop = [&objective](const Vector&, double) { return objective.succeeded(); };
    const auto run = minimize([&objective](const Vector& x) { return objective(x); }, *optimizer, options, rng);

    result.queries_used = counter.used();
    result.success = objective.succeeded();
    result.final_loss = objective.best_loss();
    if (run.aborted) {
        result.failed = true;
        result.error = run.error_message;
    }
    return finish();
}

CampaignStats run_campaign(const CampaignConfig& config, const Dataset& images, const ModelOracle& model) {
    config.validate();
    const std::size_t n =
        config.image_count == 0 ? images.size() : std::min(config.image_count, images.size());
    if (n == 0) throw InvalidInput("campaign needs at least one image");
    // fail fast on a grid that cannot fit the model input
    TileGrid(model.input_shape(), config.n_tiles, config.per_channel);

    std::vector<std::optional<std::size_t>> targets(n);
    if (config.mode == AttackMode::Targeted) {
        const auto classes = model.num_classes();
        Rng campaign_rng(derive_seed(config.seed, ~std::uint64_t{0}));
        std::uniform_int_distribution<std::size_t> pick(0, classes - 2);
        for (std::size_t i = 0; i < n; ++i) {
            auto t = pick(campaign_rng);
            if (t >= images[i].label) ++t;
            targets[i] = t;
        }
    }

    std::vector<AttackResult> results(n);
    auto attack = [&](std::size_t i) {
        Rng rng(derive_seed(config.seed, i));
        results[i] = run_attack(config, images[i].image, images[i].label, targets[i], model, rng, i);
    };

    const std::size_t workers = std::min(config.workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) attack(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next++; i < n; i = next++) attack(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return summarize(std::move(results), config.query_limit);
}

SweepResult tile_sweep(const ModelOracle& model, const Dataset& images, const std::vector<double>& epsilons,
                       const std::vector<int>& tile_counts, Rng& rng, bool per_channel) {
    std::vector<const LabeledImage*> correct;
    for (const auto& item : images) {
        if (argmax(model.logits(item.image).values()) == item.label) correct.push_back(&item);
    }
    if (correct.empty()) throw InvalidInput("tile sweep found no correctly classified image");

    SweepResult sweep;
    sweep.epsilons = epsilons;
    sweep.tile_counts = tile_counts;
    sweep.images_used = correct.size();
    for (double eps : epsilons) {
        std::vector<double> row;
        for (int tiles : tile_counts) {
            const TileGrid grid(model.input_shape(), tiles, per_channel);
            std::size_t fooled = 0;
            for (const auto* item : correct) {
                if (single_shot_tiled_attack(model, item->image, item->label, eps, grid, rng).success) ++fooled;
            }
            row.push_back(static_cast<double>(fooled) / static_cast<double>(correct.size()));
        }
        sweep.success_rate.push_back(std::move(row));
    }
    return sweep;
}

}  // namespace bbox
