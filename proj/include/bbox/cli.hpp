#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bbox/campaign.hpp"
#include "bbox/dfo.hpp"
#include "bbox/models.hpp"

namespace bbox::cli {

struct AttackCommand {
    std::string model = "builtin:mlp";
    std::optional<std::filesystem::path> config_path;
    CampaignConfig campaign;
    std::filesystem::path out = "out";
};

struct SweepCommand {
    std::string model = "builtin:mlp";
    std::vector<double> epsilons{0.01, 0.03, 0.05, 0.1};
    std::vector<int> tile_counts{1, 2, 4, 8, 16};
    std::uint64_t seed = 0;
    bool per_channel = true;
    std::filesystem::path out = "out";
};

struct BenchCommand {
    OptimizerKind optimizer = OptimizerKind::CmaFull;
    std::size_t dimension = 10;
    std::size_t budget = 3000;
    std::string function = "sphere";
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> out;
};

struct CheckServerCommand {
    std::string endpoint;
};

using Command = std::variant<AttackCommand, SweepCommand, BenchCommand, CheckServerCommand>;

/// Bad command line. `usage` holds the text to print; `exit_code` is 0 for --help.
struct UsageError {
    std::string usage;
    int exit_code = 2;
};

/// Throws UsageError. `args` excludes the program name.
Command parse_args(const std::vector<std::string>& args);

/// Runs a parsed command. Returns 0 on success, 1 on runtime error.
int execute(const Command& command, std::ostream& out, std::ostream& err);

/// parse_args + execute with the 0/1/2 exit-code contract.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// A model source plus the images to attack with it.
struct ModelSource {
    std::unique_ptr<ModelOracle> model;
    Dataset images;
};

/// Resolves `builtin:linear`, `builtin:mlp`, `file:<path>` or `http:<endpoint>`.
/// Images are a synthetic blob dataset matching the model's input shape.
ModelSource resolve_model(const std::string& uri, std::uint64_t seed);

/// Blob separation used for the built-in toy models.
inline constexpr double kBuiltinSeparation = 0.05;

}  // namespace bbox::cli
