#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "bbox/campaign.hpp"
#include "bbox/error.hpp"

namespace bbox {

namespace {

constexpr const char* kResultsHeader = "image_id,initially_correct,success,queries,final_loss,wall_ms";
constexpr const char* kCurveHeader = "queries,cumulative_success_rate";

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

std::ofstream open_for_writing(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream in(line);
    std::string field;
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

std::vector<std::pair<std::size_t, double>> cumulative_success_curve(const CampaignStats& stats) {
    std::vector<std::pair<std::size_t, double>> curve;
    if (!stats.success_rate) return curve;
    std::size_t population = 0;
    std::vector<std::size_t> queries;
    for (const auto& r : stats.results) {
        if (!r.initially_correct) continue;
        ++population;
        if (r.success) queries.push_back(r.queries_used);
    }
    std::sort(queries.begin(), queries.end());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (i + 1 < queries.size() && queries[i + 1] == queries[i]) continue;
        if (queries[i] >= stats.query_limit) break;
        curve.emplace_back(queries[i], static_cast<double>(i + 1) / static_cast<double>(population));
    }
    curve.emplace_back(stats.query_limit, *stats.success_rate);
    return curve;
}

void export_results(const CampaignStats& stats, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    {
        auto out = open_for_writing(directory / "results.csv");
        out << kResultsHeader << '\n';
        for (const auto& r : stats.results) {
            char wall[32];
            std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
            out << r.image_id << ',' << (r.initially_correct ? 1 : 0) << ',' << (r.success ? 1 : 0) << ','
                << r.queries_used << ',' << format_double(r.final_loss) << ',' << wall << '\n';
        }
        if (!out) throw Error("failed writing results.csv");
    }
    {
        auto out = open_for_writing(directory / "curve.csv");
        out << kCurveHeader << '\n';
        for (const auto& [q, rate] : cumulative_success_curve(stats)) out << q << ',' << format_double(rate) << '\n';
        if (!out) throw Error("failed writing curve.csv");
    }
    {
        std::size_t correct = 0;
        std::size_t successes = 0;
        for (const auto& r : stats.results) {
            correct += r.initially_correct ? 1 : 0;
            successes += r.success ? 1 : 0;
        }
        auto out = open_for_writing(directory / "summary.csv");
        out << "metric,value\n"
            << "images," << stats.results.size() << '\n'
            << "initially_correct," << correct << '\n'
            << "successes," << successes << '\n'
            << "query_limit," << stats.query_limit << '\n'
            << "success_rate," << format_optional(stats.success_rate) << '\n'
            << "average_queries," << format_optional(stats.average_queries) << '\n'
            << "median_queries," << format_optional(stats.median_queries) << '\n'
            << "average_queries_all," << format_optional(stats.average_queries_all) << '\n'
            << "median_queries_all," << format_optional(stats.median_queries_all) << '\n';
        if (!out) throw Error("failed writing summary.csv");
    }
}

std::vector<AttackResult> read_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader) throw InvalidInput("unexpected results header");
    std::vector<AttackResult> results;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 6) throw InvalidInput("results row needs 6 fields: " + line);
        AttackResult r;
        try {
            r.image_id = std::stoull(f[0]);
            r.initially_correct = f[1] == "1";
            r.success = f[2] == "1";
            r.queries_used = std::stoull(f[3]);
            r.final_loss = std::stod(f[4]);
            r.wall_ms = std::stod(f[5]);
        } catch (const std::logic_error&) {
            throw InvalidInput("malformed results row: " + line);
        }
        results.push_back(r);
    }
    return results;
}

CampaignStats import_results(const std::filesystem::path& directory) {
    std::ifstream in(directory / "summary.csv");
    if (!in) throw Error("cannot open summary.csv in '" + directory.string() + "'");
    std::map<std::string, std::string> summary;
    std::string line;
    while (std::getline(in, line)) {
        const auto f = split(line);
        if (f.size() == 2) summary[f[0]] = f[1];
    }
    const auto it = summary.find("query_limit");
    if (it == summary.end()) throw InvalidInput("summary.csv lacks query_limit");
    return summarize(read_results(directory / "results.csv"), std::stoull(it->second));
}

void export_sweep(const SweepResult& sweep, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto out = open_for_writing(path);
    out << "epsilon,n_tiles,success_rate\n";
    for (std::size_t e = 0; e < sweep.epsilons.size(); ++e)
        for (std::size_t t = 0; t < sweep.tile_counts.size(); ++t)
            out << format_double(sweep.epsilons[e]) << ',' << sweep.tile_counts[t] << ','
                << format_double(sweep.success_rate[e][t]) << '\n';
    if (!out) throw Error("failed writing sweep csv");
}

}  // namespace bbox
