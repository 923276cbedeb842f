#include "bbox/cli.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "bbox/benchmarks.hpp"
#include "bbox/error.hpp"
#include "bbox/remote.hpp"

namespace bbox::cli {

namespace {

constexpr Shape kBuiltinShape{3, 16, 16};
constexpr std::size_t kBuiltinClasses = 4;
constexpr std::size_t kBuiltinPerClass = 50;

const std::vector<std::string> kOptimizerNames{"opo-cauchy", "opo-gauss", "cma", "cma-diag", "random", "de"};

ProblemForm parse_form(const std::string& name) {
    return name == "discrete" ? ProblemForm::Discrete : ProblemForm::Continuous;
}

AttackMode parse_mode(const std::string& name) {
    return name == "targeted" ? AttackMode::Targeted : AttackMode::Untargeted;
}

std::string optional_text(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

int run_attack_command(const AttackCommand& cmd, std::ostream& out) {
    const auto source = resolve_model(cmd.model, cmd.campaign.seed);
    const CountingOracle counted(*source.model);
    const auto stats = run_campaign(cmd.campaign, source.images, counted);
    export_results(stats, cmd.out);

    std::size_t correct = 0;
    for (const auto& r : stats.results) correct += r.initially_correct ? 1 : 0;
    out << "optimizer " << to_string(cmd.campaign.optimizer) << ", " << stats.results.size() << " images, "
        << correct << " initially correct\n"
        << "success rate    " << optional_text(stats.success_rate) << '\n'
        << "average queries " << optional_text(stats.average_queries) << '\n'
        << "median queries  " << optional_text(stats.median_queries) << '\n'
        << "model calls     " << counted.calls() << '\n'
        << "results written to " << cmd.out.string() << '\n';
    return 0;
}

int run_sweep_command(const SweepCommand& cmd, std::ostream& out) {
    const auto source = resolve_model(cmd.model, cmd.seed);
    Rng rng(derive_seed(cmd.seed, 1));
    const auto sweep = tile_sweep(*source.model, source.images, cmd.epsilons, cmd.tile_counts, rng, cmd.per_channel);
    export_sweep(sweep, cmd.out / "sweep.csv");
    out << "single-shot success rate over " << sweep.images_used << " images\n";
    out << "eps \\ tiles";
    for (int t : sweep.tile_counts) out << '\t' << t;
    out << '\n';
    for (std::size_t e = 0; e < sweep.epsilons.size(); ++e) {
        out << sweep.epsilons[e];
        for (double r : sweep.success_rate[e]) out << '\t' << r;
        out << '\n';
    }
    return 0;
}

int run_bench_command(const BenchCommand& cmd, std::ostream& out) {
    // optimum at the all-ones point so that the zero start is not already optimal
    const auto objective = bench::by_name(cmd.function, Vector::Ones(static_cast<Eigen::Index>(cmd.dimension)));
    Rng rng(cmd.seed);
    MinimizeOptions options;
    options.budget = cmd.budget;
    std::ofstream trace;
    if (cmd.out) {
        std::filesystem::create_directories(*cmd.out);
        trace.open(*cmd.out / "trace.csv", std::ios::binary);
        if (!trace) throw Error("cannot open trace file");
        options.trace = &trace;
    }
    const auto result = minimize(objective, cmd.optimizer, cmd.dimension, options, rng);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", result.best_value);
    out << cmd.function << " d=" << cmd.dimension << " optimizer=" << to_string(cmd.optimizer)
        << " evaluations=" << result.evaluations << " best=" << buf << '\n';
    return 0;
}

int run_check_command(const CheckServerCommand& cmd, std::ostream& out) {
    const RemoteModel remote(cmd.endpoint.find("://") == std::string::npos ? "http://" + cmd.endpoint
                                                                          : cmd.endpoint);
    const auto shape = remote.input_shape();
    out << "shape " << shape.channels << 'x' << shape.height << 'x' << shape.width << ", classes "
        << remote.num_classes() << '\n';
    return 0;
}

}  // namespace

ModelSource resolve_model(const std::string& uri, std::uint64_t seed) {
    ModelSource source;
    Rng rng(derive_seed(seed, 0x6d6f64656c));
    if (uri == "builtin:linear" || uri == "builtin:mlp") {
        Rng data_rng = rng;
        const auto templates = blob_templates(kBuiltinShape, kBuiltinClasses, kBuiltinSeparation, data_rng);
        source.images = synthetic_blob_dataset(kBuiltinPerClass, kBuiltinShape, kBuiltinClasses, kBuiltinSeparation, rng);
        if (uri == "builtin:linear") {
            source.model = std::make_unique<LinearModel>(nearest_template_model(templates));
        } else {
            source.model = std::make_unique<MlpModel>(train_toy_mlp(source.images, TrainOptions{}, rng));
        }
        return source;
    }
    if (uri.rfind("file:", 0) == 0) {
        source.model = load_model(uri.substr(5));
    } else if (uri.rfind("http:", 0) == 0) {
        const std::string rest = uri.substr(5);
        source.model = std::make_unique<RemoteModel>(rest.rfind("//", 0) == 0 ? "http:" + rest : "http://" + rest);
    } else {
        throw InvalidInput("unknown model source '" + uri + "'");
    }
    // TODO: accept an image file for file:/http: models instead of synthetic blobs
    source.images = synthetic_blob_dataset(kBuiltinPerClass, source.model->input_shape(), source.model->num_classes(),
                                           kBuiltinSeparation, rng);
    return source;
}

Command parse_args(const std::vector<std::string>& args) {
    CLI::App app{"Black-box adversarial attacks with derivative-free optimizers", "bbox"};
    app.require_subcommand(1, 1);

    AttackCommand attack;
    std::string config_path;
    std::size_t budget = 0;
    auto* a = app.add_subcommand("attack", "Run an attack campaign and write CSV results");
    a->add_option("--model", attack.model, "builtin:linear, builtin:mlp, file:<path> or http:<endpoint>")
        ->capture_default_str();
    a->add_option("--config", config_path, "key = value campaign config; flags override it");
    auto* eps_opt = a->add_option("--eps", attack.campaign.epsilon, "l-infinity budget")
                        ->check(CLI::PositiveNumber)->capture_default_str();
    auto* tiles_opt = a->add_option("--tiles", attack.campaign.n_tiles, "tiles per image side")
                          ->check(CLI::PositiveNumber)->capture_default_str();
    auto* budget_opt = a->add_option("--budget", budget, "queries per image (default 10000, 100000 targeted)")
                           ->check(CLI::PositiveNumber);
    std::string optimizer = "opo-cauchy";
    std::string form = "continuous";
    std::string mode = "untargeted";
    std::string loss = "ce";
    auto* opt_opt = a->add_option("--optimizer", optimizer, "optimizer")
                        ->check(CLI::IsMember(kOptimizerNames))->capture_default_str();
    auto* form_opt = a->add_option("--form", form, "problem form")
                         ->check(CLI::IsMember({"continuous", "discrete"}))->capture_default_str();
    auto* mode_opt = a->add_option("--mode", mode, "attack mode")
                         ->check(CLI::IsMember({"untargeted", "targeted"}))->capture_default_str();
    auto* loss_opt = a->add_option("--loss", loss, "attack loss")
                         ->check(CLI::IsMember({"ce", "cw"}))->capture_default_str();
    auto* seed_opt = a->add_option("--seed", attack.campaign.seed, "campaign seed");
    auto* workers_opt = a->add_option("--workers", attack.campaign.workers, "parallel attacks")
                            ->check(CLI::PositiveNumber);
    auto* images_opt = a->add_option("--images", attack.campaign.image_count, "attack only the first N images");
    bool timing = false;
    a->add_flag("--timing", timing, "record wall time per image (results are then not byte-reproducible)");
    a->add_option("--out", attack.out, "output directory")->capture_default_str();

    SweepCommand sweep;
    auto* s = app.add_subcommand("sweep", "Single-shot tiled random noise success rate vs tile count");
    s->add_option("--model", sweep.model)->capture_default_str();
    s->add_option("--eps", sweep.epsilons, "noise intensities")->delimiter(',')->check(CLI::NonNegativeNumber);
    s->add_option("--tiles", sweep.tile_counts, "tile counts per side")->delimiter(',')->check(CLI::PositiveNumber);
    s->add_option("--seed", sweep.seed);
    s->add_flag("!--shared-channels", sweep.per_channel, "use one tile value across channels");
    s->add_option("--out", sweep.out)->capture_default_str();

    BenchCommand bench;
    auto* b = app.add_subcommand("bench", "Run an optimizer on a benchmark function");
    std::string bench_optimizer = "cma";
    b->add_option("--optimizer", bench_optimizer)->check(CLI::IsMember(kOptimizerNames))->capture_default_str();
    b->add_option("--dim", bench.dimension)->check(CLI::PositiveNumber)->capture_default_str();
    b->add_option("--budget", bench.budget)->check(CLI::PositiveNumber)->capture_default_str();
    b->add_option("--function", bench.function)
        ->check(CLI::IsMember({"sphere", "ellipsoid", "rastrigin"}))->capture_default_str();
    b->add_option("--seed", bench.seed);
    std::string bench_out;
    b->add_option("--out", bench_out, "directory for trace.csv");

    CheckServerCommand check;
    auto* c = app.add_subcommand("check-server", "Query /meta of a model server");
    c->add_option("endpoint", check.endpoint, "http://host:port")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::ostringstream usage;
        app.exit(e, usage, usage);
        throw UsageError{usage.str(), 0};
    } catch (const CLI::ParseError& e) {
        std::ostringstream usage;
        usage << e.what() << "\n\n" << app.help();
        throw UsageError{usage.str(), 2};
    }

    if (a->parsed()) {
        attack.campaign.optimizer = parse_optimizer_kind(optimizer);
        attack.campaign.form = parse_form(form);
        attack.campaign.mode = parse_mode(mode);
        attack.campaign.loss = parse_loss_kind(loss);
        bool config_sets_budget = false;
        if (!config_path.empty()) {
            attack.config_path = config_path;
            // config first, then explicit flags on top
            CampaignConfig flags = attack.campaign;
            std::vector<std::string> keys;
            try {
                attack.campaign = load_config(config_path, &keys);
            } catch (const Error& e) {
                throw UsageError{std::string(e.what()) + "\n", 2};
            }
            if (eps_opt->count()) attack.campaign.epsilon = flags.epsilon;
            if (tiles_opt->count()) attack.campaign.n_tiles = flags.n_tiles;
            if (opt_opt->count()) attack.campaign.optimizer = flags.optimizer;
            if (form_opt->count()) attack.campaign.form = flags.form;
            if (mode_opt->count()) attack.campaign.mode = flags.mode;
            if (loss_opt->count()) attack.campaign.loss = flags.loss;
            if (seed_opt->count()) attack.campaign.seed = flags.seed;
            if (workers_opt->count()) attack.campaign.workers = flags.workers;
            if (images_opt->count()) attack.campaign.image_count = flags.image_count;
            config_sets_budget = std::find(keys.begin(), keys.end(), "query_limit") != keys.end();
        }
        if (budget_opt->count())
            attack.campaign.query_limit = budget;
        else if (!config_sets_budget)
            attack.campaign.query_limit = attack.campaign.mode == AttackMode::Targeted ? 100000 : 10000;
        if (timing) attack.campaign.record_wall_time = true;
        return attack;
    }
    if (s->parsed()) return sweep;
    if (b->parsed()) {
        bench.optimizer = parse_optimizer_kind(bench_optimizer);
        if (!bench_out.empty()) bench.out = bench_out;
        return bench;
    }
    return check;
}

int execute(const Command& command, std::ostream& out, std::ostream& err) {
    try {
        return std::visit(
            [&](const auto& cmd) -> int {
                using T = std::decay_t<decltype(cmd)>;
                if constexpr (std::is_same_v<T, AttackCommand>) return run_attack_command(cmd, out);
                else if constexpr (std::is_same_v<T, SweepCommand>) return run_sweep_command(cmd, out);
                else if constexpr (std::is_same_v<T, BenchCommand>) return run_bench_command(cmd, out);
                else return run_check_command(cmd, out);
            },
            command);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Command command;
    try {
        command = parse_args(args);
    } catch (const UsageError& e) {
        (e.exit_code == 0 ? out : err) << e.usage;
        return e.exit_code;
    }
    return execute(command, out, err);
}

}  // namespace bbox::cli
