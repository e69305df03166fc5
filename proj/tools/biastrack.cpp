// biastrack: popularity-bias audit runner.
//
//   biastrack run -c <config> [-o <dir>] [--candidate-min-listeners N] [--subsample F]
//   biastrack stats -i <tsv>
//   biastrack groups (-i <tsv> | -c <config>) [--groups-file <csv>] [--group-size N] [-o <dir>]
//   biastrack train-eval -c <config> [-o <dir>] [--candidate-min-listeners N] [--subsample F]
//   biastrack gap -c <config> [-o <dir>]
//   biastrack report -o <dir>
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 internal error.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <string>

#include <CLI11.hpp>

#include "biastrack/config.hpp"
#include "biastrack/errors.hpp"
#include "biastrack/pipeline.hpp"
#include "biastrack/profiling.hpp"
#include "biastrack/reports.hpp"

namespace {

using namespace biastrack;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct Overrides {
    std::string output;
    std::optional<std::size_t> candidate_min_listeners;
    std::optional<double> subsample;
};

ExperimentConfig load_with(const std::string& path, const Overrides& o) {
    auto config = load_config(path);
    if (!o.output.empty()) config.output_dir = o.output;
    if (o.candidate_min_listeners) config.candidate_min_listeners = *o.candidate_min_listeners;
    if (o.subsample) config.subsample = *o.subsample;
    check_paths(config);
    return config;
}

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--candidate-min-listeners", o.candidate_min_listeners,
                    "Only rank items with at least this many listeners");
    cmd->add_option("--subsample", o.subsample, "Fraction of interactions kept (0, 1]")
        ->check(CLI::Range(0.0, 1.0));
}

void print_stats(const InteractionStore& store) {
    const auto table = flag_top_popular(item_popularity(store));
    const auto curve = long_tail_curve(table);
    const auto slots = std::accumulate(curve.begin(), curve.end(), std::size_t{0});
    const auto head = table.flagged_count();
    const auto head_slots = std::accumulate(curve.begin(), curve.begin() + static_cast<std::ptrdiff_t>(head),
                                            std::size_t{0});
    const auto singles = static_cast<std::size_t>(std::count(curve.begin(), curve.end(), 1));

    const auto s = store.stats();
    std::cout << "users\t" << s.n_users << '\n'
              << "items\t" << s.n_items << '\n'
              << "interactions\t" << s.n_interactions << '\n'
              << "max_listeners\t" << curve.front() << '\n'
              << "median_listeners\t" << curve[curve.size() / 2] << '\n'
              << "single_listener_items\t" << singles << '\n'
              << "top20_items\t" << head << '\n'
              << "top20_listener_share\t"
              << format_number(static_cast<double>(head_slots) / static_cast<double>(slots)) << '\n';
}

void print_table(const std::filesystem::path& file) {
    if (!std::filesystem::exists(file)) return;
    std::cout << "== " << file.filename().string() << '\n' << read_file(file);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"biastrack: popularity bias audit for rating-prediction recommenders"};
    app.require_subcommand(1);

    std::string config_path, input_path, groups_file;
    Overrides over;
    auto& output_dir = over.output;
    std::size_t group_size = 0;
    double quantile = kDefaultPopularQuantile;

    auto* run = app.add_subcommand("run", "Run the full experiment");
    run->add_option("-c,--config", config_path, "Experiment config")->required();
    run->add_option("-o,--output", output_dir, "Output directory (overrides the config)");
    add_overrides(run, over);

    auto* stats = app.add_subcommand("stats", "Print dataset statistics");
    stats->add_option("-i,--input", input_path, "Interactions file (user<TAB>item<TAB>count)")
        ->required();

    auto* groups = app.add_subcommand("groups", "Profiling figures and user groups");
    auto* groups_input = groups->add_option("-i,--input", input_path, "Interactions file");
    auto* groups_config = groups->add_option("-c,--config", config_path, "Experiment config");
    groups_input->excludes(groups_config);
    groups->add_option("--groups-file", groups_file, "Precomputed groups CSV (user_id,group)");
    groups->add_option("--group-size", group_size, "Users per group (default: a third)");
    groups->add_option("--quantile", quantile, "Popular-item quantile")->check(CLI::Range(0.0, 1.0));
    groups->add_option("-o,--output", output_dir, "Output directory");
    groups->add_option("--subsample", over.subsample, "Fraction of interactions kept (0, 1]")
        ->check(CLI::Range(0.0, 1.0));

    auto* train_eval = app.add_subcommand("train-eval", "Fit, predict, rank and score");
    train_eval->add_option("-c,--config", config_path, "Experiment config")->required();
    train_eval->add_option("-o,--output", output_dir, "Output directory");
    add_overrides(train_eval, over);

    auto* gap = app.add_subcommand("gap", "Group average popularity from stored lists");
    gap->add_option("-c,--config", config_path, "Experiment config")->required();
    gap->add_option("-o,--output", output_dir, "Output directory");
    gap->add_option("--subsample", over.subsample, "Fraction of interactions kept (0, 1]")
        ->check(CLI::Range(0.0, 1.0));

    auto* report = app.add_subcommand("report", "Digest outputs into manifest.json");
    report->add_option("-o,--output", output_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        std::vector<StageRecord> log;
        if (*run) {
            const auto manifest = run_experiment(load_with(config_path, over));
            for (const auto& f : manifest.files) std::cout << f.sha256 << "  " << f.name << '\n';
        } else if (*stats) {
            print_stats(load_interactions(input_path));
        } else if (*groups) {
            if (input_path.empty() && config_path.empty())
                throw ConfigError("groups: give -i <tsv> or -c <config>");
            ProfilingParams params;
            std::optional<ExperimentConfig> config;
            if (!config_path.empty()) {
                config = load_with(config_path, over);
                params = profiling_params(*config);
            }
            if (!groups_file.empty()) params.groups_file = groups_file;
            if (group_size > 0) params.group_size = group_size;
            if (groups->count("--quantile") > 0) params.popular_quantile = quantile;
            if (params.groups_file && !std::filesystem::is_regular_file(*params.groups_file))
                throw IoError("missing stage input: " + params.groups_file->string());

            auto store = config ? load_dataset(*config) : load_interactions(input_path);
            if (!config && over.subsample && *over.subsample < 1.0)
                store = subsample_interactions(store, *over.subsample, 1);
            OutputSet out(config ? config->output_dir
                                 : std::filesystem::path(output_dir.empty() ? "." : output_dir));
            if (config && config->synthetic) write_synthetic_dump(store, out);
            profiling_stage(store, params, out, log);
            out.commit();
            std::cout << "wrote " << (out.dir() / kGroupsFile).string() << '\n';
        } else if (*train_eval) {
            const auto config = load_with(config_path, over);
            const auto store = load_dataset(config);
            OutputSet out(config.output_dir);
            train_eval_stage(store, config, out, log);
            out.commit();
            print_table(out.dir() / "table1.csv");
        } else if (*gap) {
            const auto config = load_with(config_path, over);
            const auto store = load_dataset(config);
            OutputSet out(config.output_dir);
            gap_stage(store, config, out, log);
            out.commit();
            print_table(out.dir() / "figure4.csv");
        } else if (*report) {
            const std::filesystem::path dir(output_dir);
            RunManifest manifest;
            manifest.version = std::string(toolkit_version());
            manifest.files = digest_files(dir, known_outputs(dir));
            OutputSet out(dir);
            out.write(std::string(kManifestFile), manifest.to_json());
            out.commit();
            print_table(dir / "table1.csv");
            print_table(dir / "figure3_summary.csv");
            print_table(dir / "figure4.csv");
        }
        for (const auto& s : log)
            std::cerr << s.name << ": " << s.records << " records, " << s.seconds << " s\n";
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return 0;
}
