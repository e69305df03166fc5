#include "biastrack/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "biastrack/algorithms.hpp"
#include "biastrack/errors.hpp"
#include "biastrack/evaluation.hpp"
#include "biastrack/profiling.hpp"

#ifndef BIASTRACK_VERSION
#define BIASTRACK_VERSION "0.0.0"
#endif

namespace biastrack {

namespace {

class StageTimer {
public:
    StageTimer(std::vector<StageRecord>& log, std::string name)
        : log_(log), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}

    void done(std::size_t records) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
        log_.push_back({name_, elapsed.count(), records});
    }

private:
    std::vector<StageRecord>& log_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

std::unique_ptr<Model> fit(const AlgorithmSpec& spec, const RatingMatrix& train) {
    switch (spec.kind) {
        case ModelKind::Random: return fit_random(train, spec.seed);
        case ModelKind::MostPopular: return fit_most_popular(train, item_popularity(train));
        case ModelKind::UserItemAvg: return fit_user_item_avg(train, spec.baseline);
        case ModelKind::UserKNN: return fit_user_knn(train, spec.knn);
        case ModelKind::UserKNNAvg: return fit_user_knn_avg(train, spec.knn);
        case ModelKind::NMF: return fit_nmf(train, spec.nmf);
    }
    throw std::logic_error("unhandled model kind");
}

PopularityTable flagged_popularity(const InteractionStore& store, double quantile) {
    return flag_top_popular(item_popularity(store), quantile);
}

}  // namespace

std::string_view toolkit_version() { return BIASTRACK_VERSION; }

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["toolkit"] = "biastrack";
    j["version"] = version;
    j["config"] = config_text;
    j["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : stages)
        j["stages"].push_back({{"name", s.name}, {"seconds", s.seconds}, {"records", s.records}});
    j["files"] = nlohmann::ordered_json::array();
    for (const auto& f : files)
        j["files"].push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    return j.dump(2) + "\n";
}

InteractionStore load_dataset(const ExperimentConfig& config) {
    if (!config.synthetic && !config.input) throw ConfigError("[experiment] input: missing");
    auto store = config.synthetic ? generate_synthetic(*config.synthetic, config.synthetic_seed)
                                  : load_interactions(*config.input);
    if (config.subsample < 1.0)
        store = subsample_interactions(store, config.subsample, config.subsample_seed);
    return store;
}

ProfilingParams profiling_params(const ExperimentConfig& config) {
    return {config.groups_file, config.group_size, config.popular_quantile};
}

void write_synthetic_dump(const InteractionStore& store, OutputSet& out) {
    std::ostringstream dump;
    for (const auto& in : store.interactions())
        dump << in.user_id << '\t' << in.item_id << '\t' << in.listen_count << '\n';
    out.write(std::string(kSyntheticDump), dump.str());
}

void profiling_stage(const InteractionStore& store, const ProfilingParams& params, OutputSet& out,
                     std::vector<StageRecord>& log) {
    StageTimer timer(log, "profiling");
    const auto table = flagged_popularity(store, params.popular_quantile);
    out.write("figure1a.csv", figure1a_csv(table));
    out.write("figure1b.csv", figure1b_csv(store, table));
    out.write("figure2.csv", figure2_csv(store, profile_size_correlations(store, table)));

    if (params.groups_file) {
        const auto loaded = read_groups_csv(*params.groups_file, store.catalog());
        out.write(std::string(kGroupsFile), groups_csv(store.catalog(), loaded.groups, loaded.scores));
    } else {
        const auto scores = mainstreaminess_scores(store);
        const auto size = params.group_size > 0 ? params.group_size : store.n_users() / 3;
        const auto groups = group_users(scores, size);
        std::vector<std::optional<double>> shown(scores.score.begin(), scores.score.end());
        out.write(std::string(kGroupsFile), groups_csv(store.catalog(), groups, shown));
    }
    timer.done(store.n_users());
}

void train_eval_stage(const InteractionStore& store, const ExperimentConfig& config,
                      OutputSet& out, std::vector<StageRecord>& log) {
    const auto groups = read_groups_csv(out.dir() / kGroupsFile, store.catalog()).groups;

    StageTimer split_timer(log, "split");
    const auto matrix = scale_preferences(store);
    const auto split = split_ratings(matrix, config.split_ratio, config.split_seed);
    split_timer.done(split.test.size());

    const auto table = flagged_popularity(store, config.popular_quantile);
    TopNOptions top{config.top_n, config.candidate_min_listeners, &table};
    std::vector<UserIndex> users(store.n_users());
    for (UserIndex u = 0; u < users.size(); ++u) users[u] = u;

    std::vector<MaeReport> mae_reports;
    std::vector<GroupTTest> tests;
    std::vector<Correlations> correlations;
    for (const auto& spec : config.algorithms) {
        StageTimer timer(log, "train-eval:" + std::string(model_name(spec.kind)));
        const auto model = fit(spec, split.train);
        const auto predictions = test_predictions(*model, split);
        mae_reports.push_back(mae_by_group(predictions, groups, config.mae_basis));
        for (auto& t : low_vs_other_t_tests(mae_reports.back(), config.alpha)) tests.push_back(t);

        const auto recs = top_n(*model, split.train, users, top);
        out.write(recommendations_file(spec.kind), recommendations_csv(recs));
        const auto freq = recommendation_frequency(recs);
        out.write(figure3_file(spec.kind), figure3_csv(table, freq));
        Correlations row{spec.kind, std::nullopt};
        try {
            row.r = rec_popularity_correlation(recs, table).r;
        } catch (const DegenerateInputError&) {
        }
        correlations.push_back(row);
        timer.done(predictions.records.size());
    }
    out.write("table1.csv", table1_csv(mae_reports));
    out.write("ttests.csv", ttests_csv(tests));
    out.write("figure3_summary.csv", figure3_summary_csv(correlations));
}

void gap_stage(const InteractionStore& store, const ExperimentConfig& config, OutputSet& out,
               std::vector<StageRecord>& log) {
    StageTimer timer(log, "gap");
    const auto groups = read_groups_csv(out.dir() / kGroupsFile, store.catalog()).groups;
    const auto table = flagged_popularity(store, config.popular_quantile);
    const auto profiles = store.profiles();

    std::vector<GapRow> rows;
    for (const auto& spec : config.algorithms) {
        const auto recs =
            read_recommendations_csv(out.dir() / recommendations_file(spec.kind), store.shared_catalog());
        for (auto g : kGroups) {
            GapRow row{g, spec.kind, 0.0, 0.0, std::nullopt};
            row.gap_p = group_average_popularity(groups.members(g), profiles, table);
            row.gap_r = group_average_popularity(groups.members(g), recs.lists, table);
            if (row.gap_p > 0.0) row.delta = delta_gap(row.gap_r, row.gap_p);
            rows.push_back(row);
        }
    }
    out.write("figure4.csv", figure4_csv(rows));
    timer.done(rows.size());
}

std::vector<FileDigest> digest_files(const std::filesystem::path& dir,
                                     const std::vector<std::string>& names) {
    std::vector<FileDigest> out;
    for (const auto& name : names) {
        const auto bytes = read_file(dir / name);
        out.push_back({name, sha256_hex(bytes), bytes.size()});
    }
    return out;
}

std::vector<std::string> known_outputs(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw IoError("missing stage input: output directory " + dir.string());
    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        const auto ext = entry.path().extension();
        if (ext == ".csv" || name == kSyntheticDump) names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    return names;
}

RunManifest run_experiment(const ExperimentConfig& config) {
    check_paths(config);
    RunManifest manifest;
    manifest.version = std::string(toolkit_version());
    manifest.config_text = config.source_text;

    OutputSet out(config.output_dir);
    StageTimer load_timer(manifest.stages, config.synthetic ? "synthesize" : "load");
    const auto store = load_dataset(config);
    load_timer.done(store.size());
    if (config.synthetic) write_synthetic_dump(store, out);

    profiling_stage(store, profiling_params(config), out, manifest.stages);
    train_eval_stage(store, config, out, manifest.stages);
    gap_stage(store, config, out, manifest.stages);

    auto names = out.files();
    std::sort(names.begin(), names.end());
    manifest.files = digest_files(out.dir(), names);
    out.write(std::string(kManifestFile), manifest.to_json());
    out.commit();
    return manifest;
}

}  // namespace biastrack
