#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biastrack/config.hpp"
#include "biastrack/dataset.hpp"
#include "biastrack/reports.hpp"

namespace biastrack {

std::string_view toolkit_version();

struct StageRecord {
    std::string name;
    double seconds = 0.0;
    std::size_t records = 0;
};

struct FileDigest {
    std::string name;
    std::string sha256;
    std::size_t bytes = 0;
};

struct RunManifest {
    std::string version;
    std::string config_text;
    std::vector<StageRecord> stages;
    std::vector<FileDigest> files;

    std::string to_json() const;
};

inline constexpr std::string_view kGroupsFile = "groups.csv";
inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kSyntheticDump = "synthetic.tsv";

/// Reads the configured input file or generates the synthetic store, then
/// applies the configured subsample.
InteractionStore load_dataset(const ExperimentConfig& config);

/// Same layout as the interaction input format.
void write_synthetic_dump(const InteractionStore& store, OutputSet& out);

struct ProfilingParams {
    std::optional<std::filesystem::path> groups_file;
    std::size_t group_size = 0;  // 0: a third of the users
    double popular_quantile = 0.2;
};

ProfilingParams profiling_params(const ExperimentConfig& config);

/// figure1a/1b/2 and groups.csv. Precomputed groups bypass scoring.
void profiling_stage(const InteractionStore& store, const ProfilingParams& params, OutputSet& out,
                     std::vector<StageRecord>& log);

/// Reads groups.csv from the output directory; writes table1, ttests,
/// figure3_* and recs_* files.
void train_eval_stage(const InteractionStore& store, const ExperimentConfig& config,
                      OutputSet& out, std::vector<StageRecord>& log);

/// Reads groups.csv and recs_* from the output directory; writes figure4.
void gap_stage(const InteractionStore& store, const ExperimentConfig& config, OutputSet& out,
               std::vector<StageRecord>& log);

/// Digests of the named files inside `dir`.
std::vector<FileDigest> digest_files(const std::filesystem::path& dir,
                                     const std::vector<std::string>& names);

/// Every pipeline output currently present in `dir`, sorted by name.
std::vector<std::string> known_outputs(const std::filesystem::path& dir);

/// End to end: load or synthesize, profile, split, fit, evaluate, report.
/// Writes manifest.json next to the outputs. On failure nothing is left behind.
RunManifest run_experiment(const ExperimentConfig& config);

}  // namespace biastrack
