#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biastrack/algorithms.hpp"
#include "biastrack/dataset.hpp"
#include "biastrack/evaluation.hpp"

namespace biastrack {

struct AlgorithmSpec {
    ModelKind kind = ModelKind::Random;
    std::uint64_t seed = 0;  // Random and NMF only
    BaselineParams baseline;
    KnnParams knn;
    NmfParams nmf;
};

/// Every algorithm with default hyperparameters, in the canonical order.
std::vector<AlgorithmSpec> default_algorithms();

struct ExperimentConfig {
    std::optional<std::filesystem::path> input;
    std::optional<SyntheticConfig> synthetic;
    std::uint64_t synthetic_seed = 0;
    std::optional<std::filesystem::path> groups_file;
    double subsample = 1.0;  // fraction of interaction records kept after loading
    std::uint64_t subsample_seed = 1;

    std::size_t group_size = 0;  // 0: a third of the users
    double popular_quantile = 0.2;
    double split_ratio = 0.8;
    std::uint64_t split_seed = 42;
    std::vector<AlgorithmSpec> algorithms;
    std::size_t top_n = 10;
    std::size_t candidate_min_listeners = 0;
    double alpha = kDefaultAlpha;
    ErrorBasis mae_basis = ErrorBasis::Clipped;
    std::filesystem::path output_dir = "biastrack-out";

    std::string source_text;  // the file as read, echoed into the manifest
};

/// Parses the INI-style experiment file. Relative paths resolve against
/// `base_dir`. Throws ConfigError naming the offending field.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Run-start checks: referenced input files exist.
void check_paths(const ExperimentConfig& config);

}  // namespace biastrack
