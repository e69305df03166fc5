#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biastrack/algorithms.hpp"
#include "biastrack/dataset.hpp"
#include "biastrack/evaluation.hpp"
#include "biastrack/profiling.hpp"

namespace biastrack {

/// Shortest round-trip decimal form; stable across runs.
std::string format_number(double value);

/// Hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Files written into one output directory during one command. Unless
/// commit() is called, the destructor deletes everything written, so a
/// failed stage leaves no torn outputs behind.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir);
    ~OutputSet();
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    const std::filesystem::path& dir() const { return dir_; }
    /// Writes via a temporary file and rename.
    void write(const std::string& name, std::string_view content);
    void commit() { committed_ = true; }
    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
    bool committed_ = false;
};

std::string read_file(const std::filesystem::path& path);

// --- report tables (each carries a one-line header) ---

std::string figure1a_csv(const PopularityTable& table);
std::string figure1b_csv(const InteractionStore& store, const PopularityTable& table);
std::string figure2_csv(const InteractionStore& store, const CorrelationReport& report);
std::string groups_csv(const Catalog& catalog, const UserGroups& groups,
                       const std::vector<std::optional<double>>& scores);
std::string figure3_csv(const PopularityTable& table, const std::vector<std::size_t>& frequency);

struct GapRow {
    Group group = Group::LowMS;
    ModelKind kind = ModelKind::Random;
    double gap_p = 0.0;
    double gap_r = 0.0;
    std::optional<double> delta;
};
std::string figure4_csv(const std::vector<GapRow>& rows);

std::string table1_csv(const std::vector<MaeReport>& reports);
std::string ttests_csv(const std::vector<GroupTTest>& tests);

/// user_id,rank,item_id
std::string recommendations_csv(const RecommendationLists& recs);

struct Correlations {
    ModelKind kind = ModelKind::Random;
    std::optional<double> r;  // empty when not computable
};
/// algorithm,pearson_r
std::string figure3_summary_csv(const std::vector<Correlations>& rows);

// --- readers for stage intermediates ---

struct LoadedGroups {
    UserGroups groups;
    std::vector<std::optional<double>> scores;  // indexed by user
};

/// Reads a user_id,[score,]group CSV against the store's user universe.
LoadedGroups read_groups_csv(const std::filesystem::path& path, const Catalog& catalog);

RecommendationLists read_recommendations_csv(const std::filesystem::path& path,
                                             std::shared_ptr<const Catalog> catalog);

std::string figure3_file(ModelKind kind);
std::string recommendations_file(ModelKind kind);

}  // namespace biastrack
