#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "biastrack/algorithms.hpp"
#include "biastrack/dataset.hpp"
#include "biastrack/profiling.hpp"

namespace biastrack {

struct PredictionRecord {
    UserIndex user = 0;
    ItemIndex item = 0;
    double truth = 0.0;
    double estimate = 0.0;
    double raw_estimate = 0.0;
    bool fallback = false;
};

struct PredictionSet {
    ModelKind kind = ModelKind::Random;
    std::size_t n_users = 0;
    std::vector<PredictionRecord> records;  // ordered by (user, item)

    std::size_t fallback_count() const;
};

/// One prediction per test record of the split.
PredictionSet test_predictions(const Model& model, const SplitPair& split);

/// Whether errors are taken on clipped or raw model outputs.
enum class ErrorBasis { Clipped, Raw };

double mae(const PredictionSet& predictions, ErrorBasis basis = ErrorBasis::Clipped);

struct GroupMae {
    std::optional<double> mae;  // empty when the group has no test records
    std::size_t n_records = 0;
    std::size_t fallback_count = 0;
    std::vector<double> per_user_mae;  // users of the group with >= 1 record
};

struct MaeReport {
    ModelKind kind = ModelKind::Random;
    std::array<GroupMae, 3> groups;  // indexed like kGroups
    GroupMae all;                    // every test record

    const GroupMae& group(Group g) const { return groups[static_cast<std::size_t>(g)]; }
};

MaeReport mae_by_group(const PredictionSet& predictions, const UserGroups& groups,
                       ErrorBasis basis = ErrorBasis::Clipped);

inline constexpr double kDefaultAlpha = 0.005;

struct TTestResult {
    double t_statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 1.0;
    double alpha = kDefaultAlpha;

    bool significant() const { return p_value < alpha; }
};

/// Two-sided Welch unequal-variance t-test.
TTestResult welch_t_test(std::span<const double> sample_a, std::span<const double> sample_b,
                         double alpha = kDefaultAlpha);

struct GroupTTest {
    ModelKind kind = ModelKind::Random;
    Group first = Group::LowMS;
    Group second = Group::MedMS;
    std::optional<TTestResult> result;  // empty when a group has < 2 users with records
};

/// LowMS against each other group, on per-user mean absolute errors.
std::vector<GroupTTest> low_vs_other_t_tests(const MaeReport& report, double alpha = kDefaultAlpha);

struct RecommendationLists {
    std::shared_ptr<const Catalog> catalog;
    std::size_t n = 0;
    std::vector<UserIndex> users;                  // requested users, in request order
    std::vector<std::vector<ItemIndex>> lists;     // indexed by user; empty if not requested
};

struct TopNOptions {
    std::size_t n = 10;
    /// Candidates need at least this many listeners in `listeners` (0 = no filter).
    std::size_t candidate_min_listeners = 0;
    const PopularityTable* listeners = nullptr;
};

/// Highest estimates over catalog items outside the user's training profile,
/// ties by external item id ascending.
RecommendationLists top_n(const Model& model, const RatingMatrix& train,
                          std::span<const UserIndex> users, const TopNOptions& options = {});

/// Number of lists each catalog item appears in (zero included).
std::vector<std::size_t> recommendation_frequency(const RecommendationLists& recs);

struct FrequencyCorrelation {
    std::vector<std::size_t> frequency;
    double r = 0.0;
};

/// Pearson over (popularity, frequency) across the whole catalog.
/// Throws DegenerateInputError when either side is constant.
FrequencyCorrelation rec_popularity_correlation(const RecommendationLists& recs,
                                                const PopularityTable& table);

/// Mean over the group's users of the mean popularity of their list items.
double group_average_popularity(std::span<const UserIndex> group,
                                std::span<const std::vector<ItemIndex>> item_lists,
                                const PopularityTable& table);

/// (gap_r - gap_p) / gap_p.
double delta_gap(double gap_r, double gap_p);

}  // namespace biastrack
