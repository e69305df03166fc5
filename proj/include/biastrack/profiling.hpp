#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biastrack/dataset.hpp"

namespace biastrack {

/// Per-item popularity: distinct listeners over the number of users.
struct PopularityTable {
    std::shared_ptr<const Catalog> catalog;
    std::size_t n_users = 0;
    std::vector<std::size_t> listener_count;
    std::vector<double> popularity;
    std::vector<bool> is_popular;

    std::size_t n_items() const { return popularity.size(); }
    std::size_t flagged_count() const;
};

PopularityTable item_popularity(const InteractionStore& store);
/// Same quantity over the users of a rating matrix (e.g. a training split).
PopularityTable item_popularity(const RatingMatrix& matrix);

inline constexpr double kDefaultPopularQuantile = 0.2;

/// Flags ceil(quantile * |I|) items by listener count, ties by item id ascending.
PopularityTable flag_top_popular(PopularityTable table, double quantile = kDefaultPopularQuantile);

/// Fraction of the user's distinct items that are flagged popular.
double profile_popular_ratio(const InteractionStore& store, const PopularityTable& table,
                             std::string_view user_id);
double profile_popular_ratio(const InteractionStore& store, const PopularityTable& table,
                             UserIndex user);

struct MainstreaminessScores {
    std::vector<std::string> user_ids;  // indexed like the store's users
    std::vector<double> score;
};

/// Histogram intersection of each user's normalized listen-count distribution
/// with the global one.
MainstreaminessScores mainstreaminess_scores(const InteractionStore& store);

enum class Group { LowMS, MedMS, HighMS };
inline constexpr std::array<Group, 3> kGroups = {Group::LowMS, Group::MedMS, Group::HighMS};

std::string_view group_name(Group g);
/// Accepts the names above; throws ValidationError otherwise.
Group parse_group(std::string_view name);

/// Three disjoint user sets, held as user indices.
struct UserGroups {
    std::vector<UserIndex> low;
    std::vector<UserIndex> med;
    std::vector<UserIndex> high;

    std::span<const UserIndex> members(Group g) const;
    /// Group of a user, empty when ungrouped. Linear scan.
    std::optional<Group> group_of(UserIndex user) const;
    /// Lookup table of size n_users: group index 0..2, or -1.
    std::vector<int> membership(std::size_t n_users) const;
};

/// Rank users by (score, id); low = first block, high = last block,
/// med = block starting at floor((|U| - group_size) / 2).
UserGroups group_users(const MainstreaminessScores& scores, std::size_t group_size);

/// Sample Pearson correlation coefficient.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct ProfilePoint {
    std::size_t profile_size = 0;
    std::size_t popular_count = 0;
    double mean_popularity = 0.0;
};

struct CorrelationReport {
    double r_size_vs_popular_count = 0.0;
    double r_size_vs_avg_popularity = 0.0;
    std::vector<ProfilePoint> points;  // indexed by user
};

CorrelationReport profile_size_correlations(const InteractionStore& store,
                                            const PopularityTable& table);

/// Listener counts sorted descending (the long-tail curve).
std::vector<std::size_t> long_tail_curve(const PopularityTable& table);

}  // namespace biastrack
