#include "biastrack/profiling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biastrack/errors.hpp"

namespace biastrack {

namespace {

PopularityTable make_table(std::shared_ptr<const Catalog> catalog, std::size_t n_users,
                           std::vector<std::size_t> listeners) {
    PopularityTable table;
    table.catalog = std::move(catalog);
    table.n_users = n_users;
    table.popularity.resize(listeners.size());
    for (std::size_t i = 0; i < listeners.size(); ++i)
        table.popularity[i] = static_cast<double>(listeners[i]) / static_cast<double>(n_users);
    table.listener_count = std::move(listeners);
    table.is_popular.assign(table.popularity.size(), false);
    return table;
}

}  // namespace

std::size_t PopularityTable::flagged_count() const {
    return static_cast<std::size_t>(std::count(is_popular.begin(), is_popular.end(), true));
}

PopularityTable item_popularity(const InteractionStore& store) {
    if (store.empty()) throw ValidationError("cannot compute popularity of an empty store");
    std::vector<std::size_t> listeners(store.n_items(), 0);
    for (const auto& r : store.records()) ++listeners[r.item];
    return make_table(store.shared_catalog(), store.n_users(), std::move(listeners));
}

PopularityTable item_popularity(const RatingMatrix& matrix) {
    if (matrix.empty()) throw ValidationError("cannot compute popularity of an empty matrix");
    std::vector<std::size_t> listeners(matrix.n_items(), 0);
    for (const auto& r : matrix.ratings()) ++listeners[r.item];
    return make_table(matrix.shared_catalog(), matrix.n_users(), std::move(listeners));
}

PopularityTable flag_top_popular(PopularityTable table, double quantile) {
    if (!(quantile > 0.0 && quantile <= 1.0))
        throw ValidationError("popularity quantile must lie in (0, 1], got " +
                              std::to_string(quantile));
    if (table.n_items() == 0 || !table.catalog)
        throw ValidationError("popularity table is empty");

    const auto n = table.n_items();
    // the epsilon keeps products like 0.2 * 5 from rounding up to 2
    const auto n_flag = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(n) - 1e-9)));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& ids = table.catalog->items;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (table.listener_count[a] != table.listener_count[b])
            return table.listener_count[a] > table.listener_count[b];
        return ids.id(a) < ids.id(b);
    });
    table.is_popular.assign(n, false);
    for (std::size_t k = 0; k < n_flag; ++k) table.is_popular[order[k]] = true;
    return table;
}

double profile_popular_ratio(const InteractionStore& store, const PopularityTable& table,
                             std::string_view user_id) {
    return profile_popular_ratio(store, table,
                                 static_cast<UserIndex>(store.catalog().users.at(user_id)));
}

double profile_popular_ratio(const InteractionStore& store, const PopularityTable& table,
                             UserIndex user) {
    if (user >= store.n_users()) throw LookupError("unknown user index");
    const auto row = store.user_records(user);
    if (row.empty()) return 0.0;
    std::size_t popular = 0;
    for (const auto& r : row) popular += table.is_popular.at(r.item) ? 1 : 0;
    return static_cast<double>(popular) / static_cast<double>(row.size());
}

MainstreaminessScores mainstreaminess_scores(const InteractionStore& store) {
    if (store.empty()) throw ValidationError("cannot score an empty store");

    std::vector<double> item_total(store.n_items(), 0.0);
    double grand_total = 0.0;
    for (const auto& r : store.records()) {
        item_total[r.item] += static_cast<double>(r.listen_count);
        grand_total += static_cast<double>(r.listen_count);
    }

    MainstreaminessScores out;
    out.user_ids = store.catalog().users.ids();
    out.score.resize(store.n_users(), 0.0);
    for (UserIndex u = 0; u < store.n_users(); ++u) {
        const auto row = store.user_records(u);
        double user_total = 0.0;
        for (const auto& r : row) user_total += static_cast<double>(r.listen_count);
        double overlap = 0.0;
        for (const auto& r : row)
            overlap += std::min(static_cast<double>(r.listen_count) / user_total,
                                item_total[r.item] / grand_total);
        out.score[u] = std::clamp(overlap, 0.0, 1.0);
    }
    return out;
}

std::string_view group_name(Group g) {
    switch (g) {
        case Group::LowMS: return "LowMS";
        case Group::MedMS: return "MedMS";
        case Group::HighMS: return "HighMS";
    }
    return "?";
}

Group parse_group(std::string_view name) {
    for (auto g : kGroups)
        if (group_name(g) == name) return g;
    throw ValidationError("unknown group name '" + std::string(name) + "'");
}

std::span<const UserIndex> UserGroups::members(Group g) const {
    switch (g) {
        case Group::LowMS: return low;
        case Group::MedMS: return med;
        case Group::HighMS: return high;
    }
    return {};
}

std::optional<Group> UserGroups::group_of(UserIndex user) const {
    for (auto g : kGroups) {
        auto m = members(g);
        if (std::find(m.begin(), m.end(), user) != m.end()) return g;
    }
    return std::nullopt;
}

std::vector<int> UserGroups::membership(std::size_t n_users) const {
    std::vector<int> out(n_users, -1);
    for (std::size_t g = 0; g < kGroups.size(); ++g)
        for (auto u : members(kGroups[g])) {
            if (u >= n_users) throw LookupError("grouped user index outside the user universe");
            out[u] = static_cast<int>(g);
        }
    return out;
}

UserGroups group_users(const MainstreaminessScores& scores, std::size_t group_size) {
    const auto n = scores.score.size();
    if (scores.user_ids.size() != n) throw ValidationError("scores and user ids differ in length");
    if (group_size < 1) throw ValidationError("group size must be >= 1");
    if (3 * group_size > n)
        throw ValidationError("3 x group size (" + std::to_string(3 * group_size) +
                              ") exceeds the number of users (" + std::to_string(n) + ")");

    std::vector<UserIndex> order(n);
    std::iota(order.begin(), order.end(), UserIndex{0});
    std::sort(order.begin(), order.end(), [&](UserIndex a, UserIndex b) {
        if (scores.score[a] != scores.score[b]) return scores.score[a] < scores.score[b];
        return scores.user_ids[a] < scores.user_ids[b];
    });

    const auto med_start = (n - group_size) / 2;
    UserGroups groups;
    groups.low.assign(order.begin(), order.begin() + group_size);
    groups.med.assign(order.begin() + med_start, order.begin() + med_start + group_size);
    groups.high.assign(order.end() - group_size, order.end());
    return groups;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw ValidationError("pearson: sequences differ in length");
    if (xs.size() < 2) throw ValidationError("pearson: need at least 2 points");

    const auto n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double dx = xs[k] - mx;
        const double dy = ys[k] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateInputError("pearson: zero variance, no correlation computable");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport profile_size_correlations(const InteractionStore& store,
                                            const PopularityTable& table) {
    if (store.n_users() < 2) throw ValidationError("profile correlations need >= 2 users");

    CorrelationReport report;
    report.points.resize(store.n_users());
    std::vector<double> sizes, popular, mean_pop;
    sizes.reserve(store.n_users());
    for (UserIndex u = 0; u < store.n_users(); ++u) {
        auto& p = report.points[u];
        const auto row = store.user_records(u);
        double pop_sum = 0.0;
        for (const auto& r : row) {
            p.popular_count += table.is_popular.at(r.item) ? 1 : 0;
            pop_sum += table.popularity.at(r.item);
        }
        p.profile_size = row.size();
        p.mean_popularity = row.empty() ? 0.0 : pop_sum / static_cast<double>(row.size());
        sizes.push_back(static_cast<double>(p.profile_size));
        popular.push_back(static_cast<double>(p.popular_count));
        mean_pop.push_back(p.mean_popularity);
    }
    report.r_size_vs_popular_count = pearson(sizes, popular);
    report.r_size_vs_avg_popularity = pearson(sizes, mean_pop);
    return report;
}

std::vector<std::size_t> long_tail_curve(const PopularityTable& table) {
    auto curve = table.listener_count;
    std::sort(curve.begin(), curve.end(), std::greater<>());
    return curve;
}

}  // namespace biastrack
