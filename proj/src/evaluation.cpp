#include "biastrack/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "biastrack/errors.hpp"

namespace biastrack {

std::size_t PredictionSet::fallback_count() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const auto& r) { return r.fallback; }));
}

PredictionSet test_predictions(const Model& model, const SplitPair& split) {
    PredictionSet out;
    out.kind = model.kind();
    out.n_users = split.train.n_users();
    out.records.reserve(split.test.size());
    for (const auto& t : split.test) {
        const auto p = model.predict(t.user, t.item);
        out.records.push_back({t.user, t.item, t.value, p.estimate, p.raw_estimate, p.fallback});
    }
    std::stable_sort(out.records.begin(), out.records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.user, a.item) < std::tie(b.user, b.item);
    });
    return out;
}

namespace {

double abs_error(const PredictionRecord& r, ErrorBasis basis) {
    return std::abs(r.truth - (basis == ErrorBasis::Clipped ? r.estimate : r.raw_estimate));
}

double mean(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Records arrive user-ordered, so per-user means close whenever the user changes.
struct RunningMae {
    GroupMae* cell = nullptr;
    double sum = 0.0;
    UserIndex current = 0;
    double user_sum = 0.0;
    std::size_t user_n = 0;

    void flush_user() {
        if (user_n == 0) return;
        cell->per_user_mae.push_back(user_sum / static_cast<double>(user_n));
        user_sum = 0.0;
        user_n = 0;
    }
    void add(const PredictionRecord& r, double err) {
        if (r.user != current) flush_user();
        current = r.user;
        user_sum += err;
        ++user_n;
        sum += err;
        ++cell->n_records;
        cell->fallback_count += r.fallback ? 1 : 0;
    }
    void finish() {
        flush_user();
        if (cell->n_records > 0) cell->mae = sum / static_cast<double>(cell->n_records);
    }
};

}  // namespace

double mae(const PredictionSet& predictions, ErrorBasis basis) {
    if (predictions.records.empty()) throw ValidationError("MAE of an empty prediction set");
    double sum = 0.0;
    for (const auto& r : predictions.records) sum += abs_error(r, basis);
    return sum / static_cast<double>(predictions.records.size());
}

MaeReport mae_by_group(const PredictionSet& predictions, const UserGroups& groups,
                       ErrorBasis basis) {
    const auto member = groups.membership(predictions.n_users);

    MaeReport report;
    report.kind = predictions.kind;
    std::array<RunningMae, 3> by_group{};
    for (std::size_t g = 0; g < 3; ++g) by_group[g].cell = &report.groups[g];
    RunningMae overall{&report.all};

    for (const auto& r : predictions.records) {
        const double err = abs_error(r, basis);
        overall.add(r, err);
        if (r.user < member.size() && member[r.user] >= 0)
            by_group[static_cast<std::size_t>(member[r.user])].add(r, err);
    }
    overall.finish();
    for (auto& g : by_group) g.finish();
    return report;
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b, double alpha) {
    if (a.size() < 2 || b.size() < 2)
        throw ValidationError("t-test: each sample needs at least 2 values");

    auto variance = [](std::span<const double> xs, double m) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m) * (x - m);
        return ss / static_cast<double>(xs.size() - 1);
    };
    const double ma = mean(a), mb = mean(b);
    const double va = variance(a, ma) / static_cast<double>(a.size());
    const double vb = variance(b, mb) / static_cast<double>(b.size());
    if (va == 0.0 && vb == 0.0)
        throw DegenerateInputError("t-test: both samples have zero variance");

    TTestResult out;
    out.alpha = alpha;
    out.t_statistic = (ma - mb) / std::sqrt(va + vb);
    out.degrees_of_freedom =
        (va + vb) * (va + vb) /
        (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    const boost::math::students_t_distribution<double> dist(out.degrees_of_freedom);
    out.p_value = std::clamp(
        2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t_statistic))), 0.0, 1.0);
    return out;
}

std::vector<GroupTTest> low_vs_other_t_tests(const MaeReport& report, double alpha) {
    std::vector<GroupTTest> out;
    for (auto other : {Group::MedMS, Group::HighMS}) {
        GroupTTest row{report.kind, Group::LowMS, other, std::nullopt};
        const auto& a = report.group(Group::LowMS).per_user_mae;
        const auto& b = report.group(other).per_user_mae;
        if (a.size() >= 2 && b.size() >= 2) {
            try {
                row.result = welch_t_test(a, b, alpha);
            } catch (const DegenerateInputError&) {
            }
        }
        out.push_back(row);
    }
    return out;
}

RecommendationLists top_n(const Model& model, const RatingMatrix& train,
                          std::span<const UserIndex> users, const TopNOptions& options) {
    if (options.n < 1) throw ValidationError("top-n: n must be >= 1");
    const auto n_items = train.n_items();
    const auto& item_ids = train.catalog().items;

    std::vector<ItemIndex> pool;
    for (ItemIndex i = 0; i < n_items; ++i) {
        if (options.candidate_min_listeners > 0 && options.listeners &&
            options.listeners->listener_count.at(i) < options.candidate_min_listeners)
            continue;
        pool.push_back(i);
    }

    RecommendationLists recs;
    recs.catalog = train.shared_catalog();
    recs.n = options.n;
    recs.users.assign(users.begin(), users.end());
    recs.lists.resize(train.n_users());

    struct Scored {
        double estimate;
        ItemIndex item;
    };
    std::vector<Scored> scored;
    std::vector<char> in_profile(n_items, 0);
    for (auto u : users) {
        if (u >= train.n_users())
            throw LookupError("top-n: unknown user index " + std::to_string(u));
        const auto profile = train.user_ratings(u);
        for (const auto& r : profile) in_profile[r.item] = 1;

        scored.clear();
        for (auto i : pool)
            if (!in_profile[i]) scored.push_back({model.predict(u, i).estimate, i});
        const auto take = std::min(options.n, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                          scored.end(), [&](const Scored& a, const Scored& b) {
                              if (a.estimate != b.estimate) return a.estimate > b.estimate;
                              return item_ids.id(a.item) < item_ids.id(b.item);
                          });
        auto& list = recs.lists[u];
        list.clear();
        for (std::size_t k = 0; k < take; ++k) list.push_back(scored[k].item);

        for (const auto& r : profile) in_profile[r.item] = 0;
    }
    return recs;
}

std::vector<std::size_t> recommendation_frequency(const RecommendationLists& recs) {
    std::vector<std::size_t> freq(recs.catalog ? recs.catalog->items.size() : 0, 0);
    for (const auto& list : recs.lists)
        for (auto i : list) ++freq.at(i);
    return freq;
}

FrequencyCorrelation rec_popularity_correlation(const RecommendationLists& recs,
                                                const PopularityTable& table) {
    if (recs.users.empty()) throw ValidationError("no recommendation lists");
    FrequencyCorrelation out;
    out.frequency = recommendation_frequency(recs);
    if (out.frequency.size() != table.n_items())
        throw ValidationError("popularity table covers a different item universe");
    std::vector<double> freq(out.frequency.begin(), out.frequency.end());
    out.r = pearson(table.popularity, freq);
    return out;
}

double group_average_popularity(std::span<const UserIndex> group,
                                std::span<const std::vector<ItemIndex>> item_lists,
                                const PopularityTable& table) {
    if (group.empty()) throw ValidationError("GAP of an empty group");
    double total = 0.0;
    for (auto u : group) {
        if (u >= item_lists.size() || item_lists[u].empty())
            throw ValidationError("GAP: user index " + std::to_string(u) + " has an empty list");
        double sum = 0.0;
        for (auto i : item_lists[u]) sum += table.popularity.at(i);
        total += sum / static_cast<double>(item_lists[u].size());
    }
    return total / static_cast<double>(group.size());
}

double delta_gap(double gap_r, double gap_p) {
    if (!(gap_p > 0.0)) throw ValidationError("delta GAP undefined for profile GAP <= 0");
    return (gap_r - gap_p) / gap_p;
}

}  // namespace biastrack
