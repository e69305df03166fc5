#pragma once

// Fixtures and brute-force reference implementations shared by the unit
// tests and the acceptance runner. Nothing here calls library internals
// beyond the public data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "biastrack/dataset.hpp"

namespace biastrack::fixtures {

/// u1: a=10,b=5; u2: a=2,c=4; u3: a=1,b=2,d=8; u4: e=3
inline std::vector<Interaction> f1_rows() {
    return {{"u1", "a", 10}, {"u1", "b", 5}, {"u2", "a", 2}, {"u2", "c", 4},
            {"u3", "a", 1},  {"u3", "b", 2}, {"u3", "d", 8}, {"u4", "e", 3}};
}

inline InteractionStore f1_store() {
    const auto rows = f1_rows();
    return InteractionStore(rows);
}

/// Dense view: cell[u][i] is empty when unrated.
using Dense = std::vector<std::vector<std::optional<double>>>;

inline Dense to_dense(const RatingMatrix& m) {
    Dense d(m.n_users(), std::vector<std::optional<double>>(m.n_items()));
    for (const auto& r : m.ratings()) d[r.user][r.item] = r.value;
    return d;
}

inline std::shared_ptr<Catalog> make_catalog(std::size_t n_users, std::size_t n_items) {
    auto c = std::make_shared<Catalog>();
    for (std::size_t u = 0; u < n_users; ++u) c->users.intern("u" + std::to_string(u));
    for (std::size_t i = 0; i < n_items; ++i) c->items.intern("i" + std::to_string(i));
    return c;
}

/// Random sparse matrix, at most 6 x 8, every user and item rated at least once.
/// Values come from a coarse grid half the time so that similarity ties occur.
inline RatingMatrix random_instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 7919 + 17);
    std::uniform_int_distribution<std::size_t> users(2, 6), items(2, 8);
    const auto n_users = users(rng);
    const auto n_items = items(rng);
    std::bernoulli_distribution present(0.6), coarse(0.5);
    std::uniform_real_distribution<double> fine(0.0, 1000.0);
    std::uniform_int_distribution<int> grid(0, 4);

    auto value = [&] { return coarse(rng) ? 250.0 * grid(rng) : fine(rng); };
    std::vector<std::vector<bool>> filled(n_users, std::vector<bool>(n_items, false));
    for (auto& row : filled)
        for (std::size_t i = 0; i < n_items; ++i) row[i] = present(rng);
    for (std::size_t u = 0; u < n_users; ++u) filled[u][u % n_items] = true;
    for (std::size_t i = 0; i < n_items; ++i) filled[i % n_users][i] = true;

    std::vector<Rating> ratings;
    for (std::size_t u = 0; u < n_users; ++u)
        for (std::size_t i = 0; i < n_items; ++i)
            if (filled[u][i])
                ratings.push_back({static_cast<UserIndex>(u), static_cast<ItemIndex>(i), value()});
    return RatingMatrix(make_catalog(n_users, n_items), std::move(ratings));
}

struct OracleEstimate {
    double value;
    bool fallback;
};

inline double oracle_global_mean(const Dense& d) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& row : d)
        for (const auto& c : row)
            if (c) sum += *c, ++n;
    return sum / static_cast<double>(n);
}

inline std::optional<double> oracle_user_mean(const Dense& d, std::size_t u) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : d[u])
        if (c) sum += *c, ++n;
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

/// Epoch loop over the dense matrix: item biases from the current user
/// biases, then user biases from the fresh item biases.
struct AlsOracle {
    std::vector<double> bu, bi;
    double mu = 0.0;

    AlsOracle(const Dense& d, std::size_t epochs, double reg_u, double reg_i) {
        const auto nu = d.size(), ni = d.front().size();
        mu = oracle_global_mean(d);
        bu.assign(nu, 0.0);
        bi.assign(ni, 0.0);
        for (std::size_t e = 0; e < epochs; ++e) {
            for (std::size_t i = 0; i < ni; ++i) {
                double num = 0.0, cnt = 0.0;
                for (std::size_t u = 0; u < nu; ++u)
                    if (d[u][i]) num += *d[u][i] - mu - bu[u], cnt += 1.0;
                if (cnt > 0) bi[i] = num / (reg_i + cnt);
            }
            for (std::size_t u = 0; u < nu; ++u) {
                double num = 0.0, cnt = 0.0;
                for (std::size_t i = 0; i < ni; ++i)
                    if (d[u][i]) num += *d[u][i] - mu - bi[i], cnt += 1.0;
                if (cnt > 0) bu[u] = num / (reg_u + cnt);
            }
        }
    }

    double predict(std::size_t u, std::size_t i) const { return mu + bu[u] + bi[i]; }
};

inline double oracle_msd_similarity(const Dense& d, std::size_t u, std::size_t v,
                                    std::size_t min_support) {
    if (u == v) return 1.0;
    double sq = 0.0;
    std::size_t common = 0;
    for (std::size_t i = 0; i < d[u].size(); ++i)
        if (d[u][i] && d[v][i]) {
            sq += (*d[u][i] - *d[v][i]) * (*d[u][i] - *d[v][i]);
            ++common;
        }
    if (common == 0 || common < min_support) return 0.0;
    return 1.0 / (sq / static_cast<double>(common) + 1.0);
}

/// Exhaustive neighbourhood: every other rater of i with positive similarity,
/// ordered by similarity then user index, truncated to k.
inline OracleEstimate knn_oracle(const Dense& d, std::size_t u, std::size_t i, std::size_t k,
                                 std::size_t min_k, std::size_t min_support, bool centered) {
    const double mu = oracle_global_mean(d);
    const auto mean_u = oracle_user_mean(d, u);
    const double base = centered && mean_u ? *mean_u : mu;
    bool item_known = false;
    for (const auto& row : d) item_known = item_known || row[i].has_value();
    if (!mean_u || !item_known) return {base, true};

    std::vector<std::pair<double, std::size_t>> pool;
    for (std::size_t v = 0; v < d.size(); ++v) {
        if (v == u || !d[v][i]) continue;
        const double s = oracle_msd_similarity(d, u, v, min_support);
        if (s > 0.0) pool.emplace_back(s, v);
    }
    std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    if (pool.size() > k) pool.resize(k);
    if (pool.size() < min_k) return {base, true};

    double num = 0.0, den = 0.0;
    for (const auto& [s, v] : pool) {
        num += s * (centered ? *d[v][i] - *oracle_user_mean(d, v) : *d[v][i]);
        den += s;
    }
    return {centered ? base + num / den : num / den, false};
}

struct WelchReference {
    std::vector<double> a, b;
    double t, df, p;
};

/// scipy 1.15.3 stats.ttest_ind(a, b, equal_var=False); df by Welch-Satterthwaite.
inline std::vector<WelchReference> welch_references() {
    return {
        {{1, 2, 3, 4, 5}, {2, 3, 4, 5, 6}, -1.0, 8.0, 0.34659350708733416},
        {{10.5, 12.1, 9.8, 11.4, 10.9, 12.7}, {8.2, 9.1, 7.7, 8.8},
         5.21112210310938, 7.9624904312324585, 0.0008235757276162768},
        {{1, 1, 2, 2, 3, 3, 4}, {5, 6, 7, 8, 9, 10, 11, 12},
         -6.454782737124948, 10.03948984305463, 7.173091247251533e-05},
        {{220.3, 180.1, 305.7, 250.2, 199.9}, {120.4, 98.6, 140.2, 101.1, 133.3, 117.8, 125.0},
         4.92422635229783, 4.570294119901118, 0.005578748516716291},
        {{0.1, 0.2, 0.15, 0.3}, {0.12, 0.22, 0.11, 0.35, 0.28},
         -0.45352984915683753, 6.968911246375338, 0.66395234300063},
        {{3, 3, 3, 4}, {1, 2, 9, 14, 20},
         -1.6500744303943333, 4.038607570462953, 0.17359109955912852},
        {{100, 101, 99, 100.5, 98.7, 100.2, 101.4, 99.9}, {100.1, 100.3, 99.8, 100.0},
         0.11010873508894883, 8.310779001256865, 0.914935802851487},
        {{-5, -3, -1, 0, 2}, {4, 6, 8}, -4.427619971920783, 5.487953360789614, 0.0054900885324778905},
        {{50, 60}, {40, 45, 47, 52, 49, 41}, 1.745912800959331, 1.3013723854060864, 0.2850355683452206},
        {{7.7, 8.8, 9.9, 10.1, 11.2, 12.3, 13.4, 14.5, 15.6}, {7.0, 7.5, 8.0, 8.5},
         3.9805866932570644, 9.80668636068881, 0.0027005585842437376},
    };
}

}  // namespace biastrack::fixtures
