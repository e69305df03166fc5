#include "biastrack/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "biastrack/errors.hpp"
#include "biastrack/random.hpp"

namespace biastrack {

namespace {

constexpr double kDenominatorFloor = 1e-12;
constexpr double kInitFloor = 1e-9;

void require_ratings(const RatingMatrix& train, std::string_view what) {
    if (train.empty())
        throw ValidationError(std::string(what) + ": training matrix is empty");
}

}  // namespace

std::string_view model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Random: return "Random";
        case ModelKind::MostPopular: return "MostPopular";
        case ModelKind::UserItemAvg: return "UserItemAvg";
        case ModelKind::UserKNN: return "UserKNN";
        case ModelKind::UserKNNAvg: return "UserKNNAvg";
        case ModelKind::NMF: return "NMF";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    for (auto kind : {ModelKind::Random, ModelKind::MostPopular, ModelKind::UserItemAvg,
                      ModelKind::UserKNN, ModelKind::UserKNNAvg, ModelKind::NMF})
        if (model_name(kind) == name) return kind;
    throw ValidationError("unknown algorithm '" + std::string(name) + "'");
}

TrainSummary summarize(const RatingMatrix& train) {
    TrainSummary s;
    s.n_ratings = train.size();
    s.user_count.assign(train.n_users(), 0);
    s.item_count.assign(train.n_items(), 0);
    std::vector<double> user_sum(train.n_users(), 0.0);
    double total = 0.0;
    for (const auto& r : train.ratings()) {
        total += r.value;
        user_sum[r.user] += r.value;
        ++s.user_count[r.user];
        ++s.item_count[r.item];
    }
    s.global_mean = train.empty() ? 0.0 : total / static_cast<double>(train.size());
    s.user_mean.resize(train.n_users());
    for (std::size_t u = 0; u < s.user_mean.size(); ++u)
        s.user_mean[u] = s.user_count[u] > 0
                             ? user_sum[u] / static_cast<double>(s.user_count[u])
                             : s.global_mean;
    return s;
}

Prediction Model::predict(UserIndex user, ItemIndex item) const {
    auto [raw, fallback] = estimate(user, item);
    if (!std::isfinite(raw)) {
        raw = summary_.global_mean;
        fallback = true;
    }
    return {user, item, std::clamp(raw, RatingMatrix::kScaleMin, RatingMatrix::kScaleMax), raw,
            fallback};
}

// Random

RandomModel::RandomModel(const RatingMatrix& train, std::uint64_t seed)
    : Model(summarize(train)), seed_(seed) {
    require_ratings(train, "Random");
    mean_ = summary_.global_mean;
    if (train.size() > 1) {
        double ss = 0.0;
        for (const auto& r : train.ratings()) ss += (r.value - mean_) * (r.value - mean_);
        stddev_ = std::sqrt(ss / static_cast<double>(train.size() - 1));
    }
}

Model::Estimate RandomModel::estimate(UserIndex user, ItemIndex item) const {
    if (stddev_ == 0.0) return {mean_, false};
    const std::uint64_t key = mix64(seed_ ^ mix64((std::uint64_t{user} << 32) | item));
    const double z = normal_from_bits(mix64(key), mix64(key + 1));
    return {mean_ + stddev_ * z, false};
}

// MostPopular

MostPopularModel::MostPopularModel(const RatingMatrix& train, const PopularityTable& popularity)
    : Model(summarize(train)) {
    require_ratings(train, "MostPopular");
    if (popularity.n_items() == 0) throw ValidationError("MostPopular: empty popularity table");
    if (popularity.n_items() != train.n_items())
        throw ValidationError("MostPopular: popularity table covers a different item universe");
    const double top = *std::max_element(popularity.popularity.begin(), popularity.popularity.end());
    if (!(top > 0.0)) throw ValidationError("MostPopular: no item has listeners");
    score_.resize(popularity.n_items());
    for (std::size_t i = 0; i < score_.size(); ++i)
        score_[i] = popularity.popularity[i] == top
                        ? RatingMatrix::kScaleMax
                        : RatingMatrix::kScaleMax * popularity.popularity[i] / top;
}

Model::Estimate MostPopularModel::estimate(UserIndex, ItemIndex item) const {
    if (!summary_.knows_item(item)) return {0.0, true};
    return {score_[item], false};
}

// UserItemAvg

UserItemAvgModel::UserItemAvgModel(const RatingMatrix& train, const BaselineParams& params)
    : Model(summarize(train)) {
    require_ratings(train, "UserItemAvg");
    if (params.epochs < 1) throw ValidationError("UserItemAvg: epochs must be >= 1");
    if (params.reg_u < 0.0 || params.reg_i < 0.0)
        throw ValidationError("UserItemAvg: regularization must be non-negative");

    const double mu = summary_.global_mean;
    bu_.assign(train.n_users(), 0.0);
    bi_.assign(train.n_items(), 0.0);
    std::vector<double> acc_i(train.n_items());
    std::vector<double> acc_u(train.n_users());
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        std::fill(acc_i.begin(), acc_i.end(), 0.0);
        for (const auto& r : train.ratings()) acc_i[r.item] += r.value - mu - bu_[r.user];
        for (std::size_t i = 0; i < bi_.size(); ++i)
            if (summary_.item_count[i] > 0)
                bi_[i] = acc_i[i] / (params.reg_i + static_cast<double>(summary_.item_count[i]));

        std::fill(acc_u.begin(), acc_u.end(), 0.0);
        for (const auto& r : train.ratings()) acc_u[r.user] += r.value - mu - bi_[r.item];
        for (std::size_t u = 0; u < bu_.size(); ++u)
            if (summary_.user_count[u] > 0)
                bu_[u] = acc_u[u] / (params.reg_u + static_cast<double>(summary_.user_count[u]));
    }
}

Model::Estimate UserItemAvgModel::estimate(UserIndex user, ItemIndex item) const {
    const bool known_user = summary_.knows_user(user);
    const bool known_item = summary_.knows_item(item);
    double value = summary_.global_mean;
    if (known_user) value += bu_[user];
    if (known_item) value += bi_[item];
    return {value, !known_user && !known_item};
}

// UserKNN / UserKNNAvg

UserSimilarity::UserSimilarity(const RatingMatrix& train, std::size_t min_support)
    : n_(train.n_users()), sim_(n_ * n_, 0.0) {
    std::vector<std::vector<std::pair<UserIndex, double>>> raters(train.n_items());
    for (const auto& r : train.ratings()) raters[r.item].emplace_back(r.user, r.value);

    std::vector<std::uint32_t> freq(n_ * n_, 0);
    std::vector<double> sq(n_ * n_, 0.0);
    for (const auto& list : raters)
        for (std::size_t a = 0; a < list.size(); ++a)
            for (std::size_t b = a + 1; b < list.size(); ++b) {
                const auto [u, ru] = list[a];
                const auto [v, rv] = list[b];
                const auto lo = std::min(u, v), hi = std::max(u, v);
                ++freq[lo * n_ + hi];
                sq[lo * n_ + hi] += (ru - rv) * (ru - rv);
            }

    for (std::size_t u = 0; u < n_; ++u) {
        sim_[u * n_ + u] = 1.0;
        for (std::size_t v = u + 1; v < n_; ++v) {
            const auto f = freq[u * n_ + v];
            const double s =
                (f == 0 || f < min_support) ? 0.0 : 1.0 / (sq[u * n_ + v] / f + 1.0);
            sim_[u * n_ + v] = s;
            sim_[v * n_ + u] = s;
        }
    }
}

namespace {

const RatingMatrix& require_users(const RatingMatrix& train, std::string_view what) {
    require_ratings(train, what);
    if (train.n_users() < 2) throw ValidationError(std::string(what) + ": needs >= 2 users");
    return train;
}

}  // namespace

UserKnnModel::UserKnnModel(const RatingMatrix& train, const KnnParams& params, bool mean_centered)
    : Model(summarize(require_users(train, mean_centered ? "UserKNNAvg" : "UserKNN"))),
      params_(params),
      mean_centered_(mean_centered),
      sim_(train, params.min_support),
      item_raters_(train.n_items()) {
    if (params.k < 1 || params.min_k < 1)
        throw ValidationError("KNN: k and min_k must be >= 1");
    for (const auto& r : train.ratings()) item_raters_[r.item].push_back({r.user, r.value});
}

Model::Estimate UserKnnModel::estimate(UserIndex user, ItemIndex item) const {
    const bool known_user = summary_.knows_user(user);
    const double base = (mean_centered_ && known_user) ? summary_.user_mean[user]
                                                       : summary_.global_mean;
    if (!known_user || !summary_.knows_item(item)) return {base, true};

    struct Neighbour {
        double sim;
        UserIndex user;
        double value;
    };
    std::vector<Neighbour> pool;
    pool.reserve(item_raters_[item].size());
    for (const auto& rater : item_raters_[item]) {
        if (rater.user == user) continue;
        const double s = sim_(user, rater.user);
        if (s > 0.0) pool.push_back({s, rater.user, rater.value});
    }
    const auto take = std::min(params_.k, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(),
                      [](const Neighbour& a, const Neighbour& b) {
                          if (a.sim != b.sim) return a.sim > b.sim;
                          return a.user < b.user;
                      });
    if (take < params_.min_k) return {base, true};

    double weight = 0.0;
    double acc = 0.0;
    for (std::size_t n = 0; n < take; ++n) {
        const auto& nb = pool[n];
        weight += nb.sim;
        acc += nb.sim * (mean_centered_ ? nb.value - summary_.user_mean[nb.user] : nb.value);
    }
    return {mean_centered_ ? base + acc / weight : acc / weight, false};
}

// NMF

NmfModel::NmfModel(const RatingMatrix& train, const NmfParams& params,
                   const NmfEpochObserver& observer)
    : Model(summarize(train)) {
    require_ratings(train, "NMF");
    if (params.n_factors < 1) throw ValidationError("NMF: n_factors must be >= 1");
    if (params.reg_pu < 0.0 || params.reg_qi < 0.0)
        throw ValidationError("NMF: regularization must be non-negative");
    const double low = std::max(params.init_low, kInitFloor);
    if (params.init_high < low) throw ValidationError("NMF: init_high must be >= init_low");

    const auto nf = params.n_factors;
    const auto n_users = train.n_users();
    const auto n_items = train.n_items();
    factors_.n_factors = nf;
    factors_.user.resize(n_users * nf);
    factors_.item.resize(n_items * nf);
    Rng rng(params.seed);
    for (auto& x : factors_.user) x = low + (params.init_high - low) * uniform01(rng);
    for (auto& x : factors_.item) x = low + (params.init_high - low) * uniform01(rng);

    std::vector<double> num, den;
    auto& pu = factors_.user;
    auto& qi = factors_.item;
    // One half-step: accumulate over all ratings with the current factors,
    // then rescale one side. Users go first; items then see the
    // refreshed user factors, which keeps the squared error non-increasing
    // when both regularizers are zero.
    auto half_step = [&](bool users) {
        auto& mine = users ? pu : qi;
        num.assign(mine.size(), 0.0);
        den.assign(mine.size(), 0.0);
        for (const auto& r : train.ratings()) {
            const double* p = &pu[r.user * nf];
            const double* q = &qi[r.item * nf];
            double est = 0.0;
            for (std::size_t f = 0; f < nf; ++f) est += p[f] * q[f];
            const std::size_t row = users ? r.user : r.item;
            const double* other = users ? q : p;
            for (std::size_t f = 0; f < nf; ++f) {
                num[row * nf + f] += other[f] * r.value;
                den[row * nf + f] += other[f] * est;
            }
        }
        const auto& counts = users ? summary_.user_count : summary_.item_count;
        const double reg = users ? params.reg_pu : params.reg_qi;
        for (std::size_t row = 0; row < counts.size(); ++row) {
            const auto n = static_cast<double>(counts[row]);
            for (std::size_t f = 0; f < nf; ++f) {
                auto& x = mine[row * nf + f];
                const double d = den[row * nf + f] + reg * n * x;
                x *= num[row * nf + f] / std::max(d, kDenominatorFloor);
            }
        }
    };
    for (std::size_t epoch = 1; epoch <= params.epochs; ++epoch) {
        half_step(true);
        half_step(false);
        if (observer) observer(epoch, factors_);
    }
}

Model::Estimate NmfModel::estimate(UserIndex user, ItemIndex item) const {
    if (!summary_.knows_user(user) || !summary_.knows_item(item))
        return {summary_.global_mean, true};
    const auto nf = factors_.n_factors;
    double est = 0.0;
    for (std::size_t f = 0; f < nf; ++f)
        est += factors_.user[user * nf + f] * factors_.item[item * nf + f];
    return {est, false};
}

std::unique_ptr<Model> fit_random(const RatingMatrix& train, std::uint64_t seed) {
    return std::make_unique<RandomModel>(train, seed);
}

std::unique_ptr<Model> fit_most_popular(const RatingMatrix& train, const PopularityTable& popularity) {
    return std::make_unique<MostPopularModel>(train, popularity);
}

std::unique_ptr<Model> fit_user_item_avg(const RatingMatrix& train, const BaselineParams& params) {
    return std::make_unique<UserItemAvgModel>(train, params);
}

std::unique_ptr<Model> fit_user_knn(const RatingMatrix& train, const KnnParams& params) {
    return std::make_unique<UserKnnModel>(train, params, false);
}

std::unique_ptr<Model> fit_user_knn_avg(const RatingMatrix& train, const KnnParams& params) {
    return std::make_unique<UserKnnModel>(train, params, true);
}

std::unique_ptr<Model> fit_nmf(const RatingMatrix& train, const NmfParams& params,
                               const NmfEpochObserver& observer) {
    return std::make_unique<NmfModel>(train, params, observer);
}

}  // namespace biastrack
