#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "biastrack/dataset.hpp"
#include "biastrack/profiling.hpp"

namespace biastrack {

enum class ModelKind { Random, MostPopular, UserItemAvg, UserKNN, UserKNNAvg, NMF };

std::string_view model_name(ModelKind kind);
/// Accepts the display names above; throws ValidationError otherwise.
ModelKind parse_model_kind(std::string_view name);

struct Prediction {
    UserIndex user = 0;
    ItemIndex item = 0;
    double estimate = 0.0;  // clipped to [0, 1000]
    double raw_estimate = 0.0;  // before clipping
    bool fallback = false;
};

/// Statistics of the training matrix every model keeps.
struct TrainSummary {
    double global_mean = 0.0;
    std::vector<double> user_mean;  // global mean for users without ratings
    std::vector<std::size_t> user_count;
    std::vector<std::size_t> item_count;
    std::size_t n_ratings = 0;

    bool knows_user(UserIndex u) const { return u < user_count.size() && user_count[u] > 0; }
    bool knows_item(ItemIndex i) const { return i < item_count.size() && item_count[i] > 0; }
};

TrainSummary summarize(const RatingMatrix& train);

/// A fitted rating predictor. Immutable; predict is safe to call concurrently.
class Model {
public:
    virtual ~Model() = default;

    virtual ModelKind kind() const = 0;
    /// Total over any (user, item) pair; unknown ids take the fallback path.
    Prediction predict(UserIndex user, ItemIndex item) const;
    const TrainSummary& summary() const { return summary_; }

protected:
    explicit Model(TrainSummary summary) : summary_(std::move(summary)) {}

    struct Estimate {
        double value;
        bool fallback;
    };
    virtual Estimate estimate(UserIndex user, ItemIndex item) const = 0;

    TrainSummary summary_;
};

/// Normal fit of the training ratings; each (user, item) draw is a pure
/// function of (seed, user, item).
class RandomModel final : public Model {
public:
    RandomModel(const RatingMatrix& train, std::uint64_t seed);
    ModelKind kind() const override { return ModelKind::Random; }
    double mean() const { return mean_; }
    double stddev() const { return stddev_; }

private:
    Estimate estimate(UserIndex user, ItemIndex item) const override;
    double mean_ = 0.0;
    double stddev_ = 0.0;
    std::uint64_t seed_ = 0;
};

/// 1000 x popularity(i) / max popularity; user independent.
class MostPopularModel final : public Model {
public:
    MostPopularModel(const RatingMatrix& train, const PopularityTable& popularity);
    ModelKind kind() const override { return ModelKind::MostPopular; }

private:
    Estimate estimate(UserIndex user, ItemIndex item) const override;
    std::vector<double> score_;
};

struct BaselineParams {
    std::size_t epochs = 10;
    double reg_u = 15.0;
    double reg_i = 10.0;
};

/// mu + b_u + b_i with biases fitted by alternating least squares.
class UserItemAvgModel final : public Model {
public:
    UserItemAvgModel(const RatingMatrix& train, const BaselineParams& params);
    ModelKind kind() const override { return ModelKind::UserItemAvg; }
    const std::vector<double>& user_bias() const { return bu_; }
    const std::vector<double>& item_bias() const { return bi_; }

private:
    Estimate estimate(UserIndex user, ItemIndex item) const override;
    std::vector<double> bu_;
    std::vector<double> bi_;
};

struct KnnParams {
    std::size_t k = 40;
    std::size_t min_k = 1;
    std::size_t min_support = 1;
};

/// User-user similarity 1 / (msd + 1) over co-rated items; zero below min_support.
class UserSimilarity {
public:
    UserSimilarity(const RatingMatrix& train, std::size_t min_support);
    double operator()(UserIndex u, UserIndex v) const { return sim_[u * n_ + v]; }
    std::size_t n_users() const { return n_; }

private:
    std::size_t n_ = 0;
    std::vector<double> sim_;
};

/// User-based neighbourhood predictor. With mean centering this is the
/// UserKNNAvg variant: mu_u + weighted mean of neighbour deviations.
class UserKnnModel final : public Model {
public:
    UserKnnModel(const RatingMatrix& train, const KnnParams& params, bool mean_centered);
    ModelKind kind() const override {
        return mean_centered_ ? ModelKind::UserKNNAvg : ModelKind::UserKNN;
    }
    const UserSimilarity& similarity() const { return sim_; }

private:
    Estimate estimate(UserIndex user, ItemIndex item) const override;

    struct Rater {
        UserIndex user;
        double value;
    };
    KnnParams params_;
    bool mean_centered_;
    UserSimilarity sim_;
    std::vector<std::vector<Rater>> item_raters_;
};

struct NmfParams {
    std::size_t n_factors = 15;
    std::size_t epochs = 50;
    double reg_pu = 0.06;
    double reg_qi = 0.06;
    double init_low = 0.0;  // clamped up to 1e-9
    double init_high = 1.0;
    std::uint64_t seed = 0;
};

/// Row-major factor matrices, n_users x n_factors and n_items x n_factors.
struct NmfFactors {
    std::size_t n_factors = 0;
    std::vector<double> user;
    std::vector<double> item;
};

using NmfEpochObserver = std::function<void(std::size_t epoch, const NmfFactors&)>;

/// Regularized multiplicative-update NMF; factors stay non-negative.
class NmfModel final : public Model {
public:
    NmfModel(const RatingMatrix& train, const NmfParams& params,
             const NmfEpochObserver& observer = {});
    ModelKind kind() const override { return ModelKind::NMF; }
    const NmfFactors& factors() const { return factors_; }

private:
    Estimate estimate(UserIndex user, ItemIndex item) const override;
    NmfFactors factors_;
};

std::unique_ptr<Model> fit_random(const RatingMatrix& train, std::uint64_t seed);
std::unique_ptr<Model> fit_most_popular(const RatingMatrix& train, const PopularityTable& popularity);
std::unique_ptr<Model> fit_user_item_avg(const RatingMatrix& train, const BaselineParams& params = {});
std::unique_ptr<Model> fit_user_knn(const RatingMatrix& train, const KnnParams& params = {});
std::unique_ptr<Model> fit_user_knn_avg(const RatingMatrix& train, const KnnParams& params = {});
std::unique_ptr<Model> fit_nmf(const RatingMatrix& train, const NmfParams& params = {},
                               const NmfEpochObserver& observer = {});

}  // namespace biastrack
