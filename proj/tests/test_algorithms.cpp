#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "biastrack/algorithms.hpp"
#include "biastrack/errors.hpp"
#include "support.hpp"

using namespace biastrack;

namespace {

RatingMatrix matrix_of(std::size_t n_users, std::size_t n_items, std::vector<Rating> ratings) {
    return RatingMatrix(fixtures::make_catalog(n_users, n_items), std::move(ratings));
}

double train_mae(const Model& m, const RatingMatrix& train) {
    double err = 0.0;
    for (const auto& r : train.ratings()) err += std::abs(m.predict(r.user, r.item).estimate - r.value);
    return err / static_cast<double>(train.size());
}

}  // namespace

TEST(ModelNames, RoundTrip) {
    for (auto k : {ModelKind::Random, ModelKind::MostPopular, ModelKind::UserItemAvg,
                   ModelKind::UserKNN, ModelKind::UserKNNAvg, ModelKind::NMF})
        EXPECT_EQ(parse_model_kind(model_name(k)), k);
    EXPECT_THROW(parse_model_kind("SVD++"), ValidationError);
}

TEST(Random, ConstantTrainGivesMean) {
    const auto m = matrix_of(2, 3, {{0, 0, 400}, {0, 2, 400}, {1, 1, 400}});
    const auto model = fit_random(m, 5);
    for (UserIndex u = 0; u < 2; ++u)
        for (ItemIndex i = 0; i < 3; ++i) EXPECT_EQ(model->predict(u, i).estimate, 400.0);
}

TEST(Random, LawOfLargeNumbers) {
    // 500 ratings alternating 400 and 600: mean 500, sample sd just above 100.
    std::vector<Rating> r;
    for (UserIndex u = 0; u < 500; ++u) r.push_back({u, 0, u % 2 ? 600.0 : 400.0});
    const auto train = matrix_of(500, 20, std::move(r));
    const RandomModel model(train, 77);
    EXPECT_NEAR(model.mean(), 500.0, 1e-9);
    EXPECT_NEAR(model.stddev(), 100.1, 0.1);

    double sum = 0.0;
    for (UserIndex u = 0; u < 500; ++u)
        for (ItemIndex i = 0; i < 20; ++i) sum += model.predict(u, i).estimate;
    EXPECT_NEAR(sum / 10000.0, 500.0, 5.0);
}

TEST(Random, DeterministicPerSeed) {
    const auto train = fixtures::random_instance(3);
    const auto a = fit_random(train, 9), b = fit_random(train, 9), c = fit_random(train, 10);
    bool differs = false;
    for (UserIndex u = 0; u < train.n_users(); ++u)
        for (ItemIndex i = 0; i < train.n_items(); ++i) {
            EXPECT_EQ(a->predict(u, i).raw_estimate, b->predict(u, i).raw_estimate);
            differs = differs || a->predict(u, i).raw_estimate != c->predict(u, i).raw_estimate;
        }
    EXPECT_TRUE(differs);
}

TEST(Random, EmptyTrainRejected) {
    EXPECT_THROW(fit_random(matrix_of(1, 1, {}), 1), ValidationError);
}

TEST(MostPopular, FixtureRatios) {
    const auto store = fixtures::f1_store();
    const auto train = scale_preferences(store);
    const auto model = fit_most_popular(train, item_popularity(store));
    const auto& items = store.catalog().items;
    auto at = [&](const char* id) { return model->predict(0, static_cast<ItemIndex>(items.at(id))); };
    EXPECT_EQ(at("a").estimate, 1000.0);
    EXPECT_NEAR(at("b").estimate, 2000.0 / 3.0, 1e-9);
    EXPECT_NEAR(at("c").estimate, 1000.0 / 3.0, 1e-9);
    EXPECT_EQ(model->predict(0, 0).estimate, model->predict(3, 0).estimate);
}

TEST(MostPopular, ItemMissingFromTrain) {
    const auto train = matrix_of(2, 3, {{0, 0, 1000}, {1, 0, 500}, {1, 1, 1000}});
    const auto model = fit_most_popular(train, item_popularity(train));
    const auto p = model->predict(0, 2);
    EXPECT_EQ(p.estimate, 0.0);
    EXPECT_TRUE(p.fallback);
}

TEST(MostPopular, UniverseMismatch) {
    const auto train = matrix_of(2, 3, {{0, 0, 1000}});
    const auto other = matrix_of(2, 4, {{0, 0, 1000}});
    EXPECT_THROW(fit_most_popular(train, item_popularity(other)), ValidationError);
}

TEST(UserItemAvg, ConstantRatings) {
    const auto m = matrix_of(3, 3, {{0, 0, 300}, {0, 1, 300}, {1, 1, 300}, {2, 2, 300}});
    const UserItemAvgModel model(m, {});
    for (auto b : model.user_bias()) EXPECT_NEAR(b, 0.0, 1e-12);
    for (auto b : model.item_bias()) EXPECT_NEAR(b, 0.0, 1e-12);
    EXPECT_NEAR(model.predict(2, 0).estimate, 300.0, 1e-12);
}

TEST(UserItemAvg, SingleRatingInterpolates) {
    const auto m = matrix_of(1, 1, {{0, 0, 700}});
    const auto model = fit_user_item_avg(m, {1, 0.0, 0.0});
    EXPECT_DOUBLE_EQ(model->predict(0, 0).estimate, 700.0);
}

TEST(UserItemAvg, TwoByTwoOracle) {
    const auto m = matrix_of(2, 2, {{0, 0, 900}, {0, 1, 200}, {1, 0, 450}});
    const UserItemAvgModel model(m, {10, 15, 10});
    const fixtures::AlsOracle oracle(fixtures::to_dense(m), 10, 15, 10);
    for (UserIndex u = 0; u < 2; ++u)
        for (ItemIndex i = 0; i < 2; ++i)
            EXPECT_NEAR(model.predict(u, i).raw_estimate, oracle.predict(u, i), 1e-9);
}

TEST(UserItemAvg, RandomOracle) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = fixtures::random_instance(seed);
        const fixtures::AlsOracle oracle(fixtures::to_dense(m), 10, 15, 10);
        const auto model = fit_user_item_avg(m);
        for (UserIndex u = 0; u < m.n_users(); ++u)
            for (ItemIndex i = 0; i < m.n_items(); ++i)
                EXPECT_NEAR(model->predict(u, i).raw_estimate, oracle.predict(u, i), 1e-9)
                    << "seed " << seed;
    }
}

TEST(UserItemAvg, FallbackOnlyWhenBothUnknown) {
    // user 2 and item 2 never rated
    const auto m = matrix_of(3, 3, {{0, 0, 800}, {1, 1, 200}, {0, 1, 500}});
    const auto model = fit_user_item_avg(m);
    EXPECT_FALSE(model->predict(2, 0).fallback);
    EXPECT_FALSE(model->predict(0, 2).fallback);
    const auto p = model->predict(2, 2);
    EXPECT_TRUE(p.fallback);
    EXPECT_NEAR(p.estimate, 500.0, 1e-12);
}

TEST(Similarity, SymmetricBoundedAndMinSupport) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = fixtures::random_instance(seed);
        const auto d = fixtures::to_dense(m);
        for (std::size_t support : {1u, 2u, 3u}) {
            const UserSimilarity sim(m, support);
            for (UserIndex u = 0; u < m.n_users(); ++u)
                for (UserIndex v = 0; v < m.n_users(); ++v) {
                    EXPECT_NEAR(sim(u, v), sim(v, u), 1e-12);
                    EXPECT_GE(sim(u, v), 0.0);
                    EXPECT_LE(sim(u, v), 1.0);
                    EXPECT_NEAR(sim(u, v), fixtures::oracle_msd_similarity(d, u, v, support), 1e-12);
                }
        }
    }
}

TEST(UserKnn, IdenticalNeighbour) {
    // users 0 and 1 agree on item 0; only user 1 rated item 1
    const auto m = matrix_of(2, 2, {{0, 0, 600}, {1, 0, 600}, {1, 1, 350}});
    const auto p = fit_user_knn(m)->predict(0, 1);
    EXPECT_DOUBLE_EQ(p.estimate, 350.0);
    EXPECT_FALSE(p.fallback);
}

TEST(UserKnn, NobodyElseRated) {
    const auto m = matrix_of(2, 2, {{0, 0, 600}, {1, 0, 200}, {0, 1, 900}});
    const auto model = fit_user_knn(m);
    const auto p = model->predict(0, 1);
    EXPECT_TRUE(p.fallback);
    EXPECT_DOUBLE_EQ(p.estimate, model->summary().global_mean);
}

TEST(UserKnn, NeedsTwoUsers) {
    EXPECT_THROW(fit_user_knn(matrix_of(1, 2, {{0, 0, 1}})), ValidationError);
    EXPECT_THROW(fit_user_knn(matrix_of(2, 2, {})), ValidationError);
}

TEST(UserKnn, FixtureOracleK2) {
    const auto m = scale_preferences(fixtures::f1_store());
    const auto d = fixtures::to_dense(m);
    const KnnParams params{2, 1, 1};
    const auto plain = fit_user_knn(m, params);
    const auto avg = fit_user_knn_avg(m, params);
    for (UserIndex u = 0; u < m.n_users(); ++u)
        for (ItemIndex i = 0; i < m.n_items(); ++i) {
            const auto o1 = fixtures::knn_oracle(d, u, i, 2, 1, 1, false);
            const auto o2 = fixtures::knn_oracle(d, u, i, 2, 1, 1, true);
            EXPECT_NEAR(plain->predict(u, i).raw_estimate, o1.value, 1e-9);
            EXPECT_EQ(plain->predict(u, i).fallback, o1.fallback);
            EXPECT_NEAR(avg->predict(u, i).raw_estimate, o2.value, 1e-9);
            EXPECT_EQ(avg->predict(u, i).fallback, o2.fallback);
        }
}

TEST(UserKnn, RandomOracle) {
    const KnnParams settings[] = {{40, 1, 1}, {2, 1, 1}, {1, 1, 2}, {3, 2, 1}};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = fixtures::random_instance(seed);
        const auto d = fixtures::to_dense(m);
        for (const auto& p : settings) {
            const auto plain = fit_user_knn(m, p);
            const auto avg = fit_user_knn_avg(m, p);
            for (UserIndex u = 0; u < m.n_users(); ++u)
                for (ItemIndex i = 0; i < m.n_items(); ++i) {
                    const auto o1 = fixtures::knn_oracle(d, u, i, p.k, p.min_k, p.min_support, false);
                    const auto o2 = fixtures::knn_oracle(d, u, i, p.k, p.min_k, p.min_support, true);
                    ASSERT_NEAR(plain->predict(u, i).raw_estimate, o1.value, 1e-9) << "seed " << seed;
                    ASSERT_EQ(plain->predict(u, i).fallback, o1.fallback) << "seed " << seed;
                    ASSERT_NEAR(avg->predict(u, i).raw_estimate, o2.value, 1e-9) << "seed " << seed;
                    ASSERT_EQ(avg->predict(u, i).fallback, o2.fallback) << "seed " << seed;
                }
        }
    }
}

TEST(UserKnnAvg, HandFormula) {
    // user 0 mean 500 and user 1 identical on item 0; user 1 deviates +100 on item 1
    const auto m = matrix_of(2, 3, {{0, 0, 400}, {0, 2, 600}, {1, 0, 400}, {1, 1, 500}, {1, 2, 300}});
    // user 1 mean 400, deviation on item 1 is +100; sim(0,1) = 1/(msd+1) with msd = (0 + 300^2)/2
    const auto p = fit_user_knn_avg(m)->predict(0, 1);
    EXPECT_NEAR(p.estimate, 600.0, 1e-9);

    const auto flat = matrix_of(3, 2, {{0, 0, 250}, {1, 0, 250}, {1, 1, 250}, {2, 1, 250}});
    const auto model = fit_user_knn_avg(flat);
    for (UserIndex u = 0; u < 3; ++u)
        for (ItemIndex i = 0; i < 2; ++i) EXPECT_NEAR(model->predict(u, i).estimate, 250.0, 1e-12);
}

TEST(UserKnnAvg, EmptyNeighbourhoodFallsBackToUserMean) {
    const auto m = matrix_of(2, 3, {{0, 0, 200}, {0, 1, 400}, {1, 0, 900}});
    const auto p = fit_user_knn_avg(m)->predict(1, 2);
    EXPECT_TRUE(p.fallback);
    EXPECT_DOUBLE_EQ(p.estimate, 900.0);
}

TEST(Nmf, NonNegativeEveryEpoch) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = fixtures::random_instance(seed + 100);
        NmfParams params;
        params.n_factors = 3;
        params.epochs = 30;
        params.seed = seed;
        std::size_t epochs_seen = 0;
        const NmfModel model(m, params, [&](std::size_t epoch, const NmfFactors& f) {
            ++epochs_seen;
            EXPECT_EQ(epoch, epochs_seen);
            for (auto x : f.user) ASSERT_GE(x, 0.0) << "seed " << seed;
            for (auto x : f.item) ASSERT_GE(x, 0.0) << "seed " << seed;
        });
        EXPECT_EQ(epochs_seen, 30u);
        for (UserIndex u = 0; u < m.n_users(); ++u)
            for (ItemIndex i = 0; i < m.n_items(); ++i)
                EXPECT_TRUE(std::isfinite(model.predict(u, i).raw_estimate));
    }
}

TEST(Nmf, RankOneConverges) {
    const std::vector<Interaction> rows{{"u1", "a", 10}, {"u1", "b", 20}, {"u2", "a", 30}, {"u2", "b", 60}};
    const auto train = scale_preferences(InteractionStore(rows));
    NmfParams params;
    params.n_factors = 2;
    params.epochs = 200;
    params.reg_pu = params.reg_qi = 0.0;
    params.seed = 1;
    double first = -1.0;
    const NmfModel model(train, params, [&](std::size_t epoch, const NmfFactors& f) {
        if (epoch != 1) return;
        double err = 0.0;
        for (const auto& r : train.ratings()) {
            double est = 0.0;
            for (std::size_t k = 0; k < f.n_factors; ++k)
                est += f.user[r.user * f.n_factors + k] * f.item[r.item * f.n_factors + k];
            err += std::abs(std::clamp(est, 0.0, 1000.0) - r.value);
        }
        first = err / static_cast<double>(train.size());
    });
    const double last = train_mae(model, train);
    EXPECT_LT(last, 10.0);
    EXPECT_LT(last, first);
}

TEST(Nmf, UnregularizedErrorNeverRises) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto m = fixtures::random_instance(seed);
        NmfParams params;
        params.n_factors = 3;
        params.epochs = 40;
        params.reg_pu = params.reg_qi = 0.0;
        params.seed = seed;
        double previous = std::numeric_limits<double>::infinity();
        NmfModel(m, params, [&](std::size_t epoch, const NmfFactors& f) {
            double sse = 0.0;
            for (const auto& r : m.ratings()) {
                double est = 0.0;
                for (std::size_t k = 0; k < f.n_factors; ++k)
                    est += f.user[r.user * f.n_factors + k] * f.item[r.item * f.n_factors + k];
                sse += (est - r.value) * (est - r.value);
            }
            EXPECT_LE(sse, previous * (1.0 + 1e-12)) << "seed " << seed << " epoch " << epoch;
            previous = sse;
        });
    }
}

TEST(Nmf, DeterministicFactors) {
    const auto m = fixtures::random_instance(4);
    NmfParams params;
    params.seed = 12;
    const NmfModel a(m, params), b(m, params);
    EXPECT_EQ(a.factors().user, b.factors().user);
    EXPECT_EQ(a.factors().item, b.factors().item);
}

TEST(Nmf, UnknownEntitiesFallBack) {
    const auto m = matrix_of(3, 3, {{0, 0, 800}, {1, 1, 200}});
    const auto model = fit_nmf(m);
    const auto p = model->predict(2, 2);
    EXPECT_TRUE(p.fallback);
    EXPECT_DOUBLE_EQ(p.estimate, 500.0);
}

TEST(Nmf, ZeroRatingsStayFinite) {
    // every rating 0 drives numerators to 0; the floor keeps divisions finite
    const auto m = matrix_of(2, 2, {{0, 0, 0}, {0, 1, 0}, {1, 0, 0}});
    const auto model = fit_nmf(m);
    for (UserIndex u = 0; u < 2; ++u)
        for (ItemIndex i = 0; i < 2; ++i) EXPECT_TRUE(std::isfinite(model->predict(u, i).raw_estimate));
}

TEST(Predict, ClippedAndFiniteForAllKinds) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = fixtures::random_instance(seed + 40);
        std::vector<std::unique_ptr<Model>> models;
        models.push_back(fit_random(m, seed));
        models.push_back(fit_most_popular(m, item_popularity(m)));
        models.push_back(fit_user_item_avg(m, {10, 0, 0}));
        models.push_back(fit_user_knn(m));
        models.push_back(fit_user_knn_avg(m));
        models.push_back(fit_nmf(m, {4, 20, 0.06, 0.06, 0.0, 1.0, seed}));
        for (const auto& model : models)
            for (UserIndex u = 0; u < m.n_users() + 1; ++u)
                for (ItemIndex i = 0; i < m.n_items() + 1; ++i) {
                    const auto p = model->predict(u, i);
                    EXPECT_TRUE(std::isfinite(p.estimate));
                    EXPECT_GE(p.estimate, 0.0);
                    EXPECT_LE(p.estimate, 1000.0);
                }
    }
}

TEST(Predict, UnknownUserAndItemGiveGlobalMean) {
    const auto m = matrix_of(3, 3, {{0, 0, 100}, {1, 1, 700}});
    for (const auto& model :
         {fit_user_item_avg(m), fit_user_knn(m), fit_user_knn_avg(m), fit_nmf(m)}) {
        const auto p = model->predict(2, 2);
        EXPECT_TRUE(p.fallback) << model_name(model->kind());
        EXPECT_DOUBLE_EQ(p.estimate, 400.0) << model_name(model->kind());
    }
}

TEST(Predict, RawEstimateKeepsOvershoot) {
    // a strongly positive user and item push the baseline past the top of the scale
    const auto m = matrix_of(2, 2, {{0, 0, 1000}, {0, 1, 1000}, {1, 0, 1000}, {1, 1, 0}});
    const auto model = fit_user_item_avg(m, {10, 0, 0});
    bool overshoot = false;
    for (UserIndex u = 0; u < 2; ++u)
        for (ItemIndex i = 0; i < 2; ++i) {
            const auto p = model->predict(u, i);
            EXPECT_EQ(p.estimate, std::clamp(p.raw_estimate, 0.0, 1000.0));
            overshoot = overshoot || p.raw_estimate > 1000.0 || p.raw_estimate < 0.0;
        }
    EXPECT_TRUE(overshoot);
}
