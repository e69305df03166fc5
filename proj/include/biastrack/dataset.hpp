#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace biastrack {

using UserIndex = std::uint32_t;
using ItemIndex = std::uint32_t;

/// Bijection between external string ids and dense indices [0, size()).
/// Indices are handed out in first-seen order.
class IdIndex {
public:
    std::size_t intern(std::string_view id);
    std::optional<std::size_t> find(std::string_view id) const;
    /// Throws LookupError for an unknown id.
    std::size_t at(std::string_view id) const;
    const std::string& id(std::size_t index) const { return ids_.at(index); }
    const std::vector<std::string>& ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// User and item universes shared by a store and everything derived from it.
struct Catalog {
    IdIndex users;
    IdIndex items;
};

struct Interaction {
    std::string user_id;
    std::string item_id;
    std::int64_t listen_count = 0;

    friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct IndexedInteraction {
    UserIndex user = 0;
    ItemIndex item = 0;
    std::uint64_t listen_count = 0;
};

struct StoreStats {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::size_t n_interactions = 0;
};

/// Deduplicated (user, item, listen count) records. Immutable once built.
class InteractionStore {
public:
    InteractionStore();
    /// Sums duplicate (user, item) pairs; every count must be >= 1.
    explicit InteractionStore(std::span<const Interaction> interactions);

    const Catalog& catalog() const { return *catalog_; }
    std::shared_ptr<const Catalog> shared_catalog() const { return catalog_; }

    std::size_t n_users() const { return catalog_->users.size(); }
    std::size_t n_items() const { return catalog_->items.size(); }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    StoreStats stats() const { return {n_users(), n_items(), size()}; }

    /// Records in first-seen order.
    std::span<const IndexedInteraction> records() const { return records_; }
    /// One user's records, ordered by item index.
    std::span<const IndexedInteraction> user_records(UserIndex user) const;
    std::vector<Interaction> interactions() const;
    /// Distinct items per user, indexed by user.
    std::vector<std::vector<ItemIndex>> profiles() const;

private:
    std::shared_ptr<Catalog> catalog_;
    std::vector<IndexedInteraction> records_;
    std::vector<IndexedInteraction> by_user_;
    std::vector<std::size_t> user_offsets_;
};

/// Same catalog contents and same multiset of external records.
bool equivalent(const InteractionStore& a, const InteractionStore& b);

/// Reads `user<TAB>item<TAB>count` lines; `#` lines and blank lines are skipped.
InteractionStore load_interactions(const std::filesystem::path& path);
void write_interactions(const InteractionStore& store, const std::filesystem::path& path);

/// Keeps llround(fraction * size) records chosen by a seeded shuffle, in
/// their original order. Users or items left without records disappear.
InteractionStore subsample_interactions(const InteractionStore& store, double fraction,
                                        std::uint64_t seed);

struct Rating {
    UserIndex user = 0;
    ItemIndex item = 0;
    double value = 0.0;

    friend bool operator==(const Rating&, const Rating&) = default;
};

/// Sparse user x item preferences on the closed scale [0, 1000].
class RatingMatrix {
public:
    static constexpr double kScaleMin = 0.0;
    static constexpr double kScaleMax = 1000.0;

    RatingMatrix(std::shared_ptr<const Catalog> catalog, std::vector<Rating> ratings);

    const Catalog& catalog() const { return *catalog_; }
    std::shared_ptr<const Catalog> shared_catalog() const { return catalog_; }
    std::size_t n_users() const { return catalog_->users.size(); }
    std::size_t n_items() const { return catalog_->items.size(); }
    std::size_t size() const { return ratings_.size(); }
    bool empty() const { return ratings_.empty(); }

    /// All ratings ordered by (user, item).
    std::span<const Rating> ratings() const { return ratings_; }
    std::span<const Rating> user_ratings(UserIndex user) const;
    std::optional<double> find(UserIndex user, ItemIndex item) const;

private:
    std::shared_ptr<const Catalog> catalog_;
    std::vector<Rating> ratings_;
    std::vector<std::size_t> user_offsets_;
};

/// Per-user max scaling: the user's largest listen count maps to 1000.
RatingMatrix scale_preferences(const InteractionStore& store);

struct SplitPair {
    RatingMatrix train;
    std::vector<Rating> test;  // ordered by (user, item)
    std::uint64_t seed = 0;
    double ratio = 0.0;
};

/// Global uniform partition of rating records; round(ratio * n) go to train.
SplitPair split_ratings(const RatingMatrix& matrix, double ratio, std::uint64_t seed);

struct SyntheticConfig {
    std::size_t n_users = 500;
    std::size_t n_items = 2000;
    std::size_t interactions_per_user = 50;
    double zipf_exponent = 1.0;
    double mainstream_mix = 0.7;
};

void validate(const SyntheticConfig& config);

/// Zipf item popularity, mixture item choice, shifted-geometric listen counts.
InteractionStore generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace biastrack
