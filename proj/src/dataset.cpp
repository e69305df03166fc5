#include "biastrack/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <tuple>
#include <unordered_set>

#include "biastrack/errors.hpp"
#include "biastrack/random.hpp"

namespace biastrack {

namespace {

struct PairHash {
    std::size_t operator()(std::uint64_t key) const noexcept { return mix64(key); }
};

std::uint64_t pair_key(std::size_t user, std::size_t item) {
    return (static_cast<std::uint64_t>(user) << 32) | static_cast<std::uint64_t>(item);
}

std::string padded_id(char prefix, std::size_t value, std::size_t width) {
    std::string digits = std::to_string(value);
    std::string id(1, prefix);
    if (digits.size() < width) id.append(width - digits.size(), '0');
    return id + digits;
}

}  // namespace

std::size_t IdIndex::intern(std::string_view id) {
    auto [it, inserted] = index_.try_emplace(std::string(id), ids_.size());
    if (inserted) ids_.emplace_back(id);
    return it->second;
}

std::optional<std::size_t> IdIndex::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t IdIndex::at(std::string_view id) const {
    auto found = find(id);
    if (!found) throw LookupError("unknown id '" + std::string(id) + "'");
    return *found;
}

InteractionStore::InteractionStore() : catalog_(std::make_shared<Catalog>()), user_offsets_{0} {}

InteractionStore::InteractionStore(std::span<const Interaction> interactions)
    : catalog_(std::make_shared<Catalog>()) {
    std::unordered_map<std::uint64_t, std::size_t, PairHash> slot;
    for (const auto& in : interactions) {
        if (in.listen_count < 1)
            throw ValidationError("listen count must be >= 1 for (" + in.user_id + ", " +
                                  in.item_id + ")");
        const auto user = catalog_->users.intern(in.user_id);
        const auto item = catalog_->items.intern(in.item_id);
        auto [it, inserted] = slot.try_emplace(pair_key(user, item), records_.size());
        if (inserted)
            records_.push_back({static_cast<UserIndex>(user), static_cast<ItemIndex>(item),
                                static_cast<std::uint64_t>(in.listen_count)});
        else
            records_[it->second].listen_count += static_cast<std::uint64_t>(in.listen_count);
    }

    by_user_ = records_;
    std::sort(by_user_.begin(), by_user_.end(), [](const auto& a, const auto& b) {
        return std::tie(a.user, a.item) < std::tie(b.user, b.item);
    });
    user_offsets_.assign(n_users() + 1, 0);
    for (const auto& r : by_user_) ++user_offsets_[r.user + 1];
    std::partial_sum(user_offsets_.begin(), user_offsets_.end(), user_offsets_.begin());
}

std::span<const IndexedInteraction> InteractionStore::user_records(UserIndex user) const {
    if (user >= n_users()) throw LookupError("user index out of range");
    return std::span(by_user_).subspan(user_offsets_[user],
                                       user_offsets_[user + 1] - user_offsets_[user]);
}

std::vector<Interaction> InteractionStore::interactions() const {
    std::vector<Interaction> out;
    out.reserve(records_.size());
    for (const auto& r : records_)
        out.push_back({catalog_->users.id(r.user), catalog_->items.id(r.item),
                       static_cast<std::int64_t>(r.listen_count)});
    return out;
}

std::vector<std::vector<ItemIndex>> InteractionStore::profiles() const {
    std::vector<std::vector<ItemIndex>> out(n_users());
    for (UserIndex u = 0; u < n_users(); ++u)
        for (const auto& r : user_records(u)) out[u].push_back(r.item);
    return out;
}

bool equivalent(const InteractionStore& a, const InteractionStore& b) {
    if (a.size() != b.size() || a.n_users() != b.n_users() || a.n_items() != b.n_items())
        return false;
    auto key = [](const Interaction& x) { return std::tie(x.user_id, x.item_id, x.listen_count); };
    auto lhs = a.interactions();
    auto rhs = b.interactions();
    auto less = [&](const Interaction& x, const Interaction& y) { return key(x) < key(y); };
    std::sort(lhs.begin(), lhs.end(), less);
    std::sort(rhs.begin(), rhs.end(), less);
    return lhs == rhs;
}

InteractionStore load_interactions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read interactions file " + path.string());

    std::vector<Interaction> rows;
    std::string line;
    std::size_t line_no = 0;
    auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;

        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos || line.find('\t', tab2 + 1) != std::string::npos)
            throw ParseError(where() + ": expected user<TAB>item<TAB>count");
        std::string_view user(line.data(), tab1);
        std::string_view item(line.data() + tab1 + 1, tab2 - tab1 - 1);
        std::string_view count(line.data() + tab2 + 1, line.size() - tab2 - 1);
        if (user.empty() || item.empty()) throw ParseError(where() + ": empty identifier");

        std::int64_t value = 0;
        auto [end, ec] = std::from_chars(count.data(), count.data() + count.size(), value);
        if (ec != std::errc() || end != count.data() + count.size())
            throw ParseError(where() + ": listen count '" + std::string(count) +
                             "' is not an integer");
        if (value <= 0)
            throw ValidationError(where() + ": listen count must be positive, got " +
                                  std::string(count));
        rows.push_back({std::string(user), std::string(item), value});
    }
    if (in.bad()) throw IoError("error while reading " + path.string());
    if (rows.empty()) throw ValidationError(path.string() + ": no interactions");
    return InteractionStore(rows);
}

void write_interactions(const InteractionStore& store, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    const auto& cat = store.catalog();
    for (const auto& r : store.records())
        out << cat.users.id(r.user) << '\t' << cat.items.id(r.item) << '\t' << r.listen_count
            << '\n';
    if (!out) throw IoError("error while writing " + path.string());
}

RatingMatrix::RatingMatrix(std::shared_ptr<const Catalog> catalog, std::vector<Rating> ratings)
    : catalog_(std::move(catalog)), ratings_(std::move(ratings)) {
    std::sort(ratings_.begin(), ratings_.end(), [](const Rating& a, const Rating& b) {
        return std::tie(a.user, a.item) < std::tie(b.user, b.item);
    });
    for (std::size_t k = 0; k < ratings_.size(); ++k) {
        const auto& r = ratings_[k];
        if (r.user >= n_users() || r.item >= n_items())
            throw ValidationError("rating refers to an index outside the catalog");
        if (!(r.value >= kScaleMin && r.value <= kScaleMax))
            throw ValidationError("preference " + std::to_string(r.value) +
                                  " outside [0, 1000]");
        if (k > 0 && ratings_[k - 1].user == r.user && ratings_[k - 1].item == r.item)
            throw ValidationError("duplicate rating for user '" + catalog_->users.id(r.user) +
                                  "', item '" + catalog_->items.id(r.item) + "'");
    }
    user_offsets_.assign(n_users() + 1, 0);
    for (const auto& r : ratings_) ++user_offsets_[r.user + 1];
    std::partial_sum(user_offsets_.begin(), user_offsets_.end(), user_offsets_.begin());
}

std::span<const Rating> RatingMatrix::user_ratings(UserIndex user) const {
    if (user >= n_users()) return {};
    return std::span(ratings_).subspan(user_offsets_[user],
                                       user_offsets_[user + 1] - user_offsets_[user]);
}

std::optional<double> RatingMatrix::find(UserIndex user, ItemIndex item) const {
    auto row = user_ratings(user);
    auto it = std::lower_bound(row.begin(), row.end(), item,
                               [](const Rating& r, ItemIndex i) { return r.item < i; });
    if (it == row.end() || it->item != item) return std::nullopt;
    return it->value;
}

RatingMatrix scale_preferences(const InteractionStore& store) {
    if (store.empty()) throw ValidationError("cannot scale an empty interaction store");
    std::vector<Rating> ratings;
    ratings.reserve(store.size());
    for (UserIndex u = 0; u < store.n_users(); ++u) {
        auto row = store.user_records(u);
        std::uint64_t top = 0;
        for (const auto& r : row) top = std::max(top, r.listen_count);
        for (const auto& r : row) {
            // the maximum lands on exactly 1000
            const double value = r.listen_count == top
                                     ? RatingMatrix::kScaleMax
                                     : RatingMatrix::kScaleMax * static_cast<double>(r.listen_count) /
                                           static_cast<double>(top);
            ratings.push_back({u, r.item, value});
        }
    }
    return RatingMatrix(store.shared_catalog(), std::move(ratings));
}

InteractionStore subsample_interactions(const InteractionStore& store, double fraction,
                                        std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ValidationError("subsample fraction must lie in (0, 1], got " + std::to_string(fraction));
    const auto all = store.interactions();
    const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(all.size())));
    if (keep == 0) throw ValidationError("subsample keeps no interactions");

    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t k = order.size() - 1; k > 0; --k)
        std::swap(order[k], order[uniform_index(rng, k + 1)]);
    order.resize(keep);
    std::sort(order.begin(), order.end());

    std::vector<Interaction> kept;
    kept.reserve(keep);
    for (auto k : order) kept.push_back(all[k]);
    return InteractionStore(kept);
}

SplitPair split_ratings(const RatingMatrix& matrix, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw ValidationError("split ratio must lie in (0, 1), got " + std::to_string(ratio));
    if (matrix.size() < 2) throw ValidationError("split needs at least 2 ratings");

    const auto all = matrix.ratings();
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t k = order.size() - 1; k > 0; --k)
        std::swap(order[k], order[uniform_index(rng, k + 1)]);

    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(all.size())));
    std::vector<Rating> train;
    std::vector<Rating> test;
    train.reserve(n_train);
    test.reserve(all.size() - n_train);
    for (std::size_t k = 0; k < order.size(); ++k)
        (k < n_train ? train : test).push_back(all[order[k]]);
    std::sort(test.begin(), test.end(), [](const Rating& a, const Rating& b) {
        return std::tie(a.user, a.item) < std::tie(b.user, b.item);
    });
    return {RatingMatrix(matrix.shared_catalog(), std::move(train)), std::move(test), seed, ratio};
}

void validate(const SyntheticConfig& config) {
    if (config.n_users < 1) throw ValidationError("synthetic n_users must be >= 1");
    if (config.n_items < 2) throw ValidationError("synthetic n_items must be >= 2");
    if (config.interactions_per_user < 1)
        throw ValidationError("synthetic interactions_per_user must be >= 1");
    if (!(config.zipf_exponent > 0.0) || !std::isfinite(config.zipf_exponent))
        throw ValidationError("synthetic zipf_exponent must be > 0");
    if (!(config.mainstream_mix >= 0.0 && config.mainstream_mix <= 1.0))
        throw ValidationError("synthetic mainstream_mix must lie in [0, 1]");
}

InteractionStore generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
    validate(config);
    // Listen counts are 1 + Geometric with a mean that grows with the item's
    // Zipf weight: widely heard items are also replayed more.
    constexpr double kCountBase = 2.0;
    constexpr double kCountBoost = 18.0;

    std::vector<double> cdf(config.n_items);
    double total = 0.0;
    for (std::size_t i = 0; i < config.n_items; ++i) {
        total += std::pow(static_cast<double>(i + 1), -config.zipf_exponent);
        cdf[i] = total;
    }

    const auto user_width = std::to_string(config.n_users - 1).size();
    const auto item_width = std::to_string(config.n_items - 1).size();
    const double mean_size = static_cast<double>(config.interactions_per_user);

    Rng rng(seed);
    auto geometric = [&rng](double continue_prob) -> std::uint64_t {
        if (continue_prob <= 0.0) return 0;
        const double u = 1.0 - uniform01(rng);  // (0, 1]
        return static_cast<std::uint64_t>(std::floor(std::log(u) / std::log(continue_prob)));
    };
    auto draw_item = [&]() -> std::size_t {
        if (uniform01(rng) < config.mainstream_mix) {
            const double x = uniform01(rng) * total;
            auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
            return std::min<std::size_t>(it - cdf.begin(), config.n_items - 1);
        }
        return uniform_index(rng, config.n_items);
    };

    std::vector<Interaction> rows;
    rows.reserve(config.n_users * config.interactions_per_user);
    std::unordered_set<std::size_t> seen;
    for (std::size_t u = 0; u < config.n_users; ++u) {
        // profile size: shifted geometric with the configured mean
        const auto extra = geometric(1.0 - 1.0 / mean_size);
        const auto size = std::min<std::uint64_t>(1 + extra, config.n_items);
        const auto user_id = padded_id('u', u, user_width);

        seen.clear();
        std::size_t attempts = 0;
        const std::size_t max_attempts = 64 * size + 1024;
        while (seen.size() < size) {
            std::size_t item = draw_item();
            if (++attempts > max_attempts) {
                // crowded profile: take the next free item scanning from a uniform start
                item = uniform_index(rng, config.n_items);
                while (seen.contains(item)) item = (item + 1) % config.n_items;
            }
            if (!seen.insert(item).second) continue;
            const double weight = std::pow(static_cast<double>(item + 1), -config.zipf_exponent);
            const double mean_extra = kCountBase + kCountBoost * std::sqrt(weight);
            const auto count = 1 + geometric(mean_extra / (1.0 + mean_extra));
            rows.push_back({user_id, padded_id('a', item, item_width),
                            static_cast<std::int64_t>(count)});
        }
    }
    return InteractionStore(rows);
}

}  // namespace biastrack
