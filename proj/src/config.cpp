#include "biastrack/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "biastrack/errors.hpp"

namespace biastrack {

namespace {

using Entries = std::vector<std::pair<std::string, std::string>>;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// Ordered sections of `key = value` lines. Empty sections are kept: an
// algorithm without parameters is still listed.
std::vector<std::pair<std::string, Entries>> read_ini(std::string_view text) {
    std::vector<std::pair<std::string, Entries>> sections;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto eol = text.find('\n');
        const auto line = trim(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        const auto where = "config line " + std::to_string(line_no);

        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unmatched '['");
            const std::string name(trim(line.substr(1, line.size() - 2)));
            for (const auto& s : sections)
                if (s.first == name) throw ConfigError(where + ": duplicate section [" + name + "]");
            sections.emplace_back(name, Entries{});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (sections.empty())
            throw ConfigError(where + ": key '" + key + "' must live inside a [section]");
        auto& entries = sections.back().second;
        for (const auto& e : entries)
            if (e.first == key)
                throw ConfigError("[" + sections.back().first + "] " + key + ": given twice");
        entries.emplace_back(key, std::string(trim(line.substr(eq + 1))));
    }
    return sections;
}

class Section {
public:
    Section(std::string name, const Entries& entries) : name_(std::move(name)), entries_(entries) {}

    const std::string& name() const { return name_; }

    /// Rejects keys outside `allowed`.
    void expect_keys(std::initializer_list<std::string_view> allowed) const {
        for (const auto& [key, value] : entries_) {
            bool ok = false;
            for (auto a : allowed) ok = ok || key == a;
            if (!ok) throw ConfigError(field(key) + ": unknown key");
        }
    }

    std::optional<std::string> text(std::string_view key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return v;
        return std::nullopt;
    }

    template <typename T>
    void read(std::string_view key, T& out) const {
        auto v = text(key);
        if (!v) return;
        const char* first = v->data();
        const char* last = first + v->size();
        std::from_chars_result res{};
        if constexpr (std::is_floating_point_v<T>)
            res = std::from_chars(first, last, out, std::chars_format::general);
        else
            res = std::from_chars(first, last, out);
        if (res.ec != std::errc() || res.ptr != last || v->empty())
            throw ConfigError(field(key) + ": cannot parse '" + *v + "'");
    }

    std::string field(std::string_view key) const {
        return "[" + name_ + "] " + std::string(key);
    }

private:
    std::string name_;
    const Entries& entries_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    std::filesystem::path p(value);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
}

AlgorithmSpec algorithm_from(const Section& s, ModelKind kind) {
    AlgorithmSpec spec;
    spec.kind = kind;
    switch (kind) {
        case ModelKind::Random:
            s.expect_keys({"seed"});
            s.read("seed", spec.seed);
            break;
        case ModelKind::MostPopular:
            s.expect_keys({});
            break;
        case ModelKind::UserItemAvg:
            s.expect_keys({"epochs", "reg_u", "reg_i"});
            s.read("epochs", spec.baseline.epochs);
            s.read("reg_u", spec.baseline.reg_u);
            s.read("reg_i", spec.baseline.reg_i);
            if (spec.baseline.epochs < 1) throw ConfigError(s.field("epochs") + ": must be >= 1");
            if (spec.baseline.reg_u < 0) throw ConfigError(s.field("reg_u") + ": must be >= 0");
            if (spec.baseline.reg_i < 0) throw ConfigError(s.field("reg_i") + ": must be >= 0");
            break;
        case ModelKind::UserKNN:
        case ModelKind::UserKNNAvg:
            s.expect_keys({"k", "min_k", "min_support"});
            s.read("k", spec.knn.k);
            s.read("min_k", spec.knn.min_k);
            s.read("min_support", spec.knn.min_support);
            if (spec.knn.k < 1) throw ConfigError(s.field("k") + ": must be >= 1");
            if (spec.knn.min_k < 1) throw ConfigError(s.field("min_k") + ": must be >= 1");
            break;
        case ModelKind::NMF:
            s.expect_keys({"seed", "n_factors", "epochs", "reg_pu", "reg_qi", "init_low",
                           "init_high"});
            s.read("seed", spec.seed);
            spec.nmf.seed = spec.seed;
            s.read("n_factors", spec.nmf.n_factors);
            s.read("epochs", spec.nmf.epochs);
            s.read("reg_pu", spec.nmf.reg_pu);
            s.read("reg_qi", spec.nmf.reg_qi);
            s.read("init_low", spec.nmf.init_low);
            s.read("init_high", spec.nmf.init_high);
            if (spec.nmf.n_factors < 1) throw ConfigError(s.field("n_factors") + ": must be >= 1");
            if (spec.nmf.reg_pu < 0) throw ConfigError(s.field("reg_pu") + ": must be >= 0");
            if (spec.nmf.reg_qi < 0) throw ConfigError(s.field("reg_qi") + ": must be >= 0");
            if (spec.nmf.init_low < 0) throw ConfigError(s.field("init_low") + ": must be >= 0");
            if (spec.nmf.init_high < spec.nmf.init_low)
                throw ConfigError(s.field("init_high") + ": must be >= init_low");
            break;
    }
    return spec;
}

}  // namespace

std::vector<AlgorithmSpec> default_algorithms() {
    std::vector<AlgorithmSpec> out;
    for (auto kind : {ModelKind::Random, ModelKind::MostPopular, ModelKind::UserItemAvg,
                      ModelKind::UserKNN, ModelKind::UserKNNAvg, ModelKind::NMF}) {
        AlgorithmSpec spec;
        spec.kind = kind;
        out.push_back(spec);
    }
    return out;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    const auto sections = read_ini(text);
    ExperimentConfig cfg;
    cfg.source_text = std::string(text);
    std::set<ModelKind> seen_algorithms;
    for (const auto& [name, body] : sections) {
        const Section s(name, body);
        if (name == "experiment") {
            s.expect_keys({"input", "groups_file", "output_dir", "group_size", "popular_quantile",
                           "split_ratio", "split_seed", "top_n", "candidate_min_listeners",
                           "alpha", "mae_basis", "subsample", "subsample_seed"});
            if (auto v = s.text("input")) cfg.input = resolve(base_dir, *v);
            if (auto v = s.text("groups_file")) cfg.groups_file = resolve(base_dir, *v);
            if (auto v = s.text("output_dir")) cfg.output_dir = resolve(base_dir, *v);
            s.read("group_size", cfg.group_size);
            s.read("popular_quantile", cfg.popular_quantile);
            s.read("split_ratio", cfg.split_ratio);
            s.read("split_seed", cfg.split_seed);
            s.read("top_n", cfg.top_n);
            s.read("candidate_min_listeners", cfg.candidate_min_listeners);
            s.read("alpha", cfg.alpha);
            s.read("subsample", cfg.subsample);
            s.read("subsample_seed", cfg.subsample_seed);
            if (auto v = s.text("mae_basis")) {
                if (*v == "clipped") cfg.mae_basis = ErrorBasis::Clipped;
                else if (*v == "raw") cfg.mae_basis = ErrorBasis::Raw;
                else throw ConfigError(s.field("mae_basis") + ": expected 'clipped' or 'raw'");
            }
        } else if (name == "synthetic") {
            s.expect_keys({"n_users", "n_items", "interactions_per_user", "zipf_exponent",
                           "mainstream_mix", "seed"});
            SyntheticConfig syn;
            s.read("n_users", syn.n_users);
            s.read("n_items", syn.n_items);
            s.read("interactions_per_user", syn.interactions_per_user);
            s.read("zipf_exponent", syn.zipf_exponent);
            s.read("mainstream_mix", syn.mainstream_mix);
            s.read("seed", cfg.synthetic_seed);
            try {
                validate(syn);
            } catch (const ValidationError& e) {
                throw ConfigError("[synthetic]: " + std::string(e.what()));
            }
            cfg.synthetic = syn;
        } else if (name.rfind("algorithm.", 0) == 0) {
            const auto algo = name.substr(std::string_view("algorithm.").size());
            ModelKind kind;
            try {
                kind = parse_model_kind(algo);
            } catch (const ValidationError&) {
                throw ConfigError("[" + name + "]: unknown algorithm '" + algo + "'");
            }
            if (!seen_algorithms.insert(kind).second)
                throw ConfigError("[" + name + "]: algorithm listed twice");
            cfg.algorithms.push_back(algorithm_from(s, kind));
        } else {
            throw ConfigError("[" + name + "]: unknown section");
        }
    }

    if (cfg.input && cfg.synthetic)
        throw ConfigError("[experiment] input: conflicts with the [synthetic] section; give one");
    if (!cfg.input && !cfg.synthetic)
        throw ConfigError("[experiment] input: missing (or add a [synthetic] section)");
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0))
        throw ConfigError("[experiment] split_ratio: must lie in (0, 1)");
    if (!(cfg.popular_quantile > 0.0 && cfg.popular_quantile <= 1.0))
        throw ConfigError("[experiment] popular_quantile: must lie in (0, 1]");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw ConfigError("[experiment] alpha: must lie in (0, 1)");
    if (!(cfg.subsample > 0.0 && cfg.subsample <= 1.0))
        throw ConfigError("[experiment] subsample: must lie in (0, 1]");
    if (cfg.top_n < 1) throw ConfigError("[experiment] top_n: must be >= 1");
    if (cfg.algorithms.empty()) cfg.algorithms = default_algorithms();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

void check_paths(const ExperimentConfig& config) {
    if (config.input && !std::filesystem::is_regular_file(*config.input))
        throw ConfigError("[experiment] input: file not found: " + config.input->string());
    if (config.groups_file && !std::filesystem::is_regular_file(*config.groups_file))
        throw ConfigError("[experiment] groups_file: file not found: " +
                          config.groups_file->string());
}

}  // namespace biastrack
