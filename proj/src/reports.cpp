#include "biastrack/reports.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "biastrack/errors.hpp"

namespace biastrack {

namespace {

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                fields.back() += '"';
                ++k;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

std::string optional_number(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string("NA");
}

std::string hex(const unsigned char* data, std::size_t n) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        out += digits[data[k] >> 4];
        out += digits[data[k] & 0xf];
    }
    return out;
}

struct CsvReader {
    std::filesystem::path path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    explicit CsvReader(std::filesystem::path p) : path(std::move(p)) {
        std::ifstream in(path);
        if (!in) throw IoError("missing stage input: " + path.string());
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            (first ? header : rows.emplace_back()) = split_csv_line(line);
            first = false;
        }
        if (header.empty()) throw ParseError(path.string() + ": missing CSV header");
    }

    std::optional<std::size_t> column(std::string_view name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    }
    std::size_t require(std::string_view name) const {
        auto c = column(name);
        if (!c) throw ParseError(path.string() + ": missing column '" + std::string(name) + "'");
        return *c;
    }
    const std::string& cell(std::size_t row, std::size_t col) const {
        if (col >= rows[row].size())
            throw ParseError(path.string() + ":" + std::to_string(row + 2) + ": too few fields");
        return rows[row][col];
    }
};

}  // namespace

std::string format_number(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) return "nan";
    return std::string(buf, end);
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    return hex(md, len);
}

std::string sha256_file(const std::filesystem::path& path) {
    return sha256_hex(read_file(path));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

OutputSet::~OutputSet() {
    if (committed_) return;
    for (const auto& name : files_) {
        std::error_code ec;
        std::filesystem::remove(dir_ / name, ec);
    }
}

void OutputSet::write(const std::string& name, std::string_view content) {
    const auto target = dir_ / name;
    const auto tmp = dir_ / (name + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("error while writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
}

std::string figure1a_csv(const PopularityTable& table) {
    std::string out = "rank,listener_count\n";
    const auto curve = long_tail_curve(table);
    for (std::size_t k = 0; k < curve.size(); ++k)
        out += std::to_string(k + 1) + ',' + std::to_string(curve[k]) + '\n';
    return out;
}

std::string figure1b_csv(const InteractionStore& store, const PopularityTable& table) {
    std::string out = "user_id,popular_ratio\n";
    for (UserIndex u = 0; u < store.n_users(); ++u)
        out += csv_field(store.catalog().users.id(u)) + ',' +
               format_number(profile_popular_ratio(store, table, u)) + '\n';
    return out;
}

std::string figure2_csv(const InteractionStore& store, const CorrelationReport& report) {
    std::string out = "user_id,profile_size,popular_count,mean_popularity\n";
    for (UserIndex u = 0; u < report.points.size(); ++u) {
        const auto& p = report.points[u];
        out += csv_field(store.catalog().users.id(u)) + ',' + std::to_string(p.profile_size) + ',' +
               std::to_string(p.popular_count) + ',' + format_number(p.mean_popularity) + '\n';
    }
    return out;
}

std::string groups_csv(const Catalog& catalog, const UserGroups& groups,
                       const std::vector<std::optional<double>>& scores) {
    std::string out = "user_id,score,group\n";
    for (auto g : kGroups)
        for (auto u : groups.members(g)) {
            const bool scored = u < scores.size() && scores[u].has_value();
            out += csv_field(catalog.users.id(u)) + ',' +
                   (scored ? format_number(scores[u].value()) : std::string()) + ',' +
                   std::string(group_name(g)) + '\n';
        }
    return out;
}

std::string figure3_csv(const PopularityTable& table, const std::vector<std::size_t>& frequency) {
    std::string out = "item_id,popularity,frequency\n";
    for (std::size_t i = 0; i < table.n_items(); ++i)
        out += csv_field(table.catalog->items.id(i)) + ',' + format_number(table.popularity[i]) +
               ',' + std::to_string(frequency.at(i)) + '\n';
    return out;
}

std::string figure3_summary_csv(const std::vector<Correlations>& rows) {
    std::string out = "algorithm,pearson_r\n";
    for (const auto& row : rows)
        out += std::string(model_name(row.kind)) + ',' + optional_number(row.r) + '\n';
    return out;
}

std::string figure4_csv(const std::vector<GapRow>& rows) {
    std::string out = "group,algorithm,gap_p,gap_r,delta_gap\n";
    for (const auto& r : rows)
        out += std::string(group_name(r.group)) + ',' + std::string(model_name(r.kind)) + ',' +
               format_number(r.gap_p) + ',' + format_number(r.gap_r) + ',' +
               optional_number(r.delta) + '\n';
    return out;
}

std::string table1_csv(const std::vector<MaeReport>& reports) {
    std::string out = "group,algorithm,mae,n_records,fallback_count\n";
    auto row = [&](std::string_view group, ModelKind kind, const GroupMae& cell) {
        out += std::string(group) + ',' + std::string(model_name(kind)) + ',' +
               optional_number(cell.mae) + ',' + std::to_string(cell.n_records) + ',' +
               std::to_string(cell.fallback_count) + '\n';
    };
    for (auto g : kGroups)
        for (const auto& rep : reports) row(group_name(g), rep.kind, rep.group(g));
    for (const auto& rep : reports) row("All", rep.kind, rep.all);
    return out;
}

std::string ttests_csv(const std::vector<GroupTTest>& tests) {
    std::string out = "algorithm,group_pair,t,df,p\n";
    for (const auto& t : tests) {
        out += std::string(model_name(t.kind)) + ',' + std::string(group_name(t.first)) + '-' +
               std::string(group_name(t.second)) + ',';
        if (t.result)
            out += format_number(t.result->t_statistic) + ',' +
                   format_number(t.result->degrees_of_freedom) + ',' +
                   format_number(t.result->p_value) + '\n';
        else
            out += "NA,NA,NA\n";
    }
    return out;
}

std::string recommendations_csv(const RecommendationLists& recs) {
    std::string out = "user_id,rank,item_id\n";
    for (auto u : recs.users) {
        const auto& list = recs.lists.at(u);
        for (std::size_t k = 0; k < list.size(); ++k)
            out += csv_field(recs.catalog->users.id(u)) + ',' + std::to_string(k + 1) + ',' +
                   csv_field(recs.catalog->items.id(list[k])) + '\n';
    }
    return out;
}

LoadedGroups read_groups_csv(const std::filesystem::path& path, const Catalog& catalog) {
    const CsvReader csv(path);
    const auto c_user = csv.require("user_id");
    const auto c_group = csv.require("group");
    const auto c_score = csv.column("score");

    LoadedGroups out;
    out.scores.assign(catalog.users.size(), std::nullopt);
    std::vector<char> seen(catalog.users.size(), 0);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& id = csv.cell(r, c_user);
        const auto found = catalog.users.find(id);
        if (!found)
            throw LookupError(path.string() + ":" + std::to_string(r + 2) + ": unknown user '" +
                              id + "'");
        const auto u = static_cast<UserIndex>(*found);
        if (seen[u]) throw ValidationError(path.string() + ": user '" + id + "' listed twice");
        seen[u] = 1;
        Group g;
        try {
            g = parse_group(csv.cell(r, c_group));
        } catch (const ValidationError& e) {
            throw ParseError(path.string() + ":" + std::to_string(r + 2) + ": " + e.what());
        }
        switch (g) {
            case Group::LowMS: out.groups.low.push_back(u); break;
            case Group::MedMS: out.groups.med.push_back(u); break;
            case Group::HighMS: out.groups.high.push_back(u); break;
        }
        if (c_score && !csv.cell(r, *c_score).empty()) {
            const auto& text = csv.cell(r, *c_score);
            double v = 0.0;
            auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() || end != text.data() + text.size())
                throw ParseError(path.string() + ":" + std::to_string(r + 2) +
                                 ": bad score '" + text + "'");
            out.scores[u] = v;
        }
    }
    for (auto g : kGroups)
        if (out.groups.members(g).empty())
            throw ValidationError(path.string() + ": group " + std::string(group_name(g)) +
                                  " has no members");
    return out;
}

RecommendationLists read_recommendations_csv(const std::filesystem::path& path,
                                             std::shared_ptr<const Catalog> catalog) {
    const CsvReader csv(path);
    const auto c_user = csv.require("user_id");
    const auto c_rank = csv.require("rank");
    const auto c_item = csv.require("item_id");

    RecommendationLists recs;
    recs.catalog = catalog;
    recs.lists.resize(catalog->users.size());
    std::vector<char> listed(catalog->users.size(), 0);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto where = path.string() + ":" + std::to_string(r + 2);
        const auto user = catalog->users.find(csv.cell(r, c_user));
        const auto item = catalog->items.find(csv.cell(r, c_item));
        if (!user || !item) throw LookupError(where + ": unknown user or item");
        std::size_t rank = 0;
        const auto& text = csv.cell(r, c_rank);
        auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), rank);
        if (ec != std::errc() || end != text.data() + text.size() || rank < 1)
            throw ParseError(where + ": bad rank '" + text + "'");
        auto& list = recs.lists[*user];
        if (rank != list.size() + 1) throw ParseError(where + ": ranks out of order");
        list.push_back(static_cast<ItemIndex>(*item));
        recs.n = std::max(recs.n, rank);
        if (!listed[*user]) {
            listed[*user] = 1;
            recs.users.push_back(static_cast<UserIndex>(*user));
        }
    }
    return recs;
}

std::string figure3_file(ModelKind kind) {
    return "figure3_" + std::string(model_name(kind)) + ".csv";
}

std::string recommendations_file(ModelKind kind) {
    return "recs_" + std::string(model_name(kind)) + ".csv";
}

}  // namespace biastrack
