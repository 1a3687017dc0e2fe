#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alarmrca/alarm_model.hpp"
#include "alarmrca/cpbe.hpp"
#include "alarmrca/error.hpp"
#include "alarmrca/graph.hpp"
#include "alarmrca/hawkes.hpp"
#include "alarmrca/influence.hpp"
#include "alarmrca/synth.hpp"

namespace alarmrca::io {

using json = nlohmann::json;

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    return out;
}

inline json parse_json(std::istream& in, const std::string& what) {
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(what + ": " + e.what());
    }
}

inline json read_json_file(const std::string& path) {
    auto in = open_in(path);
    return parse_json(in, path);
}

// ---- CSV ----

namespace detail {

/// Splits one CSV line; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline bool next_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) return true;
    }
    return false;
}

inline void expect_header(std::istream& in, const std::vector<std::string>& want, const std::string& what) {
    std::string line;
    if (!next_line(in, line)) throw DataError(what + ": empty file");
    auto cols = split_csv(line);
    for (auto& c : cols) c = trim(c);
    if (!cols.empty() && cols[0].rfind("\xEF\xBB\xBF", 0) == 0) cols[0].erase(0, 3);
    if (cols != want) {
        std::string w;
        for (const auto& c : want) w += (w.empty() ? "" : ",") + c;
        throw DataError(what + ": expected header '" + w + "'");
    }
}

inline std::optional<double> parse_number(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

}  // namespace detail

/// Parses YYYY-MM-DD[T| ]HH:MM:SS[.frac][Z|+HH:MM|-HH:MM] into epoch seconds. No zone means UTC.
inline std::optional<double> parse_iso8601(std::string_view s) {
    using namespace std::chrono;
    auto y = detail::digits(s, 0, 4), mo = detail::digits(s, 5, 2), d = detail::digits(s, 8, 2);
    auto h = detail::digits(s, 11, 2), mi = detail::digits(s, 14, 2), sec = detail::digits(s, 17, 2);
    if (!y || !mo || !d || !h || !mi || !sec || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
        s[13] != ':' || s[16] != ':')
        return std::nullopt;
    year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
    if (!ymd.ok() || *h > 23 || *mi > 59 || *sec > 60) return std::nullopt;
    double t = static_cast<double>(sys_days{ymd}.time_since_epoch().count()) * 86400.0 + *h * 3600.0 + *mi * 60.0 + *sec;
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        double scale = 0.1;
        ++pos;
        if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos]))) return std::nullopt;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            t += (s[pos] - '0') * scale;
            scale /= 10.0;
            ++pos;
        }
    }
    if (pos == s.size()) return t;
    if (s[pos] == 'Z' && pos + 1 == s.size()) return t;
    if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size() && s[pos + 3] == ':') {
        auto oh = detail::digits(s, pos + 1, 2), om = detail::digits(s, pos + 4, 2);
        if (!oh || !om) return std::nullopt;
        double off = *oh * 3600.0 + *om * 60.0;
        return s[pos] == '+' ? t - off : t + off;
    }
    return std::nullopt;
}

enum class TimestampFormat { numeric, iso8601 };

/// Reads `timestamp,device,alarm_type`. The timestamp format is decided once per file from the
/// first nonempty timestamp; values that do not parse in that format become missing.
inline std::vector<RawAlarmRow> read_alarm_csv(std::istream& in, TimestampFormat* detected = nullptr) {
    detail::expect_header(in, {"timestamp", "device", "alarm_type"}, "alarm CSV");
    std::vector<RawAlarmRow> rows;
    std::optional<TimestampFormat> fmt;
    std::string line;
    std::size_t lineno = 1;
    while (detail::next_line(in, line)) {
        ++lineno;
        auto f = detail::split_csv(line);
        if (f.size() != 3)
            throw DataError("alarm CSV line " + std::to_string(lineno) + ": expected 3 fields, got " +
                            std::to_string(f.size()));
        RawAlarmRow r;
        auto ts = detail::trim(f[0]);
        if (!ts.empty()) {
            if (!fmt) fmt = detail::parse_number(ts) ? TimestampFormat::numeric : TimestampFormat::iso8601;
            r.timestamp = *fmt == TimestampFormat::numeric ? detail::parse_number(ts) : parse_iso8601(ts);
        }
        if (auto dv = detail::trim(f[1]); !dv.empty()) r.device = dv;
        if (auto ty = detail::trim(f[2]); !ty.empty()) r.alarm_type = ty;
        rows.push_back(std::move(r));
    }
    if (detected && fmt) *detected = *fmt;
    return rows;
}

inline NetworkTopology read_topology_csv(std::istream& in) {
    detail::expect_header(in, {"device_a", "device_b"}, "topology CSV");
    NetworkTopology topo;
    std::string line;
    std::size_t lineno = 1;
    while (detail::next_line(in, line)) {
        ++lineno;
        auto f = detail::split_csv(line);
        if (f.size() != 2)
            throw DataError("topology CSV line " + std::to_string(lineno) + ": expected 2 fields");
        auto a = detail::trim(f[0]), b = detail::trim(f[1]);
        if (a.empty() || b.empty()) throw DataError("topology CSV line " + std::to_string(lineno) + ": empty device");
        topo.add_link(a, b);
    }
    return topo;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

}  // namespace detail

inline void write_alarm_csv(std::ostream& out, const std::vector<AlarmRecord>& records) {
    out << "timestamp,device,alarm_type\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : records)
        out << r.occurred_at << ',' << detail::csv_field(r.device) << ',' << detail::csv_field(r.alarm_type) << '\n';
}

/// Root labels as `window,alarm_type`.
inline std::map<std::size_t, AlarmType> read_labels_csv(std::istream& in) {
    detail::expect_header(in, {"window", "alarm_type"}, "label CSV");
    std::map<std::size_t, AlarmType> out;
    std::string line;
    while (detail::next_line(in, line)) {
        auto f = detail::split_csv(line);
        auto w = f.size() == 2 ? detail::parse_number(detail::trim(f[0])) : std::nullopt;
        if (!w || *w < 0 || std::floor(*w) != *w) throw DataError("label CSV: bad row '" + line + "'");
        out[static_cast<std::size_t>(*w)] = detail::trim(f[1]);
    }
    return out;
}

inline void write_labels_csv(std::ostream& out, const std::map<std::size_t, AlarmType>& labels) {
    out << "window,alarm_type\n";
    for (const auto& [w, t] : labels) out << w << ',' << detail::csv_field(t) << '\n';
}

// ---- JSON helpers ----

namespace detail {

template <typename T>
T get(const json& j, const char* key, const std::string& what) {
    auto it = j.find(key);
    if (it == j.end()) throw DataError(what + ": missing '" + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw DataError(what + ": bad '" + key + "': " + e.what());
    }
}

}  // namespace detail

// ---- transactions ----

inline json transaction_to_json(const AlarmTransaction& t) {
    json entries = json::object();
    for (const auto& [type, e] : t.entries) entries[type] = {{"t", e.first_time}, {"n", e.count}};
    return {{"window", t.window_id}, {"component", t.component}, {"entries", entries}};
}

inline AlarmTransaction transaction_from_json(const json& j) {
    const std::string what = "transaction";
    if (!j.is_object()) throw DataError(what + ": expected an object");
    AlarmTransaction t;
    t.window_id = detail::get<std::size_t>(j, "window", what);
    t.component = detail::get<std::size_t>(j, "component", what);
    auto entries = detail::get<json>(j, "entries", what);
    if (!entries.is_object()) throw DataError(what + ": 'entries' must be an object");
    for (const auto& [type, e] : entries.items()) {
        TransactionEntry te{detail::get<double>(e, "t", what), detail::get<std::size_t>(e, "n", what)};
        if (te.count < 1) throw DataError(what + ": entry " + type + " has count 0");
        t.entries.emplace(type, te);
    }
    return t;
}

inline void write_transactions_jsonl(std::ostream& out, const std::vector<AlarmTransaction>& txns) {
    for (const auto& t : txns) out << transaction_to_json(t).dump() << '\n';
}

template <typename F>
void for_each_jsonl(std::istream& in, const std::string& what, F&& f) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(what + " line " + std::to_string(lineno) + ": " + e.what());
        }
        f(j);
    }
}

inline std::vector<AlarmTransaction> read_transactions_jsonl(std::istream& in) {
    std::vector<AlarmTransaction> out;
    for_each_jsonl(in, "transactions", [&](const json& j) { out.push_back(transaction_from_json(j)); });
    return out;
}

// ---- Hawkes model ----

inline json model_to_json(const hawkes::HawkesModel& m) {
    json mu = json::array(), alpha = json::array();
    for (Eigen::Index i = 0; i < m.mu.size(); ++i) mu.push_back(m.mu[i]);
    for (Eigen::Index i = 0; i < m.alpha.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.alpha.cols(); ++k) row.push_back(m.alpha(i, k));
        alpha.push_back(row);
    }
    return {{"types", m.types}, {"mu", mu}, {"alpha", alpha}, {"beta", m.beta}};
}

inline hawkes::HawkesModel model_from_json(const json& j) {
    const std::string what = "model";
    hawkes::HawkesModel m;
    m.types = detail::get<std::vector<std::string>>(j, "types", what);
    auto mu = detail::get<std::vector<double>>(j, "mu", what);
    auto alpha = detail::get<std::vector<std::vector<double>>>(j, "alpha", what);
    m.beta = detail::get<double>(j, "beta", what);
    const auto u = m.types.size();
    if (mu.size() != u || alpha.size() != u) throw DataError(what + ": dimensions disagree with 'types'");
    m.mu = Eigen::Map<Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(u));
    m.alpha.resize(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u));
    for (std::size_t i = 0; i < u; ++i) {
        if (alpha[i].size() != u) throw DataError(what + ": alpha row " + std::to_string(i) + " has wrong length");
        for (std::size_t k = 0; k < u; ++k)
            m.alpha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = alpha[i][k];
    }
    try {
        m.validate();
    } catch (const ConfigError& e) {
        throw DataError(what + ": " + e.what());
    }
    return m;
}

// ---- graphs ----

inline json graph_to_json(const TypeGraph& g, const std::string& kind) {
    json edges = json::array();
    for (const auto& e : g.edges()) edges.push_back({{"src", e.src}, {"dst", e.dst}, {"w", e.weight}});
    return {{"nodes", g.nodes()}, {"edges", edges}, {"kind", kind}};
}

inline TypeGraph graph_from_json(const json& j, std::string* kind = nullptr) {
    const std::string what = "graph";
    TypeGraph g;
    for (const auto& n : detail::get<std::vector<std::string>>(j, "nodes", what)) g.add_node(n);
    for (const auto& e : detail::get<json>(j, "edges", what)) {
        auto src = detail::get<std::string>(e, "src", what), dst = detail::get<std::string>(e, "dst", what);
        auto w = detail::get<double>(e, "w", what);
        if (!g.has_node(src) || !g.has_node(dst)) throw DataError(what + ": edge " + src + "->" + dst + " names an unknown node");
        if (!(w >= 0.0)) throw DataError(what + ": negative weight on " + src + "->" + dst);
        g.set_edge(src, dst, w);
    }
    if (kind) *kind = j.value("kind", "");
    return g;
}

inline std::string to_dot(const TypeGraph& g, const std::string& name = "G") {
    auto quote = [](const std::string& s) {
        std::string out = "\"";
        for (char c : s) out += (c == '"' || c == '\\') ? std::string("\\") + c : std::string(1, c);
        return out + "\"";
    };
    std::ostringstream os;
    os << "digraph " << quote(name) << " {\n";
    for (const auto& n : g.nodes()) os << "  " << quote(n) << ";\n";
    os << std::setprecision(6);
    for (const auto& e : g.edges())
        os << "  " << quote(e.src) << " -> " << quote(e.dst) << " [label=\"" << e.weight << "\"];\n";
    os << "}\n";
    return os.str();
}

// ---- embeddings and contexts ----

inline json embeddings_to_json(const cpbe::EmbeddingTable& emb) {
    json j = json::object();
    for (const auto& [type, v] : emb.vectors) j[type] = v;
    return j;
}

inline cpbe::EmbeddingTable embeddings_from_json(const json& j) {
    if (!j.is_object()) throw DataError("embeddings: expected an object");
    cpbe::EmbeddingTable emb;
    for (const auto& [type, v] : j.items()) {
        auto vec = v.get<std::vector<double>>();
        if (emb.vectors.empty()) emb.dimension = vec.size();
        if (vec.size() != emb.dimension) throw DataError("embeddings: vector for " + type + " has wrong length");
        emb.vectors[type] = std::move(vec);
    }
    return emb;
}

inline void write_sentences(std::ostream& out, const std::vector<cpbe::Sentence>& sentences) {
    for (const auto& s : sentences) {
        for (std::size_t i = 0; i < s.size(); ++i) out << (i ? " " : "") << s[i];
        out << '\n';
    }
}

// ---- rankings ----

inline json ranking_to_json(const influence::RankedAlarms& r) {
    json topk = json::array();
    for (const auto& e : r.entries) topk.push_back({{"type", e.type}, {"score", e.score}, {"first_time", e.first_time}});
    return {{"window", r.window_id}, {"topk", topk}};
}

inline void write_rankings_jsonl(std::ostream& out, const std::vector<influence::RankedAlarms>& rankings) {
    for (const auto& r : rankings) out << ranking_to_json(r).dump() << '\n';
}

inline std::vector<influence::RankedAlarms> read_rankings_jsonl(std::istream& in) {
    std::vector<influence::RankedAlarms> out;
    for_each_jsonl(in, "rankings", [&](const json& j) {
        const std::string what = "ranking";
        influence::RankedAlarms r;
        r.window_id = detail::get<std::size_t>(j, "window", what);
        for (const auto& e : detail::get<json>(j, "topk", what))
            r.entries.push_back({detail::get<std::string>(e, "type", what), detail::get<double>(e, "score", what), 0,
                                 detail::get<double>(e, "first_time", what)});
        out.push_back(std::move(r));
    });
    return out;
}

// ---- synthetic configs and ground truth ----

namespace detail {

inline void reject_unknown(const json& j, const std::vector<std::string>& known, const std::string& what) {
    if (!j.is_object()) throw ConfigError(what + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw ConfigError(what + ": unknown key '" + k + "'");
}

template <typename T>
void read_opt(const json& j, const char* key, T& dst, const std::string& what) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        dst = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(what + ": bad '" + key + "': " + e.what());
    }
}

inline synth::Range range_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(what + ": a range is a two-element numeric array");
    synth::Range r{j[0].get<double>(), j[1].get<double>()};
    if (!r.valid()) throw ConfigError(what + ": invalid range");
    return r;
}

}  // namespace detail

inline json synth_config_to_json(const synth::SynthConfig& c) {
    return {{"n_types", c.n_types},
            {"avg_out_degree", c.avg_out_degree},
            {"alpha_range", {c.alpha_range.low, c.alpha_range.high}},
            {"mu_range", {c.mu_range.low, c.mu_range.high}},
            {"beta", c.beta},
            {"horizon_seconds", c.horizon_seconds},
            {"min_events", c.min_events},
            {"max_events", c.max_events},
            {"rng_seed", c.rng_seed},
            {"alpha_scale", c.alpha_scale == synth::AlphaScale::branching_ratio ? "branching_ratio" : "kernel_amplitude"}};
}

inline synth::SynthConfig synth_config_from_json(const json& j, synth::SynthConfig c = {}) {
    const std::string what = "synth config";
    detail::reject_unknown(j,
                           {"n_types", "avg_out_degree", "alpha_range", "mu_range", "beta", "horizon_seconds",
                            "min_events", "max_events", "rng_seed", "alpha_scale"},
                           what);
    detail::read_opt(j, "n_types", c.n_types, what);
    detail::read_opt(j, "avg_out_degree", c.avg_out_degree, what);
    if (j.contains("alpha_range")) c.alpha_range = detail::range_from_json(j["alpha_range"], what);
    if (j.contains("mu_range")) c.mu_range = detail::range_from_json(j["mu_range"], what);
    detail::read_opt(j, "beta", c.beta, what);
    detail::read_opt(j, "horizon_seconds", c.horizon_seconds, what);
    detail::read_opt(j, "min_events", c.min_events, what);
    detail::read_opt(j, "max_events", c.max_events, what);
    detail::read_opt(j, "rng_seed", c.rng_seed, what);
    if (j.contains("alpha_scale")) {
        auto s = j["alpha_scale"].get<std::string>();
        if (s == "branching_ratio")
            c.alpha_scale = synth::AlphaScale::branching_ratio;
        else if (s == "kernel_amplitude")
            c.alpha_scale = synth::AlphaScale::kernel_amplitude;
        else
            throw ConfigError(what + ": alpha_scale must be branching_ratio or kernel_amplitude");
    }
    c.validate();
    return c;
}

inline json ground_truth_to_json(const synth::GroundTruth& gt, const synth::SynthConfig& cfg) {
    return {{"dag", graph_to_json(gt.dag, "truth")},
            {"model", model_to_json(gt.model)},
            {"config", synth_config_to_json(cfg)},
            {"seed", cfg.rng_seed}};
}

struct GroundTruthBundle {
    TypeGraph dag;
    hawkes::HawkesModel model;
    synth::SynthConfig config;
    std::uint64_t seed{0};
};

inline GroundTruthBundle ground_truth_from_json(const json& j) {
    const std::string what = "ground truth";
    GroundTruthBundle b;
    b.dag = graph_from_json(detail::get<json>(j, "dag", what));
    b.model = model_from_json(detail::get<json>(j, "model", what));
    b.config = synth_config_from_json(detail::get<json>(j, "config", what));
    b.seed = detail::get<std::uint64_t>(j, "seed", what);
    return b;
}

}  // namespace alarmrca::io
