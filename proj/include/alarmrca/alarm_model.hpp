#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "alarmrca/error.hpp"
#include "alarmrca/graph.hpp"

namespace alarmrca {

using DeviceId = std::string;

inline constexpr double default_window_seconds = 300.0;

struct AlarmRecord {
    DeviceId device;
    AlarmType alarm_type;
    double occurred_at{0.0};

    friend bool operator==(const AlarmRecord&, const AlarmRecord&) = default;
};

/// A row as read from disk; any field may be missing or unparseable.
struct RawAlarmRow {
    std::optional<double> timestamp;
    std::optional<DeviceId> device;
    std::optional<AlarmType> alarm_type;
};

class NetworkTopology {
public:
    void add_device(const DeviceId& d) { devices_.insert(d); }

    void add_link(const DeviceId& a, const DeviceId& b) {
        if (a == b) throw DataError("self-link on device " + a);
        devices_.insert(a);
        devices_.insert(b);
        links_.insert(std::minmax(a, b));
    }

    [[nodiscard]] bool has_device(const DeviceId& d) const { return devices_.count(d) > 0; }
    [[nodiscard]] const std::set<DeviceId>& devices() const { return devices_; }
    [[nodiscard]] const std::set<std::pair<DeviceId, DeviceId>>& links() const { return links_; }

private:
    std::set<DeviceId> devices_;
    std::set<std::pair<DeviceId, DeviceId>> links_;
};

struct TimedEvent {
    AlarmType type;
    double time{0.0};

    friend bool operator==(const TimedEvent&, const TimedEvent&) = default;
};

/// Events of one window [start, end), sorted by time.
struct AlarmSequence {
    std::size_t window_id{0};
    std::size_t component{0};
    double start{0.0};
    double end{0.0};
    std::vector<TimedEvent> events;

    [[nodiscard]] double horizon() const { return end - start; }
};

struct TransactionEntry {
    double first_time{0.0};
    std::size_t count{0};

    friend bool operator==(const TransactionEntry&, const TransactionEntry&) = default;
};

struct AlarmTransaction {
    std::size_t window_id{0};
    std::size_t component{0};
    std::map<AlarmType, TransactionEntry> entries;

    [[nodiscard]] std::size_t total_count() const {
        std::size_t n = 0;
        for (const auto& [t, e] : entries) n += e.count;
        return n;
    }

    [[nodiscard]] std::vector<AlarmType> types() const {
        std::vector<AlarmType> out;
        for (const auto& [t, e] : entries) out.push_back(t);
        return out;
    }
};

struct OccurrenceSeries {
    AlarmType alarm_type;
    std::vector<std::size_t> counts;
};

struct FilterDiagnostics {
    std::size_t missing_fields{0};
    std::size_t denylisted{0};
};

/// Keeps rows with all key fields present and a type outside `denylist`, preserving order.
inline std::vector<AlarmRecord> filter_alarms(const std::vector<RawAlarmRow>& rows,
                                              const std::set<AlarmType>& denylist,
                                              FilterDiagnostics& diag) {
    std::vector<AlarmRecord> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (!r.timestamp || !r.device || !r.alarm_type || r.device->empty() || r.alarm_type->empty() ||
            !std::isfinite(*r.timestamp)) {
            ++diag.missing_fields;
            continue;
        }
        if (denylist.count(*r.alarm_type)) {
            ++diag.denylisted;
            continue;
        }
        out.push_back({*r.device, *r.alarm_type, *r.timestamp});
    }
    return out;
}

inline std::vector<AlarmRecord> filter_alarms(const std::vector<RawAlarmRow>& rows,
                                              const std::set<AlarmType>& denylist) {
    FilterDiagnostics diag;
    return filter_alarms(rows, denylist, diag);
}

/// Types whose inter-arrival coefficient of variation falls below `cv_threshold`.
/// Never applied implicitly; callers feed the result into the denylist if they want it.
inline std::set<AlarmType> flag_periodic_types(const std::vector<AlarmRecord>& records, double cv_threshold = 0.1,
                                               std::size_t min_occurrences = 5) {
    std::map<AlarmType, std::vector<double>> times;
    for (const auto& r : records) times[r.alarm_type].push_back(r.occurred_at);
    std::set<AlarmType> out;
    for (auto& [type, ts] : times) {
        if (ts.size() < min_occurrences) continue;
        std::sort(ts.begin(), ts.end());
        std::vector<double> gaps(ts.size() - 1);
        for (std::size_t i = 1; i < ts.size(); ++i) gaps[i - 1] = ts[i] - ts[i - 1];
        double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
        if (mean <= 0.0) continue;
        double var = 0.0;
        for (double g : gaps) var += (g - mean) * (g - mean);
        var /= gaps.size();
        if (std::sqrt(var) / mean < cv_threshold) out.insert(type);
    }
    return out;
}

/// Groups records by connected component of the topology.
///
/// Topology components are numbered 0..C-1 in order of their smallest device id. Devices
/// absent from the topology each get a singleton component numbered C, C+1, ... in device-id
/// order. Only components holding at least one record appear in the result.
inline std::map<std::size_t, std::vector<AlarmRecord>> group_by_subgraph(const std::vector<AlarmRecord>& records,
                                                                         const NetworkTopology& topology) {
    std::vector<DeviceId> devices(topology.devices().begin(), topology.devices().end());
    std::map<DeviceId, std::size_t> idx;
    for (std::size_t i = 0; i < devices.size(); ++i) idx[devices[i]] = i;

    std::vector<std::size_t> parent(devices.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [a, b] : topology.links()) {
        auto ra = find(idx[a]);
        auto rb = find(idx[b]);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
    // Roots are the smallest member of each component, so root order is smallest-device order.
    std::map<std::size_t, std::size_t> root_to_comp;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        auto r = find(i);
        if (!root_to_comp.count(r)) root_to_comp.emplace(r, root_to_comp.size());
    }
    std::size_t next_comp = root_to_comp.size();

    std::set<DeviceId> unknown;
    for (const auto& r : records)
        if (!idx.count(r.device)) unknown.insert(r.device);
    std::map<DeviceId, std::size_t> unknown_comp;
    for (const auto& d : unknown) unknown_comp[d] = next_comp++;

    std::map<std::size_t, std::vector<AlarmRecord>> out;
    for (const auto& r : records) {
        auto it = idx.find(r.device);
        std::size_t c = it != idx.end() ? root_to_comp.at(find(it->second)) : unknown_comp.at(r.device);
        out[c].push_back(r);
    }
    return out;
}

struct WindowedStream {
    std::vector<AlarmSequence> sequences;
    /// Number of tumbling windows spanned, empty ones included.
    std::size_t window_count{0};
};

/// Tumbling windows of `window_seconds` anchored at the earliest record. Window k covers
/// [t0 + k*w, t0 + (k+1)*w) and receives id `first_window_id + k`.
inline WindowedStream window_partition(std::vector<AlarmRecord> records, double window_seconds,
                                       std::size_t first_window_id = 0, std::size_t component = 0) {
    if (!(window_seconds > 0.0) || !std::isfinite(window_seconds))
        throw ConfigError("window size must be positive, got " + std::to_string(window_seconds));
    WindowedStream out;
    if (records.empty()) return out;
    std::stable_sort(records.begin(), records.end(),
                     [](const AlarmRecord& a, const AlarmRecord& b) { return a.occurred_at < b.occurred_at; });
    const double t0 = records.front().occurred_at;
    std::size_t current = static_cast<std::size_t>(-1);
    for (const auto& r : records) {
        auto k = static_cast<std::size_t>(std::floor((r.occurred_at - t0) / window_seconds));
        if (k != current) {
            current = k;
            AlarmSequence seq;
            seq.window_id = first_window_id + k;
            seq.component = component;
            seq.start = t0 + static_cast<double>(k) * window_seconds;
            seq.end = seq.start + window_seconds;
            out.sequences.push_back(std::move(seq));
        }
        out.sequences.back().events.push_back({r.alarm_type, r.occurred_at});
    }
    out.window_count = current + 1;
    return out;
}

inline AlarmTransaction to_transaction(const AlarmSequence& seq) {
    if (seq.events.empty()) throw DataError("cannot build a transaction from an empty sequence");
    AlarmTransaction txn;
    txn.window_id = seq.window_id;
    txn.component = seq.component;
    for (const auto& ev : seq.events) {
        auto [it, inserted] = txn.entries.try_emplace(ev.type, TransactionEntry{ev.time, 0});
        it->second.first_time = std::min(it->second.first_time, ev.time);
        ++it->second.count;
    }
    return txn;
}

/// One count series per type. Rows follow transaction order, or window ids when
/// `window_count` is given (windows without a transaction become zero rows).
inline std::vector<OccurrenceSeries> occurrence_series(const std::vector<AlarmTransaction>& transactions,
                                                       const std::vector<AlarmType>& types,
                                                       std::optional<std::size_t> window_count = std::nullopt) {
    const std::size_t rows = window_count.value_or(transactions.size());
    std::map<AlarmType, std::size_t> pos;
    std::vector<OccurrenceSeries> out;
    for (const auto& t : types) {
        pos.emplace(t, out.size());
        out.push_back({t, std::vector<std::size_t>(rows, 0)});
    }
    for (std::size_t i = 0; i < transactions.size(); ++i) {
        const auto& txn = transactions[i];
        std::size_t row = window_count ? txn.window_id : i;
        if (row >= rows) throw DataError("transaction window id outside the series range");
        for (const auto& [type, e] : txn.entries) {
            auto it = pos.find(type);
            if (it != pos.end()) out[it->second].counts[row] += e.count;
        }
    }
    return out;
}

/// Output of the full preprocessing pipeline: filter -> group by subgraph -> window -> transactions.
struct Corpus {
    std::vector<AlarmSequence> sequences;
    std::vector<AlarmTransaction> transactions;
    std::size_t window_count{0};
    std::vector<AlarmType> types;
    double time_origin{0.0};

    [[nodiscard]] std::size_t event_count() const {
        std::size_t n = 0;
        for (const auto& s : sequences) n += s.events.size();
        return n;
    }
};

/// Runs grouping, windowing, and transaction building. Timestamps are shifted so the corpus
/// starts at 0. Components are windowed independently and their window ids are laid out
/// consecutively in component order.
inline Corpus preprocess(std::vector<AlarmRecord> records, const NetworkTopology& topology,
                         double window_seconds = default_window_seconds) {
    if (!(window_seconds > 0.0)) throw ConfigError("window size must be positive");
    Corpus corpus;
    if (records.empty()) return corpus;
    corpus.time_origin = std::min_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
                             return a.occurred_at < b.occurred_at;
                         })->occurred_at;
    std::set<AlarmType> types;
    for (auto& r : records) {
        r.occurred_at -= corpus.time_origin;
        types.insert(r.alarm_type);
    }
    corpus.types.assign(types.begin(), types.end());

    for (auto& [component, recs] : group_by_subgraph(records, topology)) {
        auto win = window_partition(std::move(recs), window_seconds, corpus.window_count, component);
        corpus.window_count += win.window_count;
        for (auto& seq : win.sequences) {
            corpus.transactions.push_back(to_transaction(seq));
            corpus.sequences.push_back(std::move(seq));
        }
    }
    return corpus;
}

}  // namespace alarmrca
