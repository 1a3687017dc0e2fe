#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "alarmrca/graph.hpp"

namespace alarmrca::metrics {

struct StructureMetrics {
    double precision{0.0};
    double recall{0.0};
    double f1{0.0};
    std::size_t tp{0};
    std::size_t fp{0};
    std::size_t fn{0};
    /// Set when a ratio had a zero denominator and was reported as 0.
    bool precision_undefined{false};
    bool recall_undefined{false};
};

/// Directed-edge precision, recall and F1 of `learned` against `truth`.
inline StructureMetrics structure_metrics(const TypeGraph& learned, const TypeGraph& truth) {
    std::set<std::pair<AlarmType, AlarmType>> p, s;
    for (const auto& e : learned.edges()) p.emplace(e.src, e.dst);
    for (const auto& e : truth.edges()) s.emplace(e.src, e.dst);
    StructureMetrics m;
    for (const auto& e : p) (s.count(e) ? m.tp : m.fp)++;
    m.fn = s.size() - m.tp;
    m.precision_undefined = p.empty();
    m.recall_undefined = s.empty();
    m.precision = p.empty() ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(p.size());
    m.recall = s.empty() ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(s.size());
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

}  // namespace alarmrca::metrics
