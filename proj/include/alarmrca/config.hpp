#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "alarmrca/error.hpp"
#include "alarmrca/experiments.hpp"
#include "alarmrca/io.hpp"

namespace alarmrca::config {

using json = nlohmann::json;

enum class Scenario { synth_structure, rca };

/// Optional real-data inputs; when `alarms` is set the RCA scenario runs on it instead of
/// synthetic data and `labels` must be given too.
struct DatasetPaths {
    std::string alarms;
    std::string topology;
    std::string labels;
    std::vector<std::string> denylist;
};

struct ExperimentConfig {
    Scenario scenario{Scenario::synth_structure};
    std::vector<experiments::Learner> learners{experiments::Learner::pc_gs, experiments::Learner::pc_fz,
                                               experiments::Learner::hpadm4, experiments::Learner::hpci};
    std::vector<experiments::Weighter> weighters{experiments::Weighter::it, experiments::Weighter::pearson,
                                                 experiments::Weighter::cp, experiments::Weighter::st,
                                                 experiments::Weighter::cpbe};
    synth::SynthConfig synth{};
    std::vector<std::size_t> n_types{10, 20, 30};
    std::vector<synth::Range> alpha_ranges{{0.01, 0.05}, {0.05, 0.1}, {0.1, 0.5}, {0.5, 1.0}};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<std::size_t> ks{1, 2, 3, 4, 5};
    double window_seconds{default_window_seconds};
    double significance{ci::default_significance};
    std::size_t max_cond{ci::default_max_cond};
    std::size_t workers{1};
    std::optional<DatasetPaths> dataset;
};

namespace detail {

inline const std::vector<std::string> known_keys{"scenario",     "learners",   "weighters", "synth",
                                                 "n_types",      "alpha_ranges", "seeds",   "ks",
                                                 "window_seconds", "significance", "max_cond", "workers",
                                                 "dataset"};

template <typename T, typename F>
std::vector<T> parse_list(const json& j, const char* key, F&& parse_one) {
    const auto& a = j.at(key);
    if (!a.is_array() || a.empty()) throw ConfigError(std::string("'") + key + "' must be a nonempty array");
    std::vector<T> out;
    for (const auto& x : a) out.push_back(parse_one(x));
    return out;
}

}  // namespace detail

/// Validates `j` against the experiment schema; unknown keys and ill-typed values are errors.
inline ExperimentConfig from_json(const json& j) {
    const std::string what = "experiment config";
    io::detail::reject_unknown(j, detail::known_keys, what);
    ExperimentConfig c;
    try {
        if (j.contains("scenario")) {
            auto s = j["scenario"].get<std::string>();
            if (s == "synth-structure")
                c.scenario = Scenario::synth_structure;
            else if (s == "rca")
                c.scenario = Scenario::rca;
            else
                throw ConfigError(what + ": scenario must be synth-structure or rca");
        }
        if (j.contains("learners"))
            c.learners = detail::parse_list<experiments::Learner>(
                j, "learners", [](const json& x) { return experiments::parse_learner(x.get<std::string>()); });
        if (j.contains("weighters"))
            c.weighters = detail::parse_list<experiments::Weighter>(
                j, "weighters", [](const json& x) { return experiments::parse_weighter(x.get<std::string>()); });
        if (j.contains("synth")) c.synth = io::synth_config_from_json(j["synth"]);
        if (j.contains("n_types"))
            c.n_types = detail::parse_list<std::size_t>(j, "n_types", [](const json& x) {
                auto n = x.get<std::size_t>();
                if (n < 2) throw ConfigError("n_types entries must be at least 2");
                return n;
            });
        if (j.contains("alpha_ranges"))
            c.alpha_ranges = detail::parse_list<synth::Range>(
                j, "alpha_ranges", [&](const json& x) { return io::detail::range_from_json(x, what); });
        if (j.contains("seeds"))
            c.seeds = detail::parse_list<std::uint64_t>(j, "seeds", [](const json& x) { return x.get<std::uint64_t>(); });
        if (j.contains("ks"))
            c.ks = detail::parse_list<std::size_t>(j, "ks", [](const json& x) {
                auto k = x.get<std::size_t>();
                if (k < 1) throw ConfigError("K values must be at least 1");
                return k;
            });
        io::detail::read_opt(j, "window_seconds", c.window_seconds, what);
        io::detail::read_opt(j, "significance", c.significance, what);
        io::detail::read_opt(j, "max_cond", c.max_cond, what);
        io::detail::read_opt(j, "workers", c.workers, what);
        if (j.contains("dataset")) {
            const auto& d = j["dataset"];
            io::detail::reject_unknown(d, {"alarms", "topology", "labels", "denylist"}, what + " dataset");
            DatasetPaths p;
            io::detail::read_opt(d, "alarms", p.alarms, what);
            io::detail::read_opt(d, "topology", p.topology, what);
            io::detail::read_opt(d, "labels", p.labels, what);
            io::detail::read_opt(d, "denylist", p.denylist, what);
            if (p.alarms.empty() || p.labels.empty()) throw ConfigError(what + ": dataset needs 'alarms' and 'labels'");
            c.dataset = p;
        }
    } catch (const json::exception& e) {
        throw ConfigError(what + ": " + e.what());
    }
    if (!(c.window_seconds > 0.0)) throw ConfigError(what + ": window_seconds must be positive");
    if (!(c.significance >= 0.0 && c.significance <= 1.0)) throw ConfigError(what + ": significance must lie in [0,1]");
    if (c.workers < 1) throw ConfigError(what + ": workers must be at least 1");
    return c;
}

inline ExperimentConfig load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path);
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline experiments::Table1Config table1_config(const ExperimentConfig& c) {
    experiments::Table1Config t;
    t.n_types = c.n_types;
    t.alpha_ranges = c.alpha_ranges;
    t.learners = c.learners;
    t.seeds = c.seeds;
    t.base = c.synth;
    t.window_seconds = c.window_seconds;
    t.workers = c.workers;
    t.settings.hpci.beta = c.synth.beta;
    t.settings.hpadm4.beta = c.synth.beta;
    t.settings.hpci.significance = c.significance;
    t.settings.hpci.max_cond = c.max_cond;
    t.settings.pc.significance = c.significance;
    t.settings.pc.max_cond = c.max_cond;
    return t;
}

}  // namespace alarmrca::config
