#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alarmrca.hpp"

namespace fs = std::filesystem;
using namespace alarmrca;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out{"."};
    std::optional<std::size_t> workers;
};

config::ExperimentConfig load_config(const Globals& g) {
    auto c = g.config.empty() ? config::ExperimentConfig{} : config::load(g.config);
    if (g.seed) {
        c.seeds = {*g.seed};
        c.synth.rng_seed = *g.seed;
    }
    if (g.workers) c.workers = *g.workers;
    return c;
}

std::string out_path(const Globals& g, const std::string& name) {
    fs::create_directories(g.out);
    return (fs::path(g.out) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    auto out = io::open_out(path);
    out << text;
}

void write_json(const std::string& path, const io::json& j) { write_text(path, j.dump(2) + "\n"); }

Corpus load_corpus(const std::string& alarms, const std::string& topology, double window,
                   const std::vector<std::string>& deny) {
    auto in = io::open_in(alarms);
    FilterDiagnostics diag;
    auto records = filter_alarms(io::read_alarm_csv(in), {deny.begin(), deny.end()}, diag);
    if (diag.missing_fields || diag.denylisted)
        std::cerr << "filtered " << diag.missing_fields << " incomplete and " << diag.denylisted
                  << " denylisted rows\n";
    NetworkTopology topo;
    if (!topology.empty()) {
        auto tin = io::open_in(topology);
        topo = io::read_topology_csv(tin);
    }
    if (records.empty()) throw DataError(alarms + ": no usable alarm rows");
    return preprocess(std::move(records), topo, window);
}

std::vector<AlarmTransaction> load_transactions(const std::string& path) {
    auto in = io::open_in(path);
    return io::read_transactions_jsonl(in);
}

TypeGraph load_graph(const std::string& path) {
    auto j = io::read_json_file(path);
    // Ground-truth bundles carry the graph under "dag".
    return j.contains("dag") ? io::graph_from_json(j["dag"]) : io::graph_from_json(j);
}

std::map<std::size_t, AlarmType> load_labels(const std::string& path) {
    auto in = io::open_in(path);
    return io::read_labels_csv(in);
}

std::vector<std::size_t> parse_ks(const std::string& s) {
    std::vector<std::size_t> ks;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        auto v = io::detail::parse_number(io::detail::trim(tok));
        if (!v || *v < 1 || std::floor(*v) != *v) throw ConfigError("bad K value '" + tok + "'");
        ks.push_back(static_cast<std::size_t>(*v));
    }
    if (ks.empty()) throw ConfigError("no K values given");
    return ks;
}

std::string rca_csv(const experiments::RcaReport& rep, const std::vector<std::size_t>& ks) {
    std::ostringstream os;
    os << "weighter,k,accuracy\n" << std::setprecision(6);
    for (const auto& [w, m] : rep.accuracy)
        for (auto k : ks) os << experiments::to_string(w) << ',' << k << ',' << m.per_k.at(k) << '\n';
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Alarm root-cause analysis: causal structure learning, influence weighting and ranking"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "RNG seed (overrides the config)");
    app.add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output directory")->capture_default_str();
    app.add_option("--workers", g.workers, "parallel workers for grid runs")->check(CLI::PositiveNumber);

    double window = default_window_seconds;
    std::string alarms, topology, graph_path, txn_path, model_path, truth_path, rankings_path, labels_path;
    std::vector<std::string> deny;
    std::string learner = "hpci", weighter = "cpbe", ks_text = "1,2,3,4,5";
    std::size_t k = 5;

    auto* pre = app.add_subcommand("preprocess", "alarms + topology -> transactions JSONL");
    pre->add_option("--alarms", alarms, "alarm CSV")->required()->check(CLI::ExistingFile);
    pre->add_option("--topology", topology, "topology CSV")->check(CLI::ExistingFile);
    pre->add_option("--window", window, "window length in seconds")->capture_default_str();
    pre->add_option("--deny", deny, "alarm types to drop");

    auto* syn = app.add_subcommand("synth", "simulate events from a random ground truth");

    auto* learn = app.add_subcommand("learn", "learn a causal graph from alarms");
    learn->add_option("--alarms", alarms, "alarm CSV")->required()->check(CLI::ExistingFile);
    learn->add_option("--topology", topology, "topology CSV")->check(CLI::ExistingFile);
    learn->add_option("--method", learner, "hpci | pc-gs | pc-fz | hpadm4")->capture_default_str();
    learn->add_option("--window", window, "window length in seconds")->capture_default_str();
    learn->add_option("--deny", deny, "alarm types to drop");

    auto* weigh = app.add_subcommand("weigh", "causal graph + transactions -> influence graph");
    weigh->add_option("--graph", graph_path, "causal graph JSON")->required()->check(CLI::ExistingFile);
    weigh->add_option("--transactions", txn_path, "transactions JSONL")->required()->check(CLI::ExistingFile);
    weigh->add_option("--method", weighter, "cpbe | it | pearson | cp | st")->capture_default_str();
    weigh->add_option("--model", model_path, "Hawkes model JSON (required for it)")->check(CLI::ExistingFile);

    auto* rank = app.add_subcommand("rank", "influence graph + transactions -> rankings JSONL");
    rank->add_option("--graph", graph_path, "influence graph JSON")->required()->check(CLI::ExistingFile);
    rank->add_option("--transactions", txn_path, "transactions JSONL")->required()->check(CLI::ExistingFile);
    rank->add_option("--k", k, "entries kept per window")->capture_default_str()->check(CLI::PositiveNumber);

    auto* evs = app.add_subcommand("eval-structure", "precision, recall and F1 of a learned graph");
    evs->add_option("--learned", graph_path, "learned graph JSON")->required()->check(CLI::ExistingFile);
    evs->add_option("--truth", truth_path, "truth graph or ground-truth JSON")->required()->check(CLI::ExistingFile);

    auto* evr = app.add_subcommand("eval-rca", "top-K accuracy of rankings, or a full RCA experiment");
    evr->add_option("--rankings", rankings_path, "rankings JSONL")->check(CLI::ExistingFile);
    evr->add_option("--labels", labels_path, "label CSV (window,alarm_type)")->check(CLI::ExistingFile);
    evr->add_option("--ks", ks_text, "comma-separated K values")->capture_default_str();

    auto* t1 = app.add_subcommand("table1", "structure-learning F1 grid over types, alpha ranges and learners");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (pre->parsed()) {
            auto corpus = load_corpus(alarms, topology, window, deny);
            auto path = out_path(g, "transactions.jsonl");
            auto out = io::open_out(path);
            io::write_transactions_jsonl(out, corpus.transactions);
            std::cout << corpus.transactions.size() << " transactions, " << corpus.event_count() << " events -> "
                      << path << '\n';
        } else if (syn->parsed()) {
            auto c = load_config(g);
            auto gt = synth::make_ground_truth(c.synth);
            if (gt.supercritical_warning)
                std::cerr << "warning: max branching ratio " << gt.max_branching_ratio << " reaches 1\n";
            auto sim = synth::simulate_ogata(gt, c.synth.horizon_seconds, c.synth.min_events, c.synth.max_events,
                                             c.synth.rng_seed);
            auto records = synth::to_records(sim.events);
            {
                auto out = io::open_out(out_path(g, "events.csv"));
                io::write_alarm_csv(out, records);
            }
            write_json(out_path(g, "ground_truth.json"), io::ground_truth_to_json(gt, c.synth));
            NetworkTopology topo;
            topo.add_device("sim-0");
            auto corpus = preprocess(records, topo, c.window_seconds);
            {
                auto out = io::open_out(out_path(g, "transactions.jsonl"));
                io::write_transactions_jsonl(out, corpus.transactions);
            }
            {
                auto out = io::open_out(out_path(g, "labels.csv"));
                io::write_labels_csv(out, synth::planted_roots(corpus.transactions, gt.dag));
            }
            std::cout << sim.events.events.size() << " events over " << corpus.window_count << " windows"
                      << (sim.truncated ? " (truncated at the event cap)" : "") << " -> " << g.out << '\n';
        } else if (learn->parsed()) {
            auto c = load_config(g);
            auto l = experiments::parse_learner(learner);
            auto corpus = load_corpus(alarms, topology, window, deny);
            experiments::LearnerSettings s = config::table1_config(c).settings;
            hawkes::FitReport report;
            auto model = hpci::fit_intensities(corpus, s.hpci, &report);
            if (!report.converged) std::cerr << "warning: Hawkes fit stopped at the iteration cap\n";
            auto graph = experiments::learn(l, corpus, model, s);
            write_json(out_path(g, "graph.json"), io::graph_to_json(graph, "causal"));
            write_json(out_path(g, "model.json"), io::model_to_json(model));
            write_text(out_path(g, "graph.dot"), io::to_dot(graph, "causal"));
            std::cout << graph.node_count() << " nodes, " << graph.edge_count() << " edges -> " << g.out << '\n';
        } else if (weigh->parsed()) {
            auto w = experiments::parse_weighter(weighter);
            auto causal = load_graph(graph_path);
            auto txns = load_transactions(txn_path);
            TypeGraph inf;
            if (w == experiments::Weighter::cpbe) {
                cpbe::CpbeOptions opts;
                if (g.seed) opts.contexts.rng_seed = opts.skipgram.rng_seed = *g.seed;
                auto res = cpbe::cpbe_weights(txns, causal, opts);
                if (res.report.clamped) std::cerr << res.report.clamped << " negative cosines clamped to 0\n";
                write_json(out_path(g, "embeddings.json"), io::embeddings_to_json(res.embeddings));
                inf = std::move(res.influence);
            } else if (w == experiments::Weighter::it) {
                if (model_path.empty()) throw ConfigError("--model is required for the it weighter");
                auto model = io::model_from_json(io::read_json_file(model_path));
                inf = cpbe::baseline_weights(causal, txns, cpbe::BaselineWeighter::it, &model);
            } else {
                auto bw = w == experiments::Weighter::pearson ? cpbe::BaselineWeighter::pearson
                          : w == experiments::Weighter::cp    ? cpbe::BaselineWeighter::cp
                                                              : cpbe::BaselineWeighter::st;
                inf = cpbe::baseline_weights(causal, txns, bw);
            }
            write_json(out_path(g, "influence.json"), io::graph_to_json(inf, "influence"));
            std::cout << inf.edge_count() << " weighted edges -> " << g.out << '\n';
        } else if (rank->parsed()) {
            auto inf = load_graph(graph_path);
            auto txns = load_transactions(txn_path);
            auto rankings = experiments::rank_all(txns, inf, k, {});
            std::size_t unconverged = 0;
            for (const auto& r : rankings) unconverged += r.unconverged;
            if (unconverged) std::cerr << unconverged << " windows hit the IRIE iteration cap\n";
            auto out = io::open_out(out_path(g, "rankings.jsonl"));
            io::write_rankings_jsonl(out, rankings);
            std::cout << rankings.size() << " rankings -> " << g.out << '\n';
        } else if (evs->parsed()) {
            auto m = metrics::structure_metrics(load_graph(graph_path), load_graph(truth_path));
            io::json j{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                       {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn},
                       {"precision_undefined", m.precision_undefined},
                       {"recall_undefined", m.recall_undefined}};
            write_json(out_path(g, "structure.json"), j);
            std::cout << j.dump(2) << '\n';
        } else if (evr->parsed()) {
            auto ks = parse_ks(ks_text);
            if (!rankings_path.empty()) {
                if (labels_path.empty()) throw ConfigError("--labels is required with --rankings");
                auto in = io::open_in(rankings_path);
                auto m = experiments::rca_accuracy(io::read_rankings_jsonl(in), load_labels(labels_path), ks);
                std::ostringstream os;
                os << "k,accuracy\n";
                for (const auto& [kk, acc] : m.per_k) os << kk << ',' << acc << '\n';
                write_text(out_path(g, "rca.csv"), os.str());
                std::cout << os.str() << "labeled transactions: " << m.n_transactions << '\n';
            } else {
                auto c = load_config(g);
                experiments::RcaConfig rc;
                rc.synth = c.synth;
                rc.window_seconds = c.window_seconds;
                rc.weighters = c.weighters;
                rc.ks = ks;
                rc.settings = config::table1_config(c).settings;
                rc.cpbe.contexts.rng_seed = rc.cpbe.skipgram.rng_seed = c.synth.rng_seed;
                experiments::RcaReport rep;
                if (c.dataset) {
                    auto corpus = load_corpus(c.dataset->alarms, c.dataset->topology, c.window_seconds,
                                              c.dataset->denylist);
                    rep = experiments::run_rca_on_corpus(corpus, load_labels(c.dataset->labels), rc);
                } else {
                    rep = experiments::run_rca_experiment(rc);
                }
                auto text = experiments::rca_text(rep, ks);
                write_text(out_path(g, "rca.txt"), text);
                write_text(out_path(g, "rca.csv"), rca_csv(rep, ks));
                std::cout << text;
            }
        } else if (t1->parsed()) {
            auto cells = experiments::run_table1(config::table1_config(load_config(g)));
            write_text(out_path(g, "table1.csv"), experiments::table1_csv(cells));
            auto text = experiments::table1_text(cells);
            write_text(out_path(g, "table1.txt"), text);
            std::cout << text;
            for (const auto& c : cells)
                for (const auto& f : c.failures)
                    std::cerr << to_string(c.key.learner) << " N=" << c.key.n_types << " "
                              << experiments::format_range(c.key.alpha_range) << ": " << f << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
