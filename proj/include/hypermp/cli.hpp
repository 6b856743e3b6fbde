#pragma once

#include <atomic>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "hypermp/config.hpp"
#include "hypermp/data.hpp"
#include "hypermp/expansions.hpp"
#include "hypermp/train.hpp"

namespace hypermp::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitMissingData = 3;

struct Options {
    std::string config_path;            // empty = defaults only
    std::string data_dir;               // overrides data.dir
    std::string out_dir;                // artifact directory
    std::optional<std::uint64_t> seed;  // overrides train.seed
    int jobs = 1;
    std::vector<double> ablate_rates = {0.9, 0.7, 0.5, 0.3, 0.0};
    int ablate_seeds = 5;
};

namespace detail {

inline std::string default_out_dir() {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    const auto s = std::chrono::duration_cast<std::chrono::seconds>(now).count();
    return "runs/" + std::to_string(s);
}

inline bool load_experiment(const Options& opt, ExperimentConfig& e, std::ostream& err) {
    try {
        FlatConfig flat;
        if (!opt.config_path.empty()) flat = parse_flat_config_file(opt.config_path);
        e = experiment_from_flat(flat);
    } catch (const ConfigError& ex) {
        err << "config error: " << ex.what() << '\n';
        return false;
    } catch (const ParseError& ex) {
        err << "config error: " << ex.what() << '\n';
        return false;
    } catch (const IoError& ex) {
        err << "config error: " << ex.what() << '\n';
        return false;
    }
    if (!opt.data_dir.empty()) e.data_dir = opt.data_dir;
    if (opt.seed) e.train.seed = *opt.seed;
    return true;
}

inline std::optional<CorpusRaw> load_corpus(const std::string& data_dir, std::ostream& err) {
    namespace fs = std::filesystem;
    const fs::path content = fs::path(data_dir) / "cora.content";
    const fs::path cites = fs::path(data_dir) / "cora.cites";
    if (!fs::exists(content) || !fs::exists(cites)) {
        err << "data error: expected " << content.string() << " and " << cites.string()
            << " (see README for the download step)\n";
        return std::nullopt;
    }
    return load_cora(content.string(), cites.string());
}

// One complete training run: split, init, fit. Fully determined by `e`.
struct RunOutcome {
    Metrics metrics;
    Model model;
};

inline RunOutcome run_experiment(const ExperimentConfig& e, const CorpusRaw& raw) {
    DatasetBundle bundle;
    {
        CorpusRaw copy = raw;  // tensors are shared handles; vectors copied
        Rng split_rng = Rng(e.train.seed).spawn(2);
        bundle = make_cocitation_bundle(std::move(copy), split_rng);
    }
    Rng init_rng = Rng(e.train.seed).spawn(0);
    Model model = Model::build(e.model, bundle, init_rng);
    Metrics metrics = fit(model, bundle, e.train);
    return {std::move(metrics), std::move(model)};
}

inline char* fmt(char* buf, std::size_t n, double v) {
    std::snprintf(buf, n, "%.9g", v);
    return buf;
}

}  // namespace detail

/// `train`: one run, writing checkpoint, metrics, timing, the effective
/// config, and a `test_acc=<float>` summary line.
inline int cmd_train(const Options& opt, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
    ExperimentConfig e;
    if (!detail::load_experiment(opt, e, err)) return kExitBadConfig;
    auto corpus = detail::load_corpus(e.data_dir, err);
    if (!corpus) return kExitMissingData;

    const std::string out_dir = opt.out_dir.empty() ? detail::default_out_dir() : opt.out_dir;
    std::filesystem::create_directories(out_dir);

    auto outcome = detail::run_experiment(e, *corpus);
    const double test_acc = outcome.metrics.final_test_acc;

    {
        std::ofstream f(out_dir + "/config.cfg");
        write_flat_config(f, experiment_to_flat(e));
    }
    {
        std::ofstream f(out_dir + "/metrics.csv");
        write_metrics_csv(f, outcome.metrics);
    }
    {
        std::ofstream f(out_dir + "/timing.csv");
        write_timing_csv(f, outcome.metrics);
    }
    save_checkpoint(out_dir + "/checkpoint.txt", outcome.model, experiment_to_flat(e));

    char buf[32];
    const std::string summary = std::string("test_acc=") + detail::fmt(buf, sizeof buf, test_acc);
    {
        std::ofstream f(out_dir + "/summary.txt");
        f << summary << '\n';
    }
    out << summary << '\n';
    return kExitOk;
}

/// `ablate-adjacency`: sweeps adjacency-dropout rates in two representation-
/// dropout settings (0.5 and none), averaging test accuracy over seeds.
/// Emits ablation.csv (one row per rate) and ablation_runs.csv (one row per
/// run). Runs are independent; `jobs` of them execute in parallel.
inline int cmd_ablate_adjacency(const Options& opt, std::ostream& out = std::cout,
                                std::ostream& err = std::cerr) {
    ExperimentConfig base;
    if (!detail::load_experiment(opt, base, err)) return kExitBadConfig;
    if (opt.ablate_rates.empty()) {
        err << "config error: ablate rates list is empty\n";
        return kExitBadConfig;
    }
    for (double r : opt.ablate_rates)
        if (r < 0.0 || r > 1.0) {
            err << "config error: ablate rate " << r << " outside [0,1]\n";
            return kExitBadConfig;
        }
    if (opt.ablate_seeds < 1) {
        err << "config error: ablate seeds must be >= 1\n";
        return kExitBadConfig;
    }
    auto corpus = detail::load_corpus(base.data_dir, err);
    if (!corpus) return kExitMissingData;

    const std::string out_dir = opt.out_dir.empty() ? detail::default_out_dir() : opt.out_dir;
    std::filesystem::create_directories(out_dir);

    const double activation_settings[2] = {0.5, 0.0};
    struct Run {
        int rate_idx, setting_idx, seed_idx;
        ExperimentConfig cfg;
        double test_acc = 0.0;
    };
    std::vector<Run> runs;
    for (std::size_t i = 0; i < opt.ablate_rates.size(); ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < opt.ablate_seeds; ++k) {
                Run r{static_cast<int>(i), j, k, base, 0.0};
                r.cfg.model.layer.adjacency_dropout_rate = opt.ablate_rates[i];
                r.cfg.model.layer.vertex_dropout_rate = activation_settings[j];
                r.cfg.model.layer.edge_dropout_rate = activation_settings[j];
                r.cfg.train.seed = base.train.seed + runs.size();  // derived seed per run
                runs.push_back(std::move(r));
            }

    std::atomic<std::size_t> next{0};
    const int jobs = std::max(1, opt.jobs);
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= runs.size()) return;
            runs[i].test_acc = detail::run_experiment(runs[i].cfg, *corpus).metrics.final_test_acc;
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    char buf[32];
    {
        std::ofstream f(out_dir + "/ablation_runs.csv");
        f << "adjacency_dropout_rate,activation_dropout_rate,seed,test_acc\n";
        for (const auto& r : runs) {
            f << detail::fmt(buf, sizeof buf, opt.ablate_rates[r.rate_idx]) << ','
              << detail::fmt(buf, sizeof buf, activation_settings[r.setting_idx]) << ','
              << r.cfg.train.seed << ',';
            f << detail::fmt(buf, sizeof buf, r.test_acc) << '\n';
        }
    }
    {
        std::ofstream f(out_dir + "/ablation.csv");
        f << "adjacency_dropout_rate,acc_activation_dropout_0.5,acc_activation_dropout_0.0\n";
        for (std::size_t i = 0; i < opt.ablate_rates.size(); ++i) {
            double mean[2] = {0.0, 0.0};
            int count[2] = {0, 0};
            for (const auto& r : runs)
                if (r.rate_idx == static_cast<int>(i)) {
                    mean[r.setting_idx] += r.test_acc;
                    ++count[r.setting_idx];
                }
            f << detail::fmt(buf, sizeof buf, opt.ablate_rates[i]);
            for (int j = 0; j < 2; ++j)
                f << ',' << detail::fmt(buf, sizeof buf, count[j] ? mean[j] / count[j] : 0.0);
            f << '\n';
        }
    }
    out << "wrote " << out_dir << "/ablation.csv (" << opt.ablate_rates.size() << " rates x 2 settings x "
        << opt.ablate_seeds << " seeds)\n";
    return kExitOk;
}

namespace detail {

// Inspect/expand accept either a hypergraph text file or a corpus directory
// (the co-citation hypergraph is built on the fly for the latter).
inline std::optional<Hypergraph> load_hypergraph_arg(const std::string& path, std::ostream& err,
                                                     int& exit_code) {
    namespace fs = std::filesystem;
    try {
        if (fs::is_directory(path)) {
            auto corpus = load_corpus(path, err);
            if (!corpus) {
                exit_code = kExitMissingData;
                return std::nullopt;
            }
            return build_cocitation_hypergraph(corpus->citation_pairs,
                                               static_cast<int>(corpus->labels.size()));
        }
        std::ifstream in(path);
        if (!in) {
            err << "data error: cannot open " << path << '\n';
            exit_code = kExitMissingData;
            return std::nullopt;
        }
        return read_hypergraph(in);
    } catch (const ParseError& ex) {
        err << "parse error: " << ex.what() << '\n';
        exit_code = kExitBadConfig;
        return std::nullopt;
    }
}

}  // namespace detail

/// `expand`: hypergraph file -> clique/star/line edge list.
inline int cmd_expand(const std::string& input_path, const std::string& kind,
                      const std::string& output_path, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
    int exit_code = kExitOk;
    auto h = detail::load_hypergraph_arg(input_path, err, exit_code);
    if (!h) return exit_code;
    Graph g;
    if (kind == "clique")
        g = clique_expansion(*h);
    else if (kind == "star")
        g = star_expansion(*h);
    else if (kind == "line")
        g = line_conversion(*h);
    else {
        err << "config error: unknown expansion kind '" << kind << "' (clique|star|line)\n";
        return kExitBadConfig;
    }
    if (output_path.empty() || output_path == "-") {
        write_edge_list(out, g);
    } else {
        std::ofstream f(output_path);
        if (!f) {
            err << "data error: cannot write " << output_path << '\n';
            return kExitMissingData;
        }
        write_edge_list(f, g);
    }
    return kExitOk;
}

/// `inspect`: structure report (sizes, degree/size histograms, isolated count).
inline int cmd_inspect(const std::string& input_path, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
    int exit_code = kExitOk;
    auto h = detail::load_hypergraph_arg(input_path, err, exit_code);
    if (!h) return exit_code;
    const auto dv = h->vertex_degrees();
    const auto de = h->hyperedge_degrees();
    std::map<int, int> degree_hist, size_hist;
    int isolated = 0;
    long long entries = 0;
    for (int d : dv) {
        ++degree_hist[d];
        if (d == 0) ++isolated;
    }
    for (int s : de) {
        ++size_hist[s];
        entries += s;
    }
    out << "num_vertices " << h->num_vertices() << '\n';
    out << "num_hyperedges " << h->num_hyperedges() << '\n';
    out << "incidence_entries " << entries << '\n';
    out << "isolated_vertices " << isolated << '\n';
    out << "vertex_degree_histogram\n";
    for (const auto& [d, c] : degree_hist) out << "  " << d << ' ' << c << '\n';
    out << "hyperedge_size_histogram\n";
    for (const auto& [s, c] : size_hist) out << "  " << s << ' ' << c << '\n';
    return kExitOk;
}

}  // namespace hypermp::cli
