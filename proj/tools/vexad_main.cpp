// vexad: data generation, batch experiments and the annotation service.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

// Eigen must be seen before httplib.h: <resolv.h> defines a `_res` macro.
#include "vexad/dataset.hpp"
#include "vexad/experiments.hpp"
#include "vexad/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

using namespace vexad;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// "1,2,5" or "1-10" or a mix: "1-3,7".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part.empty()) continue;
        try {
            const auto dash = part.find('-');
            if (dash != std::string::npos && dash > 0) {
                const auto lo = std::stoull(part.substr(0, dash)), hi = std::stoull(part.substr(dash + 1));
                if (hi < lo) throw UsageError("bad seed range '" + part + "'");
                for (auto s = lo; s <= hi; ++s) out.push_back(s);
            } else {
                out.push_back(std::stoull(part));
            }
        } catch (const std::logic_error&) {
            throw UsageError("bad seed '" + part + "'");
        }
    }
    if (out.empty()) throw UsageError("--seeds is empty");
    return out;
}

struct ExperimentFlags {
    std::string dataset;
    std::string strategy = "vexad";
    std::string strategies = "vexad,random,maxmin,uncertainty";
    int display_size = 16;
    int budget = 10;
    double alpha = 1.0, beta = 1.0, gamma = 1.0;
    int rep = 1;
    double epsilon = 1e-3;
    int maxiter = 100;
    std::string seeds = "1";
    std::uint64_t split_seed = 0;
    double l2 = 1e-2;
    int threads = 0;
    std::string out;

    void add(CLI::App* app, bool with_strategy, bool with_strategies) {
        app->add_option("--dataset", dataset, "Dataset directory or manifest.json")->required();
        if (with_strategy) app->add_option("--strategy", strategy, "vexad | random | maxmin | uncertainty");
        if (with_strategies) app->add_option("--strategies", strategies, "Comma-separated strategy list");
        app->add_option("--display-size", display_size, "Samples per display (K)");
        app->add_option("--budget", budget, "Number of displays (T)");
        app->add_option("--alpha", alpha, "Diversity weight");
        app->add_option("--beta", beta, "Ambiguity weight");
        app->add_option("--gamma", gamma, "Membership entropy weight (> 0)");
        app->add_option("--rep", rep, "Representativity term on (1) or off (0)")->check(CLI::IsMember({0, 1}));
        app->add_option("--epsilon", epsilon, "Fixed-point stopping threshold");
        app->add_option("--maxiter", maxiter, "Fixed-point iteration cap");
        app->add_option("--seeds", seeds, "Seeds, e.g. 1,2,3 or 1-10");
        app->add_option("--split-seed", split_seed, "Seed of the train/eval split");
        app->add_option("--l2", l2, "Scorer L2 strength");
        app->add_option("--threads", threads, "Worker threads (0 = all cores)");
        app->add_option("--out", out, "Output directory")->required();
    }

    SessionConfig config(const Dataset& ds) const {
        SessionConfig c;
        const auto kind = parse_sampler_kind(strategy);
        if (!kind) throw UsageError("unknown strategy '" + strategy + "' (valid: " + sampler_kind_list() + ")");
        c.strategy = *kind;
        c.display_size = display_size;
        c.budget = budget;
        c.weights = {rep == 1, alpha, beta, gamma};
        c.epsilon = epsilon;
        c.max_iter = maxiter;
        c.split_seed = split_seed;
        c.train.l2_strength = l2;
        c.dataset = ds.name;
        try {
            c.weights.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        if (display_size < 1 || budget < 1) throw UsageError("--display-size and --budget must be >= 1");
        if (!(epsilon > 0.0) || maxiter < 1) throw UsageError("--epsilon must be > 0 and --maxiter >= 1");
        const auto pool = split_half(ds, split_seed).train_ids.size();
        if (static_cast<std::size_t>(display_size) * static_cast<std::size_t>(budget) > pool)
            throw UsageError("display-size * budget = " + std::to_string(display_size * budget) +
                             " exceeds the training pool of " + std::to_string(pool));
        return c;
    }

    std::vector<SamplerKind> strategy_list() const {
        std::vector<SamplerKind> out;
        std::stringstream ss(strategies);
        std::string part;
        while (std::getline(ss, part, ',')) {
            const auto k = parse_sampler_kind(part);
            if (!k) throw UsageError("unknown strategy '" + part + "' (valid: " + sampler_kind_list() + ")");
            out.push_back(*k);
        }
        if (out.empty()) throw UsageError("--strategies is empty");
        return out;
    }
};

void print_summary(const std::vector<RunTable>& tables) {
    for (const auto& t : tables) {
        std::printf("%-14s auc=%s  final_eer=%s  eer:", t.label.c_str(), format_eer(t.auc).c_str(),
                    format_eer(t.final_eer_mean).c_str());
        for (const auto& r : t.records) std::printf(" %s", format_eer(r.eer).c_str());
        std::printf("\n");
    }
    if (!tables.empty()) {
        std::printf("%-14s", "samp%");
        for (const auto& r : tables.front().records) std::printf(" %s", format_rate(r.samp_pct).c_str());
        std::printf("\n");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virtual-exemplar active learning for change detection"};
    app.require_subcommand(1);

    int n = 2200, dim = 16;
    double pos_frac = 39.0 / 2200.0;
    std::uint64_t data_seed = 7;
    std::string data_out;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic change-detection dataset");
    gen->add_option("--n", n, "Number of samples");
    gen->add_option("--dim", dim, "Feature dimension (16 also writes pixel pairs)");
    gen->add_option("--pos-frac", pos_frac, "Fraction of change samples");
    gen->add_option("--seed", data_seed, "Generator seed");
    gen->add_option("--out", data_out, "Output directory")->required();

    ExperimentFlags run_flags, ablate_flags, compare_flags;
    auto* run = app.add_subcommand("run", "Simulated session(s) with one strategy");
    run_flags.add(run, true, false);
    auto* ablate = app.add_subcommand("ablate", "Seven-cell ablation of the display objective");
    ablate_flags.add(ablate, false, false);
    auto* compare = app.add_subcommand("compare", "Strategy comparison plus fully supervised bound");
    compare_flags.add(compare, false, true);

    std::string serve_dataset, host = "127.0.0.1", data_dir, ui_dir;
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "HTTP/JSON service for interactive sessions");
    serve->add_option("--dataset", serve_dataset, "Dataset directory or manifest.json")->required();
    serve->add_option("--port", port, "Port");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--data-dir", data_dir, "Session directory (default: $VEXAD_DATA_DIR or ./vexad-sessions)");
    serve->add_option("--ui-dir", ui_dir, "Static UI assets to serve at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) {
            const Dataset ds = generate_synthetic(n, dim, pos_frac, data_seed);
            save(ds, data_out);
            std::printf("n=%zu pos=%d dim=%d\n", ds.size(), ds.positives(), ds.dim);
            return 0;
        }

        auto experiment = [](const ExperimentFlags& f, auto&& body) {
            auto ds = std::make_shared<const Dataset>(load(f.dataset));
            const SessionConfig cfg = f.config(*ds);
            const auto seeds = parse_seeds(f.seeds);
            std::filesystem::create_directories(f.out);
            body(ds, cfg, seeds);
            return 0;
        };
        if (*run)
            return experiment(run_flags, [&](auto ds, const SessionConfig& cfg, const auto& seeds) {
                const auto tables = run_tables(ds, {{run_flags.strategy, cfg}}, seeds, run_flags.threads);
                write_results_csv(std::filesystem::path(run_flags.out) / "results.csv", tables);
                write_summary_csv(std::filesystem::path(run_flags.out) / "summary.csv", tables);
                print_summary(tables);
            });
        if (*ablate)
            return experiment(ablate_flags, [&](auto ds, const SessionConfig& cfg, const auto& seeds) {
                const auto tables = run_ablation(ds, cfg, seeds, ablate_flags.threads);
                write_results_csv(std::filesystem::path(ablate_flags.out) / "results.csv", tables);
                write_summary_csv(std::filesystem::path(ablate_flags.out) / "summary.csv", tables);
                print_summary(tables);
            });
        if (*compare)
            return experiment(compare_flags, [&](auto ds, const SessionConfig& cfg, const auto& seeds) {
                const auto kinds = compare_flags.strategy_list();
                const auto c = run_comparison(ds, cfg, kinds, seeds, compare_flags.threads);
                write_results_csv(std::filesystem::path(compare_flags.out) / "results.csv", c.tables);
                write_summary_csv(std::filesystem::path(compare_flags.out) / "summary.csv", c.tables, c.supervised_eer);
                print_summary(c.tables);
                std::printf("supervised_eer=%s\n", format_eer(c.supervised_eer).c_str());
            });
        if (*serve) {
            auto ds = std::make_shared<const Dataset>(load(serve_dataset));
            if (data_dir.empty()) {
                const char* env = std::getenv("VEXAD_DATA_DIR");
                data_dir = env && *env ? env : "vexad-sessions";
            }
            std::filesystem::create_directories(data_dir);
            SessionService service(ds, {data_dir, ui_dir});
            httplib::Server server;
            // httplib's default adds SO_REUSEPORT, which lets a second server share a busy port.
            server.set_socket_options([](socket_t sock) {
                int yes = 1;
                setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
            });
            service.mount(server);
            if (!server.bind_to_port(host, port)) {
                std::cerr << "cannot bind " << host << ":" << port << "\n";
                return 1;
            }
            std::cerr << "serving " << ds->name << " on http://" << host << ":" << port << " (sessions in "
                      << data_dir << ")\n";
            return server.listen_after_bind() ? 0 : 1;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
