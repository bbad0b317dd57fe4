#include "vexad/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "vexad/errors.hpp"

namespace vexad {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

RunTable summarize(std::string label, std::vector<SeedRun> runs) {
    RunTable t;
    t.label = std::move(label);
    const std::size_t iters = runs.front().records.size();
    const double S = static_cast<double>(runs.size());
    for (std::size_t i = 0; i < iters; ++i) {
        EvalRecord r = runs.front().records[i];
        double sum = 0.0;
        for (const auto& run : runs) sum += run.records.at(i).eer;
        r.eer = sum / S;
        t.records.push_back(r);
    }
    t.auc = auc(t.records);
    t.final_eer_mean = t.records.back().eer;
    if (runs.size() > 1) {
        double ss = 0.0;
        for (const auto& run : runs) ss += std::pow(auc(run.records) - t.auc, 2);
        t.auc_std = std::sqrt(ss / (S - 1.0));
    }
    t.runs = std::move(runs);
    return t;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, const std::string& header) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw ValidationError(path.string() + ": expected header '" + header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream is(line);
        std::string c;
        while (std::getline(is, c, ',')) cells.push_back(c);
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

std::vector<AblationCell> ablation_cells(const ObjectiveWeights& base) {
    auto cell = [&](bool rep, bool div, bool amb) {
        std::string label;
        auto add = [&](const char* part) {
            if (!label.empty()) label += '+';
            label += part;
        };
        if (rep) add("rep");
        if (div) add("div");
        if (amb) add("amb");
        ObjectiveWeights w = base;
        w.rep_on = rep;
        w.alpha = div ? base.alpha : 0.0;
        w.beta = amb ? base.beta : 0.0;
        return AblationCell{label, w};
    };
    return {cell(false, false, true), cell(false, true, false), cell(true, false, false), cell(true, false, true),
            cell(false, true, true),  cell(true, true, false),  cell(true, true, true)};
}

std::vector<RunTable> run_tables(std::shared_ptr<const Dataset> data,
                                 const std::vector<std::pair<std::string, SessionConfig>>& cells,
                                 std::span<const std::uint64_t> seeds, unsigned threads) {
    if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
    const std::size_t S = seeds.size();
    const std::size_t jobs = cells.size() * S;
    std::vector<std::vector<EvalRecord>> out(jobs);
    std::vector<std::exception_ptr> errors(jobs);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t job = next++; job < jobs; job = next++) {
            try {
                SessionConfig cfg = cells[job / S].second;
                cfg.seed = seeds[job % S];
                out[job] = run_simulated(data, cfg).metrics();
            } catch (...) {
                errors[job] = std::current_exception();
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<RunTable> tables;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<SeedRun> runs;
        for (std::size_t s = 0; s < S; ++s) runs.push_back({seeds[s], std::move(out[c * S + s])});
        tables.push_back(summarize(cells[c].first, std::move(runs)));
    }
    return tables;
}

std::vector<RunTable> run_ablation(std::shared_ptr<const Dataset> data, const SessionConfig& base,
                                   std::span<const std::uint64_t> seeds, unsigned threads) {
    std::vector<std::pair<std::string, SessionConfig>> cells;
    for (const auto& c : ablation_cells(base.weights)) {
        SessionConfig cfg = base;
        cfg.strategy = SamplerKind::vexad;
        cfg.weights = c.weights;
        cells.emplace_back(c.label, cfg);
    }
    return run_tables(std::move(data), cells, seeds, threads);
}

double supervised_eer(const Dataset& data, const SessionConfig& cfg) {
    const Split split = split_half(data, cfg.split_seed);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    const Scorer s = train({feature_matrix(data, split.train_ids), labels_of(data, split.train_ids)}, tc);
    const Eigen::VectorXd scores = s.score_all(feature_matrix(data, split.eval_ids));
    const std::vector<double> sv(scores.begin(), scores.end());
    return eer(sv, labels_of(data, split.eval_ids));
}

Comparison run_comparison(std::shared_ptr<const Dataset> data, const SessionConfig& base,
                          std::span<const SamplerKind> strategies, std::span<const std::uint64_t> seeds,
                          unsigned threads) {
    std::vector<std::pair<std::string, SessionConfig>> cells;
    for (auto k : strategies) {
        SessionConfig cfg = base;
        cfg.strategy = k;
        cells.emplace_back(std::string(to_string(k)), cfg);
    }
    Comparison c;
    c.tables = run_tables(data, cells, seeds, threads);
    c.supervised_eer = supervised_eer(*data, base);
    return c;
}

void write_results_csv(const std::filesystem::path& path, std::span<const RunTable> tables) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "label,seed,iter,eer,samp_pct\n";
    for (const auto& t : tables)
        for (const auto& run : t.runs)
            for (const auto& r : run.records)
                out << t.label << ',' << run.seed << ',' << r.iter << ',' << fmt(r.eer) << ',' << fmt(r.samp_pct)
                    << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_summary_csv(const std::filesystem::path& path, std::span<const RunTable> tables,
                       std::optional<double> supervised) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "label,auc_mean,auc_std,final_eer_mean\n";
    for (const auto& t : tables)
        out << t.label << ',' << fmt(t.auc) << ',' << fmt(t.auc_std) << ',' << fmt(t.final_eer_mean) << '\n';
    if (supervised) out << "supervised_eer," << fmt(*supervised) << ",0," << fmt(*supervised) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
    std::vector<ResultRow> rows;
    for (const auto& c : read_csv(path, "label,seed,iter,eer,samp_pct")) {
        if (c.size() != 5) throw ValidationError(path.string() + ": row must have 5 fields");
        rows.push_back({c[0], std::stoull(c[1]), {std::stoi(c[2]), std::stod(c[3]), std::stod(c[4])}});
    }
    return rows;
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
    std::vector<SummaryRow> rows;
    for (const auto& c : read_csv(path, "label,auc_mean,auc_std,final_eer_mean")) {
        if (c.size() != 4) throw ValidationError(path.string() + ": row must have 4 fields");
        rows.push_back({c[0], std::stod(c[1]), std::stod(c[2]), std::stod(c[3])});
    }
    return rows;
}

}  // namespace vexad
