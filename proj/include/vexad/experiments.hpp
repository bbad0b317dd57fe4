#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vexad/dataset.hpp"
#include "vexad/metrics.hpp"
#include "vexad/session.hpp"

namespace vexad {

struct SeedRun {
    std::uint64_t seed = 0;
    std::vector<EvalRecord> records;
};

/// One strategy or ablation cell, averaged over seeds.
struct RunTable {
    std::string label;
    std::vector<EvalRecord> records;  // per-iteration mean over seeds
    double auc = 0.0;                 // mean of records[].eer
    double auc_std = 0.0;             // sample std of per-seed AUCs
    double final_eer_mean = 0.0;
    std::vector<SeedRun> runs;
};

struct AblationCell {
    std::string label;
    ObjectiveWeights weights;
};

/// The seven non-empty on/off combinations of representativity, diversity
/// and ambiguity, in table order; "on" uses the base alpha/beta. The
/// membership-entropy term (gamma) is always kept.
std::vector<AblationCell> ablation_cells(const ObjectiveWeights& base);

/// Runs every (label, config) over all seeds; cfg.seed is replaced per run.
/// Independent runs execute on up to `threads` workers (0 = hardware).
std::vector<RunTable> run_tables(std::shared_ptr<const Dataset> data,
                                 const std::vector<std::pair<std::string, SessionConfig>>& cells,
                                 std::span<const std::uint64_t> seeds, unsigned threads = 0);

std::vector<RunTable> run_ablation(std::shared_ptr<const Dataset> data, const SessionConfig& base,
                                   std::span<const std::uint64_t> seeds, unsigned threads = 0);

struct Comparison {
    std::vector<RunTable> tables;
    double supervised_eer = 0.0;
};

/// Scorer trained on the entire ground-truth-labeled training half, scored on
/// the evaluation half.
double supervised_eer(const Dataset& data, const SessionConfig& cfg);

Comparison run_comparison(std::shared_ptr<const Dataset> data, const SessionConfig& base,
                          std::span<const SamplerKind> strategies, std::span<const std::uint64_t> seeds,
                          unsigned threads = 0);

/// results.csv: label,seed,iter,eer,samp_pct
void write_results_csv(const std::filesystem::path& path, std::span<const RunTable> tables);
/// summary.csv: label,auc_mean,auc_std,final_eer_mean (+ optional supervised_eer row)
void write_summary_csv(const std::filesystem::path& path, std::span<const RunTable> tables,
                       std::optional<double> supervised = std::nullopt);

struct ResultRow {
    std::string label;
    std::uint64_t seed = 0;
    EvalRecord record;
    bool operator==(const ResultRow&) const = default;
};
struct SummaryRow {
    std::string label;
    double auc_mean = 0.0;
    double auc_std = 0.0;
    double final_eer_mean = 0.0;
    bool operator==(const SummaryRow&) const = default;
};

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

}  // namespace vexad
