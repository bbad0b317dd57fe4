#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vexad/dataset.hpp"
#include "vexad/display_optimizer.hpp"
#include "vexad/metrics.hpp"
#include "vexad/rng.hpp"
#include "vexad/samplers.hpp"
#include "vexad/scorer.hpp"

namespace vexad {

inline constexpr int kSessionFormatVersion = 1;

struct SessionConfig {
    SamplerKind strategy = SamplerKind::vexad;
    int display_size = 16;  // K
    int budget = 10;        // T
    ObjectiveWeights weights;
    TrainConfig train;
    double epsilon = 1e-3;
    int max_iter = 100;
    std::uint64_t seed = 0;
    std::string dataset;  // dataset name the session was started on
    std::uint64_t split_seed = 0;

    bool operator==(const SessionConfig&) const = default;
};

enum class Phase { awaiting_labels, ready, finished };

std::string_view to_string(Phase p);

struct LabelAnswer {
    int id = 0;
    int label = 0;
};

/// Ground truth for every id in `display`.
std::vector<LabelAnswer> simulated_oracle(const Dataset& ds, std::span<const int> display);

/// One active-learning run: shows a display, takes the oracle's answers,
/// retrains on everything labeled so far, evaluates on the held-out half and
/// picks the next display with the configured strategy.
///
/// Mutations are not synchronized; callers serialize access per session.
class Session {
public:
    /// Draws the random first display D_0.
    Session(std::shared_ptr<const Dataset> data, SessionConfig cfg);

    /// Validates `answers` against the current display; on any error the
    /// session is left unchanged.
    void submit_labels(std::span<const LabelAnswer> answers);

    const SessionConfig& config() const { return cfg_; }
    const Dataset& dataset() const { return *data_; }
    const Split& split() const { return split_; }
    Phase phase() const { return phase_; }
    int iteration() const { return t_; }
    /// Empty once finished.
    std::span<const int> current_display() const;
    const std::vector<std::vector<int>>& displays() const { return displays_; }
    const std::vector<std::vector<int>>& labels() const { return labels_; }
    const Scorer& scorer() const { return scorer_; }
    const std::vector<EvalRecord>& metrics() const { return metrics_; }
    const std::vector<SolveReport>& solve_reports() const { return solve_reports_; }
    std::vector<int> labeled_ids() const;

    nlohmann::json to_json() const;
    static Session from_json(const nlohmann::json& j, std::shared_ptr<const Dataset> data);

    void save(const std::filesystem::path& path) const;
    static Session load(const std::filesystem::path& path, std::shared_ptr<const Dataset> data);

private:
    Session(std::shared_ptr<const Dataset> data, SessionConfig cfg, bool draw_first);
    std::vector<int> next_display(const Scorer& scorer, const std::vector<int>& labeled, std::uint64_t draw,
                                  SolveReport* report) const;

    std::shared_ptr<const Dataset> data_;
    SessionConfig cfg_;
    Split split_;
    Eigen::MatrixXd all_features_;    // column = sample id
    Eigen::MatrixXd train_features_;  // column i = split_.train_ids[i]
    Eigen::MatrixXd eval_features_;
    std::vector<int> eval_labels_;

    int t_ = 0;
    Phase phase_ = Phase::awaiting_labels;
    std::vector<std::vector<int>> displays_;
    std::vector<std::vector<int>> labels_;
    Scorer scorer_;
    std::vector<EvalRecord> metrics_;
    std::vector<SolveReport> solve_reports_;
    Rng rng_;
};

/// Drives a session to completion with the ground-truth oracle.
Session run_simulated(std::shared_ptr<const Dataset> data, const SessionConfig& cfg);

nlohmann::json to_json(const SessionConfig& c);
SessionConfig session_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalRecord& r);

}  // namespace vexad
