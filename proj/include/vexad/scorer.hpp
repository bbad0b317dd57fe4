#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace vexad {

/// Probabilities are clamped to [kProbEps, 1 - kProbEps] so log f is finite.
inline constexpr double kProbEps = 1e-12;

struct TrainConfig {
    double l2_strength = 1e-2;
    int max_epochs = 500;
    double grad_tol = 1e-6;
    bool class_balanced = true;
    std::uint64_t seed = 0;

    bool operator==(const TrainConfig&) const = default;
};

struct LabeledSet {
    Eigen::MatrixXd features;  // d x m
    std::vector<int> labels;   // m entries in {-1, +1}
};

/// Logistic change scorer f(x) = sigmoid(w.x + b); f_2 = 1 - f.
class Scorer {
public:
    Scorer() = default;
    Scorer(Eigen::VectorXd weights, double bias, bool degenerate = false, int trained_on = 0);

    int dim() const { return static_cast<int>(weights_.size()); }
    const Eigen::VectorXd& weights() const { return weights_; }
    double bias() const { return bias_; }
    bool degenerate() const { return degenerate_; }
    int trained_on() const { return trained_on_; }

    double margin(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// Clamped probability of the change class.
    double score(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// score() for every column of X.
    Eigen::VectorXd score_all(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

    bool operator==(const Scorer&) const = default;

private:
    Eigen::VectorXd weights_;
    double bias_ = 0.0;
    bool degenerate_ = false;
    int trained_on_ = 0;
};

struct ScoreGradients {
    Eigen::MatrixXd change;     // d/dv f_1 per column
    Eigen::MatrixXd no_change;  // d/dv f_2 = -change
};

/// Per column k: f(1-f) * w with f = score(V_k).
ScoreGradients score_gradient(const Scorer& s, const Eigen::Ref<const Eigen::MatrixXd>& V);

/// Per-epoch loss values observed during training (for diagnostics and tests).
struct TrainTrace {
    std::vector<double> loss;
    int epochs = 0;
    double final_grad_norm = 0.0;
};

/// Class-weighted, L2-regularized logistic regression fitted by full-batch
/// gradient descent with Armijo backtracking. Single-class input yields a
/// degenerate constant scorer instead of throwing.
Scorer train(const LabeledSet& data, const TrainConfig& cfg, TrainTrace* trace = nullptr);

/// Regularized training objective used by train(); exposed for tests.
double training_loss(const LabeledSet& data, const TrainConfig& cfg, const Eigen::VectorXd& w, double b);

nlohmann::json to_json(const Scorer& s);
Scorer scorer_from_json(const nlohmann::json& j);

}  // namespace vexad
