#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "vexad/scorer.hpp"

namespace vexad {

/// n x K, row-stochastic: row i is the membership of sample i over exemplars.
using MembershipMatrix = Eigen::MatrixXd;
/// d x K, column k is virtual exemplar k.
using ExemplarSet = Eigen::MatrixXd;

/// Clamp applied to membership column sums before log / inversion.
inline constexpr double kMassEps = 1e-12;

struct ObjectiveWeights {
    bool rep_on = true;  // representativity
    double alpha = 1.0;  // diversity
    double beta = 1.0;   // ambiguity
    double gamma = 1.0;  // membership entropy; must be > 0

    void validate() const;
    bool operator==(const ObjectiveWeights&) const = default;
};

struct SolverOptions {
    int display_size = 16;  // K
    double epsilon = 1e-3;
    int max_iter = 100;
    std::uint64_t seed = 0;
};

struct SolveReport {
    int iterations = 0;
    double final_delta = 0.0;
    bool converged = false;
    std::vector<double> objective_trace;
};

struct SolveResult {
    MembershipMatrix membership;
    ExemplarSet exemplars;
    SolveReport report;
};

/// Called after each fixed-point step with (tau+1, mu, V).
using IterateObserver = std::function<void(int, const MembershipMatrix&, const ExemplarSet&)>;

/// Entry (k, i) = |x_i - V_k|^2.
Eigen::MatrixXd sq_dist(const Eigen::Ref<const ExemplarSet>& V, const Eigen::Ref<const Eigen::MatrixXd>& X);

/// rep * tr(mu d(V,X)') + alpha [1'mu] log[1'mu]' + beta tr(f(V)' log f(V)) + gamma tr(mu' log mu),
/// with the convention 0 log 0 = 0 and unnormalized column masses 1'mu.
double objective(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const ExemplarSet>& V,
                 const Eigen::Ref<const MembershipMatrix>& mu, const Scorer& scorer, const ObjectiveWeights& w);

/// Row-normalized exp(-(rep * d(X,V) + alpha (1 + log 1'mu)) / gamma), evaluated
/// in log space with per-row max subtraction.
MembershipMatrix update_membership(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const ExemplarSet>& V,
                                   const Eigen::Ref<const MembershipMatrix>& mu, const ObjectiveWeights& w);

/// (X mu + beta sum_c grad f_c(V) o (1 [log f_c(V)]' + 1 1')) diag(1'mu)^-1.
ExemplarSet update_exemplars(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const ExemplarSet>& V,
                             const Eigen::Ref<const MembershipMatrix>& mu, const Scorer& scorer,
                             const ObjectiveWeights& w);

/// Random initialization then fixed-point iteration until the L1 change of
/// (mu, V) drops below epsilon or max_iter steps have been taken.
SolveResult solve(const Eigen::Ref<const Eigen::MatrixXd>& X, const Scorer& scorer, const ObjectiveWeights& w,
                  const SolverOptions& opt, const IterateObserver& observer = {});

/// Same loop from a caller-provided starting point (mu0, V0).
SolveResult solve_from(const Eigen::Ref<const Eigen::MatrixXd>& X, const Scorer& scorer, const ObjectiveWeights& w,
                       MembershipMatrix mu0, ExemplarSet V0, double epsilon, int max_iter,
                       const IterateObserver& observer = {});

/// Maps exemplars to real samples: for k = 0..K-1, the nearest pool sample
/// that is neither forbidden nor already chosen. pool_X column i is pool_ids[i].
std::vector<int> select_display(const Eigen::Ref<const ExemplarSet>& V, const Eigen::Ref<const Eigen::MatrixXd>& pool_X,
                                std::span<const int> pool_ids, std::span<const int> forbidden);

nlohmann::json to_json(const SolveReport& r);
SolveReport solve_report_from_json(const nlohmann::json& j);

}  // namespace vexad
