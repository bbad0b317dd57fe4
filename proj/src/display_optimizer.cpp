#include "vexad/display_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "vexad/errors.hpp"
#include "vexad/rng.hpp"

namespace vexad {

namespace {

// x log x with 0 log 0 = 0.
double xlogx(double x) { return x < 1e-300 ? 0.0 : x * std::log(x); }

void check_dims(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const ExemplarSet>& V,
                const Eigen::Ref<const MembershipMatrix>& mu, const char* where) {
    if (X.rows() != V.rows())
        throw DimensionError(std::string(where) + ": feature dim " + std::to_string(X.rows()) + " != exemplar dim " +
                             std::to_string(V.rows()));
    if (mu.rows() != X.cols() || mu.cols() != V.cols())
        throw DimensionError(std::string(where) + ": membership is " + std::to_string(mu.rows()) + "x" +
                             std::to_string(mu.cols()) + ", expected " + std::to_string(X.cols()) + "x" +
                             std::to_string(V.cols()));
}

Eigen::VectorXd clamped_mass(const Eigen::Ref<const MembershipMatrix>& mu) {
    return mu.colwise().sum().transpose().cwiseMax(kMassEps);
}

MembershipMatrix normalize_rows(MembershipMatrix m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) /= m.row(i).sum();
    return m;
}

double l1(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().sum(); }

}  // namespace

void ObjectiveWeights::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be > 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be >= 0");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be >= 0");
}

Eigen::MatrixXd sq_dist(const Eigen::Ref<const ExemplarSet>& V, const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (V.rows() != X.rows())
        throw DimensionError("sq_dist: exemplar dim " + std::to_string(V.rows()) + " != feature dim " +
                             std::to_string(X.rows()));
    Eigen::MatrixXd D(V.cols(), X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i)
        for (Eigen::Index k = 0; k < V.cols(); ++k) D(k, i) = (X.col(i) - V.col(k)).squaredNorm();
    return D;
}

double objective(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const ExemplarSet>& V,
                 const Eigen::Ref<const MembershipMatrix>& mu, const Scorer& scorer, const ObjectiveWeights& w) {
    check_dims(X, V, mu, "objective");
    w.validate();
    if (!X.allFinite() || !V.allFinite() || !mu.allFinite()) throw NumericError("objective: non-finite input");

    double total = 0.0;
    if (w.rep_on) total += (mu.array() * sq_dist(V, X).transpose().array()).sum();
    if (w.alpha != 0.0) {
        double div = 0.0;
        for (Eigen::Index k = 0; k < mu.cols(); ++k) div += xlogx(mu.col(k).sum());
        total += w.alpha * div;
    }
    if (w.beta != 0.0) {
        double amb = 0.0;
        for (Eigen::Index k = 0; k < V.cols(); ++k) {
            const double f = scorer.score(V.col(k));
            amb += f * std::log(f) + (1.0 - f) * std::log(1.0 - f);
        }
        total += w.beta * amb;
    }
    double ent = 0.0;
    for (Eigen::Index k = 0; k < mu.cols(); ++k)
        for (Eigen::Index i = 0; i < mu.rows(); ++i) ent += xlogx(mu(i, k));
    return total + w.gamma * ent;
}

MembershipMatrix update_membership(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const ExemplarSet>& V,
                                   const Eigen::Ref<const MembershipMatrix>& mu, const ObjectiveWeights& w) {
    check_dims(X, V, mu, "update_membership");
    w.validate();
    const Eigen::Index n = X.cols(), K = V.cols();

    Eigen::MatrixXd logits(n, K);
    if (w.rep_on)
        logits = sq_dist(V, X).transpose();
    else
        logits.setZero();
    if (w.alpha != 0.0) {
        const Eigen::VectorXd mass = clamped_mass(mu);
        for (Eigen::Index k = 0; k < K; ++k) logits.col(k).array() += w.alpha * (1.0 + std::log(mass[k]));
    }
    logits *= -1.0 / w.gamma;

    MembershipMatrix out(n, K);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double top = logits.row(i).maxCoeff();
        if (!std::isfinite(top)) throw NumericError("update_membership: non-finite exponent in row " + std::to_string(i));
        out.row(i) = (logits.row(i).array() - top).exp();
    }
    return normalize_rows(std::move(out));
}

ExemplarSet update_exemplars(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const ExemplarSet>& V,
                             const Eigen::Ref<const MembershipMatrix>& mu, const Scorer& scorer,
                             const ObjectiveWeights& w) {
    check_dims(X, V, mu, "update_exemplars");
    w.validate();
    ExemplarSet raw = X * mu;
    if (w.beta != 0.0) {
        if (scorer.dim() != V.rows()) throw DimensionError("update_exemplars: scorer dim does not match exemplars");
        const ScoreGradients g = score_gradient(scorer, V);
        for (Eigen::Index k = 0; k < V.cols(); ++k) {
            const double f = scorer.score(V.col(k));
            // The two "+1" columns cancel because grad f_2 = -grad f_1.
            raw.col(k) += w.beta * (g.change.col(k) * (std::log(f) + 1.0) + g.no_change.col(k) * (std::log(1.0 - f) + 1.0));
        }
    }
    const Eigen::VectorXd mass = clamped_mass(mu);
    ExemplarSet out = raw * mass.cwiseInverse().asDiagonal();
    if (!out.allFinite()) throw NumericError("update_exemplars: non-finite exemplar");
    return out;
}

SolveResult solve_from(const Eigen::Ref<const Eigen::MatrixXd>& X, const Scorer& scorer, const ObjectiveWeights& w,
                       MembershipMatrix mu0, ExemplarSet V0, double epsilon, int max_iter,
                       const IterateObserver& observer) {
    w.validate();
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");

    SolveResult res{std::move(mu0), std::move(V0), {}};
    res.report.objective_trace.push_back(objective(X, res.exemplars, res.membership, scorer, w));
    int tau = 0;
    double delta = 0.0;
    do {
        // Exemplars are refit to the memberships just computed.
        MembershipMatrix mu_next = update_membership(X, res.exemplars, res.membership, w);
        ExemplarSet V_next = update_exemplars(X, res.exemplars, mu_next, scorer, w);
        delta = l1(mu_next, res.membership) + l1(V_next, res.exemplars);
        res.membership = std::move(mu_next);
        res.exemplars = std::move(V_next);
        ++tau;
        res.report.objective_trace.push_back(objective(X, res.exemplars, res.membership, scorer, w));
        if (observer) observer(tau, res.membership, res.exemplars);
    } while (delta >= epsilon && tau < max_iter);

    res.report.iterations = tau;
    res.report.final_delta = delta;
    res.report.converged = delta < epsilon;
    return res;
}

SolveResult solve(const Eigen::Ref<const Eigen::MatrixXd>& X, const Scorer& scorer, const ObjectiveWeights& w,
                  const SolverOptions& opt, const IterateObserver& observer) {
    const Eigen::Index n = X.cols();
    const int K = opt.display_size;
    if (K < 1) throw std::invalid_argument("display size must be >= 1");
    if (n < K) throw std::invalid_argument("solve: need at least K samples");

    Rng rng(opt.seed);
    // K distinct data columns (partial Fisher-Yates).
    std::vector<Eigen::Index> cols(n);
    for (Eigen::Index i = 0; i < n; ++i) cols[i] = i;
    ExemplarSet V0(X.rows(), K);
    for (int k = 0; k < K; ++k) {
        const auto j = k + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - k)));
        std::swap(cols[k], cols[j]);
        V0.col(k) = X.col(cols[k]);
    }
    MembershipMatrix mu0(n, K);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int k = 0; k < K; ++k) mu0(i, k) = rng.uniform_open_closed();
    return solve_from(X, scorer, w, normalize_rows(std::move(mu0)), std::move(V0), opt.epsilon, opt.max_iter, observer);
}

std::vector<int> select_display(const Eigen::Ref<const ExemplarSet>& V, const Eigen::Ref<const Eigen::MatrixXd>& pool_X,
                                std::span<const int> pool_ids, std::span<const int> forbidden) {
    if (pool_X.cols() != static_cast<Eigen::Index>(pool_ids.size()))
        throw DimensionError("select_display: pool features and ids differ in length");
    if (pool_X.rows() != V.rows()) throw DimensionError("select_display: pool dim != exemplar dim");
    const std::unordered_set<int> banned(forbidden.begin(), forbidden.end());
    std::vector<bool> taken(pool_ids.size(), false);
    std::size_t available = 0;
    for (std::size_t i = 0; i < pool_ids.size(); ++i) {
        taken[i] = banned.contains(pool_ids[i]);
        if (!taken[i]) ++available;
    }
    if (available < static_cast<std::size_t>(V.cols()))
        throw std::invalid_argument("select_display: only " + std::to_string(available) +
                                    " selectable samples for display size " + std::to_string(V.cols()));

    const Eigen::MatrixXd D = sq_dist(V, pool_X);
    std::vector<int> out;
    out.reserve(V.cols());
    for (Eigen::Index k = 0; k < V.cols(); ++k) {
        std::size_t best = pool_ids.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pool_ids.size(); ++i) {
            if (taken[i]) continue;
            const double d = D(k, static_cast<Eigen::Index>(i));
            if (best == pool_ids.size() || d < best_d || (d == best_d && pool_ids[i] < pool_ids[best])) {
                best = i;
                best_d = d;
            }
        }
        taken[best] = true;
        out.push_back(pool_ids[best]);
    }
    return out;
}

nlohmann::json to_json(const SolveReport& r) {
    return {{"iterations", r.iterations},
            {"final_delta", r.final_delta},
            {"converged", r.converged},
            {"objective_trace", r.objective_trace}};
}

SolveReport solve_report_from_json(const nlohmann::json& j) {
    SolveReport r;
    r.iterations = j.at("iterations").get<int>();
    r.final_delta = j.at("final_delta").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    return r;
}

}  // namespace vexad
