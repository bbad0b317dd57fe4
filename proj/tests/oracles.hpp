#pragma once

// Independent reference implementations for the tests. Everything here is
// written with plain loops over std::vector; Eigen objects are only read
// element by element.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "vexad/rng.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;  // Mat[row][col]

inline Mat from_eigen(const Eigen::MatrixXd& m) {
    Mat out(m.rows(), std::vector<double>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
    return out;
}

inline Eigen::MatrixXd to_eigen(const Mat& m) {
    const auto rows = static_cast<Eigen::Index>(m.size());
    const auto cols = rows ? static_cast<Eigen::Index>(m[0].size()) : 0;
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = m[r][c];
    return out;
}

inline Eigen::MatrixXd random_matrix(vexad::Rng& rng, int rows, int cols, double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
    return m;
}

// d x n data, d x K exemplars -> K x n squared distances.
inline Mat sq_dist(const Mat& V, const Mat& X) {
    const std::size_t d = X.size(), n = X[0].size(), K = V[0].size();
    Mat D(K, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += (X[j][i] - V[j][k]) * (X[j][i] - V[j][k]);
            D[k][i] = s;
        }
    return D;
}

inline double xlogx(double x) { return x <= 0.0 ? 0.0 : x * std::log(x); }

inline double sigmoid_clamped(const std::vector<double>& w, double b, const std::vector<double>& x) {
    double m = b;
    for (std::size_t j = 0; j < w.size(); ++j) m += w[j] * x[j];
    const double f = 1.0 / (1.0 + std::exp(-m));
    return std::clamp(f, 1e-12, 1.0 - 1e-12);
}

// All four sums of the display objective written out term by term.
inline double objective(const Mat& X, const Mat& V, const Mat& mu, const std::vector<double>& w, double b,
                        bool rep_on, double alpha, double beta, double gamma) {
    const std::size_t d = X.size(), n = X[0].size(), K = V[0].size();
    const Mat D = sq_dist(V, X);
    double rep = 0.0, div = 0.0, amb = 0.0, ent = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rep += mu[i][k] * D[k][i];
            mass += mu[i][k];
            ent += xlogx(mu[i][k]);
        }
        div += xlogx(mass);
        std::vector<double> v(d);
        for (std::size_t j = 0; j < d; ++j) v[j] = V[j][k];
        const double f = sigmoid_clamped(w, b, v);
        amb += f * std::log(f) + (1.0 - f) * std::log(1.0 - f);
    }
    return (rep_on ? rep : 0.0) + alpha * div + beta * amb + gamma * ent;
}

// One soft k-means step: responsibilities from the current centers, then
// centers as weighted means under the new responsibilities.
inline void soft_kmeans_step(const Mat& X, Mat& mu, Mat& V, double gamma) {
    const std::size_t d = X.size(), n = X[0].size(), K = V[0].size();
    const Mat D = sq_dist(V, X);
    Mat mu_new(n, std::vector<double>(K));
    for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            mu_new[i][k] = std::exp(-D[k][i] / gamma);
            z += mu_new[i][k];
        }
        for (std::size_t k = 0; k < K; ++k) mu_new[i][k] /= z;
    }
    Mat V_new(d, std::vector<double>(K));
    for (std::size_t k = 0; k < K; ++k) {
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) mass += mu_new[i][k];
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += mu_new[i][k] * X[j][i];
            V_new[j][k] = s / mass;
        }
    }
    mu = std::move(mu_new);
    V = std::move(V_new);
}

inline double max_abs_diff(const Mat& a, const Eigen::MatrixXd& b) {
    double m = 0.0;
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t c = 0; c < a[r].size(); ++c)
            m = std::max(m, std::abs(a[r][c] - b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
    return m;
}

// Exhaustive threshold sweep: every candidate threshold is evaluated by
// recounting all samples.
inline double eer(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::vector<double> u(scores);
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    std::vector<double> thresholds{-std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i + 1 < u.size(); ++i) thresholds.push_back(u[i] + (u[i + 1] - u[i]) / 2.0);
    thresholds.push_back(std::numeric_limits<double>::infinity());

    long long P = 0, N = 0;
    for (int y : labels) (y == 1 ? P : N) += 1;
    // Rates compared exactly as fractions over the common denominator N * P.
    long long best_gap = std::numeric_limits<long long>::max(), best_sum = 0;
    double best = 0.0;
    for (double th : thresholds) {
        long long fp = 0, fn = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool called = scores[i] >= th;
            if (called && labels[i] == -1) fp += 1;
            if (!called && labels[i] == 1) fn += 1;
        }
        const long long gap = std::llabs(fp * P - fn * N), sum = fp * P + fn * N;
        // Thresholds are visited in increasing order, so strict improvement
        // keeps the smallest threshold among exact ties.
        if (gap < best_gap || (gap == best_gap && sum < best_sum)) {
            best_gap = gap;
            best_sum = sum;
            best = 100.0 * (double(fp) / double(N) + double(fn) / double(P)) / 2.0;
        }
    }
    return best;
}

// Farthest-first by recomputing every candidate's nearest distance each round.
inline std::vector<int> maxmin(const Mat& F, const std::vector<int>& pool, const std::vector<int>& labeled, int K) {
    auto dist = [&](int a, int b) {
        double s = 0.0;
        for (std::size_t j = 0; j < F.size(); ++j) s += (F[j][a] - F[j][b]) * (F[j][a] - F[j][b]);
        return s;
    };
    std::vector<int> anchors(labeled), out;
    std::set<int> used(labeled.begin(), labeled.end());
    for (int step = 0; step < K; ++step) {
        int best = -1;
        double best_d = -1.0;
        for (int c : pool) {
            if (used.count(c)) continue;
            double m = std::numeric_limits<double>::infinity();
            for (int a : anchors) m = std::min(m, dist(a, c));
            if (m > best_d || (m == best_d && c < best)) {
                best = c;
                best_d = m;
            }
        }
        out.push_back(best);
        anchors.push_back(best);
        used.insert(best);
    }
    return out;
}

// Full stable sort by (|f - 0.5|, id).
inline std::vector<int> uncertainty(const std::vector<double>& score_by_id, std::vector<int> candidates, int K) {
    std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
        const double da = std::abs(score_by_id[a] - 0.5), db = std::abs(score_by_id[b] - 0.5);
        return da != db ? da < db : a < b;
    });
    candidates.resize(K);
    return candidates;
}

// Exhaustive search for a strict linear separator among the perpendicular
// bisectors of all (positive, negative) sample pairs. Points are 2-D.
inline bool has_bisector_separator(const std::vector<std::pair<double, double>>& pts, const std::vector<int>& y) {
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = 0; b < pts.size(); ++b) {
            if (y[a] != 1 || y[b] != -1) continue;
            const double wx = pts[a].first - pts[b].first, wy = pts[a].second - pts[b].second;
            const double mx = (pts[a].first + pts[b].first) / 2, my = (pts[a].second + pts[b].second) / 2;
            bool ok = true;
            for (std::size_t i = 0; i < pts.size() && ok; ++i) {
                const double s = wx * (pts[i].first - mx) + wy * (pts[i].second - my);
                ok = y[i] == 1 ? s > 0 : s < 0;
            }
            if (ok) return true;
        }
    return false;
}

}  // namespace oracle
