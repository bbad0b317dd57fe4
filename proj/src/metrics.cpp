#include "vexad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace vexad {

double eer(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("eer: scores and labels differ in length");
    std::int64_t P = 0, N = 0;
    for (int y : labels) {
        if (y == 1)
            ++P;
        else if (y == -1)
            ++N;
        else
            throw std::invalid_argument("eer: label must be -1 or +1");
    }
    if (P == 0 || N == 0) throw std::invalid_argument("eer: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sweep upward. Before any cut (threshold -inf) everything is called a
    // change: fp = N, fn = 0. A cut after a run of equal scores moves the
    // whole run below the threshold.
    std::int64_t fp = N, fn = 0;
    std::int64_t best_fp = fp, best_fn = fn;
    auto gap = [&](std::int64_t f, std::int64_t m) { return std::abs(f * P - m * N); };
    auto total = [&](std::int64_t f, std::int64_t m) { return f * P + m * N; };

    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? fn : fp) += labels[order[i]] == 1 ? 1 : -1;
            ++i;
        }
        const auto g = gap(fp, fn), bg = gap(best_fp, best_fn);
        if (g < bg || (g == bg && total(fp, fn) < total(best_fp, best_fn))) {
            best_fp = fp;
            best_fn = fn;
        }
    }
    return 100.0 * (static_cast<double>(best_fp) / static_cast<double>(N) +
                    static_cast<double>(best_fn) / static_cast<double>(P)) /
           2.0;
}

double sampling_rate(int t, int display_size, int n_total) {
    if (n_total <= 0) throw std::invalid_argument("sampling_rate: n must be positive");
    return 100.0 * static_cast<double>(t) * static_cast<double>(display_size) / (static_cast<double>(n_total) / 2.0);
}

double auc(std::span<const EvalRecord> records) {
    if (records.empty()) throw std::invalid_argument("auc: no records");
    double sum = 0.0;
    for (const auto& r : records) sum += r.eer;
    return sum / static_cast<double>(records.size());
}

std::string format_eer(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string format_rate(double v) {
    // The small guard keeps values such as 14.54 stored as 14.5399999... intact.
    const double cut = std::trunc(v * 100.0 + (v >= 0 ? 1e-9 : -1e-9)) / 100.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", cut);
    return buf;
}

}  // namespace vexad
