#pragma once

#include <span>
#include <string>
#include <vector>

namespace vexad {

struct EvalRecord {
    int iter = 0;         // 1-based: number of labeled displays so far
    double eer = 0.0;     // percent
    double samp_pct = 0.0;

    bool operator==(const EvalRecord&) const = default;
};

/// Equal error rate in percent.
///
/// Thresholds are -inf, +inf and the midpoints between consecutive distinct
/// scores; a sample is called "change" when its score is >= the threshold.
/// The chosen threshold minimizes |FPR - FNR|, then FPR + FNR, then the
/// threshold itself; the result is 100 * (FPR + FNR) / 2 there. Scores are
/// never flipped, so a scorer worse than chance reports more than 50.
double eer(std::span<const double> scores, std::span<const int> labels);

/// 100 * t * K / (n / 2): labeled share of the training half after t displays.
double sampling_rate(int t, int display_size, int n_total);

/// Mean EER over the records ("AUC" in the tables).
double auc(std::span<const EvalRecord> records);

/// Report rendering at two decimals. EERs and AUCs are rounded; sampling
/// rates are truncated, as in the published tables (16/1100 -> "1.45",
/// 160/1100 -> "14.54").
std::string format_eer(double v);
std::string format_rate(double v);

}  // namespace vexad
