#include "vexad/samplers.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "vexad/rng.hpp"

namespace vexad {

namespace {

std::vector<int> available_ids(std::span<const int> pool, std::span<const int> forbidden, int K) {
    if (K < 1) throw std::invalid_argument("display size must be >= 1");
    const std::unordered_set<int> banned(forbidden.begin(), forbidden.end());
    std::vector<int> out;
    for (int id : pool)
        if (!banned.contains(id)) out.push_back(id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.size() < static_cast<std::size_t>(K))
        throw std::invalid_argument("insufficient pool: " + std::to_string(out.size()) + " candidates for K = " +
                                    std::to_string(K));
    return out;
}

}  // namespace

std::string_view to_string(SamplerKind k) {
    switch (k) {
        case SamplerKind::vexad: return "vexad";
        case SamplerKind::random: return "random";
        case SamplerKind::maxmin: return "maxmin";
        case SamplerKind::uncertainty: return "uncertainty";
    }
    return "?";
}

std::optional<SamplerKind> parse_sampler_kind(std::string_view s) {
    for (auto k : {SamplerKind::vexad, SamplerKind::random, SamplerKind::maxmin, SamplerKind::uncertainty})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

std::string sampler_kind_list() { return "vexad, random, maxmin, uncertainty"; }

std::vector<int> sample_random(std::span<const int> pool, std::span<const int> forbidden, int K, std::uint64_t seed) {
    std::vector<int> cand = available_ids(pool, forbidden, K);
    Rng rng(seed);
    for (int k = 0; k < K; ++k) {
        const auto j = static_cast<std::size_t>(k) + rng.below(cand.size() - static_cast<std::size_t>(k));
        std::swap(cand[k], cand[j]);
    }
    cand.resize(K);
    return cand;
}

std::vector<int> sample_maxmin(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> pool,
                               std::span<const int> labeled, int K) {
    if (labeled.empty()) throw std::invalid_argument("maxmin needs a nonempty labeled set");
    std::vector<int> cand = available_ids(pool, labeled, K);

    std::vector<double> nearest(cand.size(), std::numeric_limits<double>::infinity());
    auto absorb = [&](int ref) {
        for (std::size_t i = 0; i < cand.size(); ++i)
            nearest[i] = std::min(nearest[i], (features.col(cand[i]) - features.col(ref)).squaredNorm());
    };
    for (int id : labeled) absorb(id);

    std::vector<bool> used(cand.size(), false);
    std::vector<int> out;
    for (int k = 0; k < K; ++k) {
        std::size_t best = cand.size();
        for (std::size_t i = 0; i < cand.size(); ++i) {
            if (used[i]) continue;
            // cand is sorted, so strict > keeps the smallest id among ties
            if (best == cand.size() || nearest[i] > nearest[best]) best = i;
        }
        used[best] = true;
        out.push_back(cand[best]);
        absorb(cand[best]);
    }
    return out;
}

std::vector<int> sample_uncertainty(const Scorer& scorer, const Eigen::Ref<const Eigen::MatrixXd>& features,
                                    std::span<const int> pool, std::span<const int> forbidden, int K) {
    std::vector<int> cand = available_ids(pool, forbidden, K);
    std::vector<std::pair<double, int>> keyed;
    keyed.reserve(cand.size());
    for (int id : cand) keyed.emplace_back(std::abs(scorer.score(features.col(id)) - 0.5), id);
    std::partial_sort(keyed.begin(), keyed.begin() + K, keyed.end());
    std::vector<int> out;
    for (int k = 0; k < K; ++k) out.push_back(keyed[k].second);
    return out;
}

}  // namespace vexad
