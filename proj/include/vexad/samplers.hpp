#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vexad/scorer.hpp"

namespace vexad {

enum class SamplerKind { vexad, random, maxmin, uncertainty };

std::string_view to_string(SamplerKind k);
std::optional<SamplerKind> parse_sampler_kind(std::string_view s);
/// "vexad, random, maxmin, uncertainty"
std::string sampler_kind_list();

/// K ids drawn uniformly without replacement from pool \ forbidden.
std::vector<int> sample_random(std::span<const int> pool, std::span<const int> forbidden, int K, std::uint64_t seed);

/// Greedy farthest-first: each pick maximizes its minimum squared distance to
/// the labeled set plus earlier picks; ties go to the smaller id.
/// `features` is indexed by sample id (column = id).
std::vector<int> sample_maxmin(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> pool,
                               std::span<const int> labeled, int K);

/// The K ids with the smallest |score - 0.5|, ties by id.
std::vector<int> sample_uncertainty(const Scorer& scorer, const Eigen::Ref<const Eigen::MatrixXd>& features,
                                    std::span<const int> pool, std::span<const int> forbidden, int K);

}  // namespace vexad
