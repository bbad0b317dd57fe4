#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vexad {

inline constexpr int kPatchSide = 30;
inline constexpr int kPixelBlocks = 4;  // 4x4 block grid -> 16 features
inline constexpr int kPixelFeatureDim = kPixelBlocks * kPixelBlocks;

using PixelGrid = std::array<std::uint8_t, kPatchSide * kPatchSide>;  // row-major

struct Sample {
    int id = 0;
    std::vector<double> features;
    int label = -1;  // +1 change, -1 no change
    std::optional<PixelGrid> pixels_before;
    std::optional<PixelGrid> pixels_after;

    bool operator==(const Sample&) const = default;
};

struct Dataset {
    std::string name;
    std::vector<Sample> samples;
    int dim = 0;

    std::size_t size() const { return samples.size(); }
    int positives() const;
    bool operator==(const Dataset&) const = default;
};

struct Split {
    std::vector<int> train_ids;  // sorted
    std::vector<int> eval_ids;   // sorted

    bool operator==(const Split&) const = default;
};

/// Synthetic change-detection data with a rare, localized change class.
///
/// Negatives come from several irrelevant-change modes, positives from one
/// compact region away from all of them. With dim == 16 every sample also
/// carries a 30x30 before/after pixel pair and its features are the 4x4 block
/// means of |after - before|.
Dataset generate_synthetic(int n, int dim, double pos_fraction, std::uint64_t seed);

/// Stratified half split: sizes and positive counts each differ by at most 1.
Split split_half(const Dataset& ds, std::uint64_t seed);

/// Writes manifest.json, features.csv, labels.csv and (if any sample has
/// pixels) pixels/{id}_a.pgm, pixels/{id}_b.pgm into `dir`.
void save(const Dataset& ds, const std::filesystem::path& dir);

/// Accepts either the dataset directory or the manifest file itself.
Dataset load(const std::filesystem::path& path);

/// 4x4 block means of |after - before|. Rows/cols are partitioned at
/// floor(b * 30 / 4), i.e. bands of 7, 8, 7, 8 pixels.
std::vector<double> pixel_block_features(const PixelGrid& before, const PixelGrid& after);

/// Column i = features of sample ids[i]; shape dim x ids.size().
Eigen::MatrixXd feature_matrix(const Dataset& ds, std::span<const int> ids);

std::vector<int> labels_of(const Dataset& ds, std::span<const int> ids);

void write_pgm(const std::filesystem::path& path, const PixelGrid& grid);
PixelGrid read_pgm(const std::filesystem::path& path);

}  // namespace vexad
