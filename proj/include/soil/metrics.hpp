#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "soil/dataset.hpp"
#include "soil/geometry.hpp"

namespace soil::eval {

// Count of differing components of two class vectors, in {0,1,2}.
int hamming_error(data::SoilingClassVector gt, data::SoilingClassVector pred);

// Arithmetic mean of hamming_error over the set; throws DataError when empty.
double mean_hamming(const std::vector<data::SoilingClassVector>& preds,
                    const std::vector<data::SoilingClassVector>& gts);

// Exact integer ratio that refuses to silently collapse undefined values.
struct Ratio {
    int64_t num = 0;
    int64_t den = 0;

    bool defined() const { return den > 0; }
    double value() const;  // throws DataError when undefined
    bool operator==(const Ratio&) const = default;
};

// 4x4 counts indexed [ground truth category][predicted category] in
// Clean/Transparent/Opaque/Both order.
struct ConfusionMatrix4 {
    std::array<std::array<int64_t, 4>, 4> raw{};

    int64_t total() const;
    std::array<bool, 4> row_support() const;
    // rows sum to 1; zero-support rows are all zeros
    std::array<std::array<double, 4>, 4> normalized() const;
    bool operator==(const ConfusionMatrix4&) const = default;
};

ConfusionMatrix4 confusion_4way(const std::vector<data::SoilingClassVector>& preds,
                                const std::vector<data::SoilingClassVector>& gts);

enum class PositiveDef { AnySoiling, Opaque, Transparent };

struct PRCounts {
    int64_t tp = 0, fp = 0, fn = 0, tn = 0;

    Ratio precision() const { return {tp, tp + fp}; }
    Ratio recall() const { return {tp, tp + fn}; }
    bool operator==(const PRCounts&) const = default;
};

struct PRReport {
    // one row per camera in enum order, plus the pooled row
    std::array<PRCounts, 4> per_camera{};
    PRCounts overall;
    bool operator==(const PRReport&) const = default;
};

// Tile-level precision/recall over all tiles of all frames, grouped by the
// frame's camera. AnySoiling treats a tile as positive when either class
// bit is set; the per-class modes restrict to one bit.
PRReport tile_pr(const std::vector<geom::TileGrid>& preds,
                 const std::vector<geom::TileGrid>& gts,
                 const std::vector<data::Camera>& cameras,
                 PositiveDef positive = PositiveDef::AnySoiling);

struct RateReport {
    int64_t tp = 0, fp = 0, tn = 0, fn = 0;

    Ratio tpr() const { return {tp, tp + fn}; }
    Ratio fpr() const { return {fp, fp + tn}; }
    bool operator==(const RateReport&) const = default;
};

// Image-level rates; positive = any soiling present ([0,0] is negative).
RateReport image_tpr_fpr(const std::vector<data::SoilingClassVector>& preds,
                         const std::vector<data::SoilingClassVector>& gts);

// Per-bit agreement across all tiles; used by overfit checks.
double tile_bit_accuracy(const std::vector<geom::TileGrid>& preds,
                         const std::vector<geom::TileGrid>& gts);

// Mean per-tile hamming error (0..2) across all tiles.
double tile_mean_hamming(const std::vector<geom::TileGrid>& preds,
                         const std::vector<geom::TileGrid>& gts);

}  // namespace soil::eval
