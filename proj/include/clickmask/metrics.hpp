#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "clickmask/imaging.hpp"

namespace clickmask {

struct MatchPolicy {
    double centroid_dist = 3.0;
    // false: Fa counts pixels of unmatched predicted components.
    // true: Fa counts every predicted pixel outside the ground truth.
    bool all_false_pixels = false;

    void validate() const;
};

/// |pred & gt| / |pred | gt|, 1 when both are empty.
double iou(const BinaryMask& pred, const BinaryMask& gt);

struct TargetMatch {
    std::size_t detected = 0;
    std::size_t gt_targets = 0;
    std::size_t false_pixels = 0;
    std::size_t total_pixels = 0;
};

/// Greedy one-to-one matching of 8-connected components by centroid distance,
/// closest pairs first.
TargetMatch match_targets(const BinaryMask& pred, const BinaryMask& gt, const MatchPolicy& policy);

struct MaskPair {
    BinaryMask pred;
    BinaryMask gt;
};

struct PdFa {
    double pd = 0.0;   // 1 when there are no ground-truth targets at all
    double fa = 0.0;   // per pixel
    TargetMatch totals;
};

PdFa pd_fa(const std::vector<MaskPair>& pairs, const MatchPolicy& policy);

struct ImageMetrics {
    std::string image_id;
    double iou = 0.0;
    std::size_t detected = 0;
    std::size_t gt_targets = 0;
    std::size_t false_pixels = 0;
    std::size_t total_pixels = 0;
};

struct MetricReport {
    double mean_iou = 0.0;
    double pd = 0.0;
    double fa = 0.0;
    std::vector<ImageMetrics> per_image;    // sorted by image_id
    std::vector<std::string> unmatched;     // files present in only one directory
    std::vector<std::string> errors;        // unreadable or mismatched pairs
};

/// Pairs files by stem (<id>.png or .pgm). Throws std::runtime_error when no
/// pair can be formed.
MetricReport evaluate_corpus(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                             const MatchPolicy& policy);

/// Builds the aggregate from already-computed rows.
MetricReport summarize(std::vector<ImageMetrics> rows);

/// Aligned plain-text table; Fa is multiplied by `fa_scale`.
std::string format_table(const MetricReport& report, double fa_scale = 1e6);

}  // namespace clickmask
