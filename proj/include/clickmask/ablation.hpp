#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "clickmask/click.hpp"
#include "clickmask/config.hpp"

namespace clickmask {

struct AblationScene {
    std::string image_id;
    GrayImage image;
    BinaryMask gt;
    std::vector<Click> clicks;
};

struct AblationRow {
    std::string variant;
    double mean_iou = 0.0;
    std::size_t images = 0;
    std::size_t failed_clicks = 0;
};

/// The four ladder configurations in table order: click-square seeding with a
/// fixed-sign area force and no ED term, then threshold seeding, then the
/// signed coefficient, then the ED term.
std::vector<std::pair<std::string, Config>> ablation_ladder(const Config& base);

/// A click that fails to seed contributes an empty mask.
AblationRow evaluate_variant(const std::string& name, const Config& config,
                             const std::vector<AblationScene>& scenes);

std::vector<AblationRow> run_ablation(const Config& base, const std::vector<AblationScene>& scenes);

/// Reads images/, gt/ and clicks.csv as written by the synth corpus generator.
std::vector<AblationScene> load_scenes(const std::filesystem::path& corpus_dir);

std::string format_ablation(const std::vector<AblationRow>& rows);

}  // namespace clickmask
