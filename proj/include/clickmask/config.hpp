#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "clickmask/annotate.hpp"
#include "clickmask/levelset.hpp"
#include "clickmask/metrics.hpp"

namespace clickmask {

struct Config {
    EvolutionParams params;
    int window = 128;
    MatchPolicy match;
    int workers = 1;
    std::uint64_t seed = 7;
    double fa_scale = 1e6;

    // Ablation switches.
    bool disable_ed = false;
    bool disable_signed_coeff = false;
    bool vanilla_init = false;
    int vanilla_half = 2;

    /// Throws std::invalid_argument.
    void validate() const;

    /// params with the ablation switches folded in.
    EvolutionParams effective_params() const;
    AnnotateOptions annotate_options() const;
};

/// Flat keys: EvolutionParams field names plus window, centroid_dist,
/// fa_all_false_pixels, workers, seed, fa_scale and the ablation switches.
/// Unknown keys and wrongly typed values throw std::invalid_argument.
void apply_json(Config& config, const nlohmann::json& doc);
void apply_params_json(EvolutionParams& params, const nlohmann::json& doc);

nlohmann::json to_json(const Config& config);
nlohmann::json to_json(const EvolutionParams& params);
nlohmann::json to_json(const BatchReport& report);
nlohmann::json to_json(const MetricReport& report, double fa_scale);

Config load_config(const std::filesystem::path& path);

}  // namespace clickmask
