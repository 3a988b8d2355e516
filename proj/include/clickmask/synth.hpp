#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "clickmask/click.hpp"
#include "clickmask/imaging.hpp"

namespace clickmask::synth {

inline constexpr double max_target_radius = 7.0;

enum class Profile { disk, gaussian };

struct TargetSpec {
    double center_row = 0.0;
    double center_col = 0.0;
    double radius = 3.0;   // disk radius, or half-maximum radius for gaussian
    double peak = 0.9;
    Profile profile = Profile::disk;
};

struct PhantomSpec {
    int width = 128;
    int height = 128;
    std::vector<TargetSpec> targets;
    double background = 0.2;
    double clutter = 0.0;         // max absolute amplitude of the smooth field
    int clutter_modes = 4;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument.
    void validate() const;
};

struct Phantom {
    GrayImage image;
    BinaryMask gt;
    std::vector<Click> suggested_clicks;   // image_id left empty
};

/// gt is computed from the noise-free profile: distance <= radius for both
/// profiles (for gaussian this is the half-gap level set).
Phantom generate(const PhantomSpec& spec);

struct CorpusSpec {
    int n = 48;
    std::uint64_t seed = 7;
    int width = 128;
    int height = 128;
    double background = 0.1;
    double clutter = 0.04;
    int clutter_modes = 4;
    double noise_sigma = 0.02;
    int min_targets = 1;
    int max_targets = 1;
    double min_radius = 2.0;
    double max_radius = 5.0;
    double min_peak = 0.6;
    double max_peak = 1.0;
    Profile profile = Profile::disk;

    void validate() const;
};

struct CorpusEntry {
    std::string image_id;
    Phantom phantom;
};

/// Scene k is drawn from its own generator seeded from (seed, k), so entries
/// do not depend on how many scenes precede them.
std::vector<CorpusEntry> make_corpus(const CorpusSpec& spec);

/// Writes images/<id>.png, gt/<id>.png and clicks.csv under `out_dir`.
std::vector<CorpusEntry> generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir);

}  // namespace clickmask::synth
