#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "clickmask/click.hpp"
#include "clickmask/imaging.hpp"
#include "clickmask/levelset.hpp"

namespace clickmask {

enum class InitMode {
    threshold,      // seed every ROI pixel brighter than params.i
    click_square,   // seed a small square around the click only
};

struct AnnotateOptions {
    int window = 128;
    InitMode init = InitMode::threshold;
    int square_half = 2;   // click_square seeds (2*square_half+1)^2 pixels
    Backend backend = Backend::parallel;
};

struct AnnotationResult {
    BinaryMask mask;   // full image size, false outside roi
    RoiSpec roi;
    int iterations = 0;
    bool converged = false;
    bool oscillating = false;
    double c1 = 0.0;
    double c2 = 0.0;
    int target_components = 0;
};

/// window x window square centred on the click, shifted to fit inside the
/// image; spans the whole dimension when the image is smaller than window.
RoiSpec roi_for_click(const GrayImage& image, const Click& click, int window);

/// Throws std::out_of_range for clicks outside the image, std::invalid_argument
/// for bad parameters, and SeedError (with `roi` set) when seeding fails.
AnnotationResult annotate(const GrayImage& image, const Click& click, const EvolutionParams& params,
                          const AnnotateOptions& options = {});
AnnotationResult annotate(const GrayImage& image, const Click& click, const EvolutionParams& params,
                          int window);

struct BatchEntry {
    std::string image_id;
    int x = 0;
    int y = 0;
    bool ok = false;
    int iterations = 0;
    bool converged = false;
    bool oscillating = false;
    std::string error;
};

struct BatchReport {
    std::vector<BatchEntry> entries;   // one per click, input order
    std::vector<std::string> written;  // mask files, sorted
    double elapsed_ms = 0.0;

    std::size_t failures() const;
};

/// Looks for <dir>/<image_id>.png, then .pgm, then <dir>/<image_id> as given.
std::filesystem::path find_image(const std::filesystem::path& dir, const std::string& image_id);

/// One <image_id>.png per image with at least one successful click; clicks on
/// the same image are unioned. Per-click failures are recorded, not thrown.
/// Images are distributed over `workers` threads.
BatchReport batch_annotate(const std::vector<Click>& clicks, const std::filesystem::path& image_dir,
                           const std::filesystem::path& out_dir, const EvolutionParams& params,
                           const AnnotateOptions& options = {}, int workers = 1);

/// Raised for malformed click files; `line` is 1-based (0 when not applicable).
class ClickFileError : public std::runtime_error {
public:
    ClickFileError(const std::string& message, int line)
        : std::runtime_error(message), line(line)
    {
    }
    int line;
};

/// CSV with header `image_id,x,y`, or a JSON array of {image_id, x, y}.
std::vector<Click> parse_clicks(const std::string& text);
std::vector<Click> read_clicks(const std::filesystem::path& path);

}  // namespace clickmask
