#include "clickmask/ablation.hpp"

#include <atomic>
#include <cstdio>
#include <map>
#include <thread>

#include "clickmask/metrics.hpp"

namespace clickmask {

std::vector<std::pair<std::string, Config>> ablation_ladder(const Config& base)
{
    Config vanilla = base;
    vanilla.vanilla_init = true;
    vanilla.disable_signed_coeff = true;
    vanilla.disable_ed = true;

    Config init = vanilla;
    init.vanilla_init = false;

    Config sign = init;
    sign.disable_signed_coeff = false;

    Config full = sign;
    full.disable_ed = false;

    return {{"vanilla", vanilla},
            {"+initialization", init},
            {"+signed coefficient", sign},
            {"+ED term", full}};
}

AblationRow evaluate_variant(const std::string& name, const Config& config,
                             const std::vector<AblationScene>& scenes)
{
    config.validate();
    const EvolutionParams params = config.effective_params();
    const AnnotateOptions options = config.annotate_options();

    std::vector<double> ious(scenes.size());
    std::vector<std::size_t> failures(scenes.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t s; (s = next.fetch_add(1)) < scenes.size();) {
            const auto& scene = scenes[s];
            BinaryMask merged(scene.image.width(), scene.image.height());
            for (const auto& click : scene.clicks) {
                try {
                    const auto r = annotate(scene.image, click, params, options);
                    for (std::size_t k = 0; k < merged.size(); ++k)
                        merged[k] = merged[k] | r.mask[k];
                } catch (const SeedError&) {
                    ++failures[s];
                }
            }
            ious[s] = iou(merged, scene.gt);
        }
    };
    const int n = std::max(1, std::min<int>(config.workers, static_cast<int>(scenes.size())));
    {
        std::vector<std::jthread> pool;
        for (int t = 1; t < n; ++t)
            pool.emplace_back(work);
        work();
    }

    AblationRow row{name, 0.0, scenes.size(), 0};
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        row.mean_iou += ious[s];
        row.failed_clicks += failures[s];
    }
    if (!scenes.empty())
        row.mean_iou /= static_cast<double>(scenes.size());
    return row;
}

std::vector<AblationRow> run_ablation(const Config& base, const std::vector<AblationScene>& scenes)
{
    std::vector<AblationRow> rows;
    for (const auto& [name, cfg] : ablation_ladder(base))
        rows.push_back(evaluate_variant(name, cfg, scenes));
    return rows;
}

std::vector<AblationScene> load_scenes(const std::filesystem::path& corpus_dir)
{
    const auto clicks = read_clicks(corpus_dir / "clicks.csv");
    std::map<std::string, std::vector<Click>> by_image;
    for (const auto& c : clicks)
        by_image[c.image_id].push_back(c);

    std::vector<AblationScene> scenes;
    for (auto& [id, cs] : by_image) {
        const auto image_path = find_image(corpus_dir / "images", id);
        const auto gt_path = find_image(corpus_dir / "gt", id);
        if (image_path.empty() || gt_path.empty())
            throw IoError("corpus is missing image or ground truth for '" + id + "'");
        AblationScene s{id, load_image(image_path), load_mask(gt_path), std::move(cs)};
        require_same_shape(s.image, s.gt, id.c_str());
        scenes.push_back(std::move(s));
    }
    if (scenes.empty())
        throw IoError("corpus " + corpus_dir.string() + " has no clicks");
    return scenes;
}

std::string format_ablation(const std::vector<AblationRow>& rows)
{
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-22s  %8s  %6s  %13s\n", "variant", "mean IoU", "images", "failed clicks");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-22s  %8.4f  %6zu  %13zu\n", r.variant.c_str(), r.mean_iou, r.images,
                      r.failed_clicks);
        out += buf;
    }
    return out;
}

}  // namespace clickmask
