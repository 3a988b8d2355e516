#include "clickmask/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

namespace clickmask {

void MatchPolicy::validate() const
{
    if (!(centroid_dist > 0.0))
        throw std::invalid_argument("centroid_dist must be > 0");
}

double iou(const BinaryMask& pred, const BinaryMask& gt)
{
    require_same_shape(pred, gt, "iou");
    std::size_t inter = 0, uni = 0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const bool a = pred[k] != 0, b = gt[k] != 0;
        inter += a && b;
        uni += a || b;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

TargetMatch match_targets(const BinaryMask& pred, const BinaryMask& gt, const MatchPolicy& policy)
{
    require_same_shape(pred, gt, "match_targets");
    policy.validate();
    const ComponentSet p = connected_components(pred, Connectivity::eight);
    const ComponentSet g = connected_components(gt, Connectivity::eight);

    std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
    for (std::size_t a = 0; a < g.components.size(); ++a)
        for (std::size_t b = 0; b < p.components.size(); ++b) {
            const double d = std::hypot(g.components[a].centroid_row - p.components[b].centroid_row,
                                        g.components[a].centroid_col - p.components[b].centroid_col);
            if (d <= policy.centroid_dist)
                candidates.emplace_back(d, a, b);
        }
    std::sort(candidates.begin(), candidates.end());

    std::vector<bool> gt_used(g.components.size()), pred_used(p.components.size());
    TargetMatch m;
    m.gt_targets = g.components.size();
    m.total_pixels = pred.size();
    for (const auto& [d, a, b] : candidates) {
        if (gt_used[a] || pred_used[b])
            continue;
        gt_used[a] = pred_used[b] = true;
        ++m.detected;
    }
    if (policy.all_false_pixels) {
        for (std::size_t k = 0; k < pred.size(); ++k)
            m.false_pixels += pred[k] && !gt[k];
    } else {
        for (std::size_t b = 0; b < p.components.size(); ++b)
            if (!pred_used[b])
                m.false_pixels += static_cast<std::size_t>(p.components[b].area);
    }
    return m;
}

namespace {

PdFa finish(const TargetMatch& t)
{
    PdFa out;
    out.totals = t;
    out.pd = t.gt_targets == 0 ? 1.0 : static_cast<double>(t.detected) / static_cast<double>(t.gt_targets);
    out.fa = t.total_pixels == 0 ? 0.0
                                 : static_cast<double>(t.false_pixels) / static_cast<double>(t.total_pixels);
    return out;
}

void accumulate(TargetMatch& into, const TargetMatch& m)
{
    into.detected += m.detected;
    into.gt_targets += m.gt_targets;
    into.false_pixels += m.false_pixels;
    into.total_pixels += m.total_pixels;
}

std::map<std::string, std::filesystem::path> mask_files(const std::filesystem::path& dir)
{
    std::map<std::string, std::filesystem::path> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (!entry.is_regular_file())
            continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".pgm")
            out.emplace(entry.path().stem().string(), entry.path());
    }
    if (ec)
        throw IoError("cannot list " + dir.string() + ": " + ec.message());
    return out;
}

}  // namespace

PdFa pd_fa(const std::vector<MaskPair>& pairs, const MatchPolicy& policy)
{
    TargetMatch total;
    for (const auto& pr : pairs)
        accumulate(total, match_targets(pr.pred, pr.gt, policy));
    return finish(total);
}

MetricReport summarize(std::vector<ImageMetrics> rows)
{
    MetricReport r;
    std::sort(rows.begin(), rows.end(),
              [](const ImageMetrics& a, const ImageMetrics& b) { return a.image_id < b.image_id; });
    TargetMatch total;
    double sum = 0.0;
    for (const auto& row : rows) {
        sum += row.iou;
        accumulate(total, {row.detected, row.gt_targets, row.false_pixels, row.total_pixels});
    }
    const PdFa pf = finish(total);
    r.mean_iou = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
    r.pd = pf.pd;
    r.fa = pf.fa;
    r.per_image = std::move(rows);
    return r;
}

MetricReport evaluate_corpus(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                             const MatchPolicy& policy)
{
    policy.validate();
    const auto preds = mask_files(pred_dir);
    const auto gts = mask_files(gt_dir);

    std::vector<ImageMetrics> rows;
    std::vector<std::string> unmatched, errors;
    for (const auto& [id, gpath] : gts) {
        const auto it = preds.find(id);
        if (it == preds.end()) {
            unmatched.push_back(gpath.string());
            continue;
        }
        try {
            const BinaryMask pred = load_mask(it->second);
            const BinaryMask gt = load_mask(gpath);
            const TargetMatch m = match_targets(pred, gt, policy);
            rows.push_back({id, iou(pred, gt), m.detected, m.gt_targets, m.false_pixels, m.total_pixels});
        } catch (const std::exception& e) {
            errors.push_back(id + ": " + e.what());
        }
    }
    for (const auto& [id, ppath] : preds)
        if (!gts.count(id))
            unmatched.push_back(ppath.string());
    if (rows.empty())
        throw std::runtime_error("no matching mask files between " + pred_dir.string() + " and " +
                                 gt_dir.string());

    MetricReport r = summarize(std::move(rows));
    std::sort(unmatched.begin(), unmatched.end());
    r.unmatched = std::move(unmatched);
    r.errors = std::move(errors);
    return r;
}

std::string format_table(const MetricReport& report, double fa_scale)
{
    std::size_t idw = 8;
    for (const auto& row : report.per_image)
        idw = std::max(idw, row.image_id.size());
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %9s  %12s\n", static_cast<int>(idw), "image_id", "IoU",
                  "detected", "gt", "false_px");
    out += buf;
    for (const auto& row : report.per_image) {
        std::snprintf(buf, sizeof buf, "%-*s  %8.4f  %8zu  %9zu  %12zu\n", static_cast<int>(idw),
                      row.image_id.c_str(), row.iou, row.detected, row.gt_targets, row.false_pixels);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "\nimages   %zu\nmean IoU %.4f\nPd       %.4f\nFa       %.4f (x%g)\n",
                  report.per_image.size(), report.mean_iou, report.pd, report.fa * fa_scale, 1.0 / fa_scale);
    out += buf;
    return out;
}

}  // namespace clickmask
