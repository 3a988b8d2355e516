#include "clickmask/annotate.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace clickmask {

RoiSpec roi_for_click(const GrayImage& image, const Click& click, int window)
{
    if (window < 8)
        throw std::invalid_argument("window must be >= 8");
    auto fit = [window](int centre, int extent, int& start, int& size) {
        size = std::min(window, extent);
        start = std::clamp(centre - window / 2, 0, extent - size);
    };
    RoiSpec roi;
    fit(click.x, image.width(), roi.left, roi.width);
    fit(click.y, image.height(), roi.top, roi.height);
    return roi;
}

namespace {

LevelSetField square_seed(const RoiSpec& roi, const Click& click, const EvolutionParams& params, int half)
{
    LevelSetField phi(roi.width, roi.height, params.c0);
    const int cr = click.y - roi.top, cc = click.x - roi.left;
    for (int r = std::max(0, cr - half); r <= std::min(roi.height - 1, cr + half); ++r)
        for (int c = std::max(0, cc - half); c <= std::min(roi.width - 1, cc + half); ++c)
            phi(r, c) = -params.c0;
    return phi;
}

}  // namespace

AnnotationResult annotate(const GrayImage& image, const Click& click, const EvolutionParams& params,
                          const AnnotateOptions& options)
{
    if (!image.contains(click.y, click.x))
        throw std::out_of_range("click (" + std::to_string(click.x) + "," + std::to_string(click.y) +
                                ") outside " + std::to_string(image.width()) + "x" +
                                std::to_string(image.height()) + " image");
    params.validate();
    const RoiSpec roi = roi_for_click(image, click, options.window);
    const GrayImage crop = image.crop(roi.left, roi.top, roi.width, roi.height);

    EvolutionResult ev;
    try {
        LevelSetField phi = options.init == InitMode::threshold
                                ? init_lsf(crop, params)
                                : square_seed(roi, click, params, options.square_half);
        ev = evolve_from(crop, std::move(phi), params, options.backend);
    } catch (SeedError& e) {
        e.roi = roi;
        throw;
    }

    AnnotationResult out;
    out.mask = BinaryMask(image.width(), image.height());
    const BinaryMask local = extract_mask(ev.phi);
    for (int r = 0; r < roi.height; ++r)
        for (int c = 0; c < roi.width; ++c)
            if (local.test(r, c))
                out.mask.set(roi.top + r, roi.left + c);
    out.roi = roi;
    out.iterations = ev.iterations;
    out.converged = ev.converged;
    out.oscillating = ev.oscillating;
    out.c1 = ev.stats.c1;
    out.c2 = ev.stats.c2;
    out.target_components = static_cast<int>(connected_components(out.mask).components.size());
    return out;
}

AnnotationResult annotate(const GrayImage& image, const Click& click, const EvolutionParams& params,
                          int window)
{
    AnnotateOptions o;
    o.window = window;
    return annotate(image, click, params, o);
}

std::size_t BatchReport::failures() const
{
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const BatchEntry& e) { return !e.ok; }));
}

std::filesystem::path find_image(const std::filesystem::path& dir, const std::string& image_id)
{
    for (const char* ext : {".png", ".pgm"}) {
        auto p = dir / (image_id + ext);
        if (std::filesystem::is_regular_file(p))
            return p;
    }
    auto p = dir / image_id;
    if (std::filesystem::is_regular_file(p))
        return p;
    return {};
}

BatchReport batch_annotate(const std::vector<Click>& clicks, const std::filesystem::path& image_dir,
                           const std::filesystem::path& out_dir, const EvolutionParams& params,
                           const AnnotateOptions& options, int workers)
{
    const auto t0 = std::chrono::steady_clock::now();
    BatchReport report;
    report.entries.resize(clicks.size());

    // Group click indices per image, in order of first appearance.
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < clicks.size(); ++k) {
        auto [it, fresh] = groups.try_emplace(clicks[k].image_id);
        if (fresh)
            order.push_back(clicks[k].image_id);
        it->second.push_back(k);
        report.entries[k].image_id = clicks[k].image_id;
        report.entries[k].x = clicks[k].x;
        report.entries[k].y = clicks[k].y;
    }
    if (!order.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec)
            throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    }

    std::vector<std::string> written(order.size());
    auto work = [&](std::size_t g) {
        const std::string& id = order[g];
        const auto& idx = groups.at(id);
        auto fail_all = [&](const std::string& why) {
            for (std::size_t k : idx)
                report.entries[k].error = why;
        };
        const auto path = find_image(image_dir, id);
        if (path.empty())
            return fail_all("image not found: " + id);
        GrayImage image;
        try {
            image = load_image(path);
        } catch (const std::exception& e) {
            return fail_all(e.what());
        }
        BinaryMask merged(image.width(), image.height());
        bool any = false;
        for (std::size_t k : idx) {
            BatchEntry& entry = report.entries[k];
            try {
                const AnnotationResult r = annotate(image, clicks[k], params, options);
                for (std::size_t p = 0; p < merged.size(); ++p)
                    merged[p] = merged[p] | r.mask[p];
                entry.ok = true;
                entry.iterations = r.iterations;
                entry.converged = r.converged;
                entry.oscillating = r.oscillating;
                any = true;
            } catch (const std::exception& e) {
                entry.error = e.what();
            }
        }
        if (!any)
            return;
        const auto out = out_dir / (id + ".png");
        try {
            save_mask(merged, out);
            written[g] = out.string();
        } catch (const std::exception& e) {
            for (std::size_t k : idx) {
                report.entries[k].ok = false;
                report.entries[k].error = e.what();
            }
        }
    };

    const int n = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(order.size(), 1)));
    if (n == 1) {
        for (std::size_t g = 0; g < order.size(); ++g)
            work(g);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (int t = 0; t < n; ++t)
            pool.emplace_back([&] {
                for (std::size_t g; (g = next.fetch_add(1)) < order.size();)
                    work(g);
            });
    }

    for (auto& w : written)
        if (!w.empty())
            report.written.push_back(std::move(w));
    std::sort(report.written.begin(), report.written.end());
    report.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// --- click files ------------------------------------------------------------

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

int parse_int(const std::string& field, const char* name, int line)
{
    int v = 0;
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size())
        throw ClickFileError("line " + std::to_string(line) + ": " + name + " is not an integer: '" +
                                 field + "'",
                             line);
    return v;
}

std::vector<Click> parse_json_clicks(const std::string& text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ClickFileError(std::string("invalid JSON: ") + e.what(), 0);
    }
    if (!doc.is_array())
        throw ClickFileError("JSON click file must be an array", 0);
    std::vector<Click> out;
    for (std::size_t k = 0; k < doc.size(); ++k) {
        const auto& item = doc[k];
        const int entry = static_cast<int>(k) + 1;
        if (!item.is_object() || !item.contains("image_id") || !item.contains("x") || !item.contains("y") ||
            !item["image_id"].is_string() || !item["x"].is_number_integer() || !item["y"].is_number_integer())
            throw ClickFileError("entry " + std::to_string(entry) +
                                     ": expected {image_id: string, x: int, y: int}",
                                 entry);
        out.push_back({item["image_id"].get<std::string>(), item["x"].get<int>(), item["y"].get<int>()});
    }
    return out;
}

}  // namespace

std::vector<Click> parse_clicks(const std::string& text)
{
    const std::string head = trim(text.substr(0, std::min<std::size_t>(text.size(), 64)));
    if (!head.empty() && head.front() == '[')
        return parse_json_clicks(text);

    std::istringstream in(text);
    std::string raw;
    std::vector<Click> out;
    int line = 0;
    bool header = false;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty())
            continue;
        std::vector<std::string> fields;
        std::string cur;
        std::istringstream row(s);
        while (std::getline(row, cur, ','))
            fields.push_back(trim(cur));
        if (s.back() == ',')
            fields.emplace_back();
        if (!header) {
            if (fields != std::vector<std::string>{"image_id", "x", "y"})
                throw ClickFileError("line " + std::to_string(line) + ": expected header 'image_id,x,y'", line);
            header = true;
            continue;
        }
        if (fields.size() != 3)
            throw ClickFileError("line " + std::to_string(line) + ": expected 3 fields, got " +
                                     std::to_string(fields.size()),
                                 line);
        if (fields[0].empty())
            throw ClickFileError("line " + std::to_string(line) + ": empty image_id", line);
        out.push_back({fields[0], parse_int(fields[1], "x", line), parse_int(fields[2], "y", line)});
    }
    if (!header)
        throw ClickFileError("missing header 'image_id,x,y'", 1);
    return out;
}

std::vector<Click> read_clicks(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    return parse_clicks(std::string(bytes.begin(), bytes.end()));
}

}  // namespace clickmask
