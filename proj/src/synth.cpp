#include "clickmask/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace clickmask::synth {

namespace {

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw std::invalid_argument(message);
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

BinaryMask support(const TargetSpec& t, int width, int height)
{
    BinaryMask m(width, height);
    const int r0 = std::max(0, static_cast<int>(std::floor(t.center_row - t.radius)));
    const int r1 = std::min(height - 1, static_cast<int>(std::ceil(t.center_row + t.radius)));
    const int c0 = std::max(0, static_cast<int>(std::floor(t.center_col - t.radius)));
    const int c1 = std::min(width - 1, static_cast<int>(std::ceil(t.center_col + t.radius)));
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) {
            const double dr = r - t.center_row, dc = c - t.center_col;
            if (dr * dr + dc * dc <= t.radius * t.radius)
                m.set(r, c);
        }
    return m;
}

// True when the supports share a pixel or touch 8-connectedly.
bool touching(const BinaryMask& a, const BinaryMask& b)
{
    for (int r = 0; r < a.height(); ++r)
        for (int c = 0; c < a.width(); ++c) {
            if (!a.test(r, c))
                continue;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc)
                    if (b.contains(r + dr, c + dc) && b.test(r + dr, c + dc))
                        return true;
        }
    return false;
}

}  // namespace

void PhantomSpec::validate() const
{
    require(width >= 1 && height >= 1, "phantom size must be at least 1x1");
    require(background >= 0.0 && background < 1.0, "background must lie in [0,1)");
    require(clutter >= 0.0, "clutter amplitude must be >= 0");
    require(clutter_modes >= 0, "clutter_modes must be >= 0");
    require(noise_sigma >= 0.0, "noise sigma must be >= 0");
    for (const auto& t : targets) {
        require(t.radius > 0.0, "target radius must be > 0");
        require(t.radius <= max_target_radius,
                "target radius " + fmt(t.radius) +
                    " exceeds 7: small targets must fit inside 15x15 pixels");
        require(t.peak > 0.0 && t.peak <= 1.0, "target peak must lie in (0,1]");
        require(t.peak > background + 3.0 * noise_sigma,
                "target peak must exceed background + 3*noise_sigma");
        require(t.center_row - t.radius >= 0.0 && t.center_row + t.radius <= height - 1.0 &&
                    t.center_col - t.radius >= 0.0 && t.center_col + t.radius <= width - 1.0,
                "target does not fit inside the image");
    }
}

Phantom generate(const PhantomSpec& spec)
{
    spec.validate();
    const int w = spec.width, h = spec.height;

    std::vector<BinaryMask> supports;
    for (const auto& t : spec.targets) {
        BinaryMask s = support(t, w, h);
        for (const auto& other : supports)
            if (touching(s, other))
                throw std::invalid_argument("overlapping targets");
        supports.push_back(std::move(s));
    }

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    struct Mode {
        double fx, fy, phase;
    };
    std::vector<Mode> modes;
    for (int k = 0; k < spec.clutter_modes; ++k) {
        // Up to 2 cycles across the image in each direction.
        const double fx = std::floor(unit(rng) * 5.0) * 0.5;
        const double fy = std::floor(unit(rng) * 5.0) * 0.5;
        modes.push_back({fx, fy, unit(rng) * 2.0 * std::numbers::pi});
    }
    const double mode_amp = modes.empty() ? 0.0 : spec.clutter / static_cast<double>(modes.size());

    std::vector<double> values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double v = spec.background;
            for (const auto& m : modes)
                v += mode_amp * std::cos(2.0 * std::numbers::pi * (m.fx * c / w + m.fy * r / h) + m.phase);
            for (std::size_t k = 0; k < spec.targets.size(); ++k) {
                const auto& t = spec.targets[k];
                const double dr = r - t.center_row, dc = c - t.center_col;
                const double d2 = dr * dr + dc * dc;
                if (t.profile == Profile::disk) {
                    if (supports[k].test(r, c))
                        v += t.peak - spec.background;
                } else {
                    const double s2 = t.radius * t.radius / (2.0 * std::log(2.0));
                    v += (t.peak - spec.background) * std::exp(-d2 / (2.0 * s2));
                }
            }
            if (spec.noise_sigma > 0.0)
                v += spec.noise_sigma * noise(rng);
            values[static_cast<std::size_t>(r) * w + c] = std::clamp(v, 0.0, 1.0);
        }
    }

    Phantom out{GrayImage(w, h, std::move(values)), BinaryMask(w, h), {}};
    for (const auto& s : supports)
        for (std::size_t k = 0; k < s.size(); ++k)
            if (s[k])
                out.gt[k] = 1;
    for (const auto& t : spec.targets)
        out.suggested_clicks.push_back(
            {"", static_cast<int>(std::lround(t.center_col)), static_cast<int>(std::lround(t.center_row))});
    return out;
}

void CorpusSpec::validate() const
{
    require(n >= 1, "corpus size must be >= 1");
    require(min_targets >= 0 && max_targets >= min_targets, "invalid target count range");
    require(min_radius > 0.0 && max_radius >= min_radius, "invalid radius range");
    require(max_radius <= max_target_radius,
            "target radius " + fmt(max_radius) + " exceeds 7: small targets must fit inside 15x15 pixels");
    require(min_peak > 0.0 && max_peak <= 1.0 && max_peak >= min_peak, "invalid peak range");
    require(min_peak > background + 3.0 * noise_sigma,
            "min_peak must exceed background + 3*noise_sigma");
    require(width > 2.0 * max_radius + 2.0 && height > 2.0 * max_radius + 2.0,
            "image too small for largest target");
}

std::vector<CorpusEntry> make_corpus(const CorpusSpec& spec)
{
    spec.validate();
    std::vector<CorpusEntry> out;
    out.reserve(static_cast<std::size_t>(spec.n));
    for (int k = 0; k < spec.n; ++k) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<int> count(spec.min_targets, spec.max_targets);
        std::uniform_int_distribution<int> radius(static_cast<int>(std::ceil(spec.min_radius)),
                                                  static_cast<int>(std::floor(spec.max_radius)));
        std::uniform_real_distribution<double> peak(spec.min_peak, spec.max_peak);

        PhantomSpec ps;
        ps.width = spec.width;
        ps.height = spec.height;
        ps.background = spec.background;
        ps.clutter = spec.clutter;
        ps.clutter_modes = spec.clutter_modes;
        ps.noise_sigma = spec.noise_sigma;
        ps.seed = rng();

        const int wanted = count(rng);
        for (int attempt = 0; static_cast<int>(ps.targets.size()) < wanted && attempt < 1000; ++attempt) {
            TargetSpec t;
            t.radius = radius(rng);
            t.peak = peak(rng);
            t.profile = spec.profile;
            const int margin = static_cast<int>(t.radius) + 1;
            std::uniform_int_distribution<int> row(margin, spec.height - 1 - margin);
            std::uniform_int_distribution<int> col(margin, spec.width - 1 - margin);
            t.center_row = row(rng);
            t.center_col = col(rng);
            ps.targets.push_back(t);
            bool clash = false;
            for (std::size_t a = 0; a + 1 < ps.targets.size() && !clash; ++a) {
                const auto& o = ps.targets[a];
                const double d = std::hypot(o.center_row - t.center_row, o.center_col - t.center_col);
                clash = d <= o.radius + t.radius + 2.0;
            }
            if (clash)
                ps.targets.pop_back();
        }

        char id[32];
        std::snprintf(id, sizeof id, "scene_%03d", k);
        CorpusEntry e{id, generate(ps)};
        for (auto& c : e.phantom.suggested_clicks)
            c.image_id = e.image_id;
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<CorpusEntry> generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir)
{
    auto corpus = make_corpus(spec);
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    fs::create_directories(out_dir / "gt", ec);
    if (ec)
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    std::ofstream csv(out_dir / "clicks.csv", std::ios::binary);
    if (!csv)
        throw IoError("cannot write " + (out_dir / "clicks.csv").string());
    csv << "image_id,x,y\n";
    for (const auto& e : corpus) {
        save_image(e.phantom.image, out_dir / "images" / (e.image_id + ".png"));
        save_mask(e.phantom.gt, out_dir / "gt" / (e.image_id + ".png"));
        for (const auto& c : e.phantom.suggested_clicks)
            csv << c.image_id << ',' << c.x << ',' << c.y << '\n';
    }
    if (!csv.flush())
        throw IoError("cannot write " + (out_dir / "clicks.csv").string());
    return corpus;
}

}  // namespace clickmask::synth
