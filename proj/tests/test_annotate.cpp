#include <doctest.h>

#include "clickmask/annotate.hpp"
#include "clickmask/metrics.hpp"
#include "clickmask/synth.hpp"
#include "scratch_dir.hpp"

using namespace clickmask;

namespace {

synth::Phantom phantom(int size, std::vector<synth::TargetSpec> targets, std::uint64_t seed = 2)
{
    synth::PhantomSpec spec;
    spec.width = spec.height = size;
    spec.background = 0.1;
    spec.noise_sigma = 0.02;
    spec.clutter = 0.03;
    spec.seed = seed;
    spec.targets = std::move(targets);
    return synth::generate(spec);
}

synth::TargetSpec disk(double row, double col, double radius = 4, double peak = 0.8)
{
    return {row, col, radius, peak, synth::Profile::disk};
}

}  // namespace

TEST_CASE("roi_for_click examples")
{
    const GrayImage big(256, 256);
    CHECK(roi_for_click(big, {"", 128, 128}, 128) == RoiSpec{64, 64, 128, 128});
    CHECK(roi_for_click(big, {"", 0, 0}, 128) == RoiSpec{0, 0, 128, 128});
    CHECK(roi_for_click(big, {"", 255, 3}, 128) == RoiSpec{128, 0, 128, 128});
    CHECK(roi_for_click(GrayImage(100, 100), {"", 50, 50}, 128) == RoiSpec{0, 0, 100, 100});
    CHECK(roi_for_click(GrayImage(300, 90), {"", 10, 10}, 128) == RoiSpec{0, 0, 128, 90});
    CHECK_THROWS_AS(roi_for_click(big, {"", 1, 1}, 7), std::invalid_argument);
}

TEST_CASE("annotate segments a disk from a center click")
{
    const synth::Phantom p = phantom(256, {disk(128, 128)});
    const AnnotationResult r = annotate(p.image, {"x", 128, 128}, EvolutionParams{});
    CHECK((r.converged || r.oscillating));
    CHECK(iou(r.mask, p.gt) >= 0.8);
    CHECK(r.target_components == 1);
    CHECK(r.roi == RoiSpec{64, 64, 128, 128});
    CHECK(r.c1 > r.c2);
}

TEST_CASE("offset clicks give the same mask")
{
    const synth::Phantom p = phantom(256, {disk(128, 128)});
    const EvolutionParams params;
    const BinaryMask centre = annotate(p.image, {"x", 128, 128}, params).mask;
    const BinaryMask near = annotate(p.image, {"x", 138, 128}, params).mask;
    const BinaryMask far = annotate(p.image, {"x", 178, 128}, params).mask;
    CHECK(iou(centre, near) >= 0.95);
    CHECK(iou(centre, far) >= 0.95);
}

TEST_CASE("annotate never writes outside the roi and is idempotent")
{
    const synth::Phantom p = phantom(200, {disk(100, 100), disk(20, 20, 3)});
    const AnnotationResult a = annotate(p.image, {"x", 100, 100}, EvolutionParams{}, 64);
    const AnnotationResult b = annotate(p.image, {"x", 100, 100}, EvolutionParams{}, 64);
    CHECK(a.mask == b.mask);
    for (int r = 0; r < 200; ++r)
        for (int c = 0; c < 200; ++c)
            if (a.mask.test(r, c)) {
                CHECK(r >= a.roi.top);
                CHECK(r < a.roi.top + a.roi.height);
                CHECK(c >= a.roi.left);
                CHECK(c < a.roi.left + a.roi.width);
            }
    CHECK(!a.mask.test(20, 20));
}

TEST_CASE("annotate error paths")
{
    const GrayImage dark(64, 64, 0.05);
    try {
        annotate(dark, {"d", 30, 30}, EvolutionParams{}, 32);
        FAIL("expected NoSeedPixels");
    } catch (const NoSeedPixels& e) {
        REQUIRE(e.roi.has_value());
        CHECK(*e.roi == RoiSpec{14, 14, 32, 32});
    }
    CHECK_THROWS_AS(annotate(GrayImage(64, 64, 0.9), {"b", 3, 3}, EvolutionParams{}), AllSeedPixels);
    CHECK_THROWS_AS(annotate(dark, {"d", -1, 5}, EvolutionParams{}), std::out_of_range);
    CHECK_THROWS_AS(annotate(dark, {"d", 5, 64}, EvolutionParams{}), std::out_of_range);
    EvolutionParams bad;
    bad.mu = 0.3;
    CHECK_THROWS_AS(annotate(dark, {"d", 5, 5}, bad), std::invalid_argument);
}

TEST_CASE("click_square seeding starts from a square around the click")
{
    const synth::Phantom p = phantom(64, {disk(32, 32)});
    AnnotateOptions opts;
    opts.init = InitMode::click_square;
    EvolutionParams params;
    params.max_iters = 0;
    const AnnotationResult r = annotate(p.image, {"x", 40, 20}, params, opts);
    CHECK(r.mask.count() == 25);
    CHECK(r.mask.test(20, 40));
    CHECK(r.mask.test(22, 42));
    CHECK(!r.mask.test(23, 40));
}

TEST_CASE("batch_annotate contract")
{
    testutil::ScratchDir dir("batch");
    const auto imgs = dir / "images";
    const auto out = dir / "out";
    std::filesystem::create_directories(imgs);
    const synth::Phantom a = phantom(96, {disk(30, 30), disk(70, 70, 3)}, 1);
    const synth::Phantom b = phantom(96, {disk(48, 48)}, 2);
    save_image(a.image, imgs / "a.png");
    save_image(b.image, imgs / "b.png");

    SUBCASE("empty click list")
    {
        const BatchReport r = batch_annotate({}, imgs, out, EvolutionParams{});
        CHECK(r.entries.empty());
        CHECK(r.written.empty());
        CHECK((!std::filesystem::exists(out) || std::filesystem::is_empty(out)));
    }
    SUBCASE("two images, two clicks")
    {
        AnnotateOptions opts;
        opts.window = 48;
        const BatchReport r =
            batch_annotate({{"a", 30, 30}, {"b", 48, 48}}, imgs, out, EvolutionParams{}, opts, 2);
        REQUIRE(r.entries.size() == 2);
        CHECK(r.failures() == 0);
        for (const auto& e : r.entries)
            CHECK((e.converged || e.oscillating));
        CHECK(r.written.size() == 2);
        CHECK(iou(load_mask(out / "b.png"), b.gt) >= 0.8);
    }
    SUBCASE("partial failure")
    {
        const BatchReport r = batch_annotate({{"a", 30, 30}, {"b", 500, 3}, {"missing", 1, 1}}, imgs, out,
                                             EvolutionParams{}, AnnotateOptions{48});
        REQUIRE(r.entries.size() == 3);
        CHECK(r.entries[0].ok);
        CHECK(!r.entries[1].ok);
        CHECK(!r.entries[1].error.empty());
        CHECK(!r.entries[2].ok);
        CHECK(r.failures() == 2);
        CHECK(r.written.size() == 1);
        CHECK(std::filesystem::exists(out / "a.png"));
        CHECK(!std::filesystem::exists(out / "b.png"));
    }
    SUBCASE("clicks on one image union")
    {
        AnnotateOptions opts;
        opts.window = 32;
        batch_annotate({{"a", 30, 30}, {"a", 70, 70}}, imgs, out, EvolutionParams{}, opts);
        const BinaryMask m = load_mask(out / "a.png");
        const auto one = annotate(a.image, {"a", 30, 30}, EvolutionParams{}, opts).mask;
        const auto two = annotate(a.image, {"a", 70, 70}, EvolutionParams{}, opts).mask;
        BinaryMask u = one;
        for (std::size_t k = 0; k < u.size(); ++k)
            u[k] = one[k] || two[k];
        CHECK(m == u);
        CHECK(connected_components(m).components.size() == 2);
    }
}

TEST_CASE("parse_clicks formats and errors")
{
    const auto csv = parse_clicks("image_id,x,y\nfoo,3,4\r\nbar,10,0\n\n");
    REQUIRE(csv.size() == 2);
    CHECK(csv[0].image_id == "foo");
    CHECK(csv[0].x == 3);
    CHECK(csv[1].y == 0);

    const auto js = parse_clicks(R"([{"image_id": "q", "x": 1, "y": 2}])");
    REQUIRE(js.size() == 1);
    CHECK(js[0].image_id == "q");
    CHECK(parse_clicks("[]").empty());

    auto line_of = [](const std::string& text) {
        try {
            parse_clicks(text);
        } catch (const ClickFileError& e) {
            return e.line;
        }
        return -1;
    };
    CHECK(line_of("image_id,x,y\nfoo,1,2\nbar,one,2\n") == 3);
    CHECK(line_of("image_id,x,y\nfoo,1\n") == 2);
    CHECK(line_of("id,x\nfoo,1,2\n") == 1);
    CHECK(line_of("[{\"image_id\": 3}]") == 1);   // JSON errors carry the entry number
    CHECK(line_of("[{\"image_id\"") == 0);
    CHECK_THROWS_AS(read_clicks("/nonexistent/clicks.csv"), std::exception);
}
