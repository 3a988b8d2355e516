#include <doctest.h>

#include <fstream>
#include <random>

#include "clickmask/imaging.hpp"
#include "oracles.hpp"
#include "scratch_dir.hpp"

using namespace clickmask;

namespace {

// 1x1 PNGs encoded by an independent encoder (Pillow): gray 50 and RGB (50,50,50).
const std::vector<std::uint8_t> png_gray_50 = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00,
    0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x00, 0x00, 0x00, 0x00, 0x3a, 0x7e, 0x9b, 0x55, 0x00,
    0x00, 0x00, 0x0a, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x30, 0x02, 0x00, 0x00, 0x34, 0x00, 0x33,
    0xce, 0x83, 0x24, 0x6f, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
const std::vector<std::uint8_t> png_rgb_50 = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00,
    0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00, 0x00, 0x90, 0x77, 0x53, 0xde, 0x00,
    0x00, 0x00, 0x0c, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x30, 0x32, 0x32, 0x02, 0x00, 0x01, 0x30,
    0x00, 0x97, 0xe8, 0x76, 0xc8, 0x55, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60,
    0x82};

void write_raw(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> pgm(int w, int h, const std::vector<std::uint8_t>& pixels)
{
    const std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

BinaryMask subset_of(const BinaryMask& m, std::mt19937& rng)
{
    std::bernoulli_distribution keep(0.6);
    BinaryMask out = m;
    for (std::size_t k = 0; k < out.size(); ++k)
        if (out[k] && !keep(rng))
            out[k] = 0;
    return out;
}

}  // namespace

TEST_CASE("load_image normalizes PGM bytes")
{
    testutil::ScratchDir dir("img");
    write_raw(dir / "a.pgm", pgm(2, 2, {0, 255, 128, 64}));
    const GrayImage img = load_image(dir / "a.pgm");
    REQUIRE(img.width() == 2);
    REQUIRE(img.height() == 2);
    CHECK(img(0, 0) == 0.0);
    CHECK(img(0, 1) == 1.0);
    CHECK(img(1, 0) == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
    CHECK(img(1, 1) == doctest::Approx(64.0 / 255.0).epsilon(1e-15));
}

TEST_CASE("load_image reads externally encoded PNGs")
{
    testutil::ScratchDir dir("img");
    write_raw(dir / "g.png", png_gray_50);
    write_raw(dir / "c.png", png_rgb_50);
    const GrayImage g = load_image(dir / "g.png");
    REQUIRE(g.size() == 1);
    CHECK(g[0] == doctest::Approx(50.0 / 255.0).epsilon(1e-12));
    CHECK(g[0] == doctest::Approx(0.19608).epsilon(1e-4));
    CHECK(load_image(dir / "c.png")[0] == doctest::Approx(50.0 / 255.0).epsilon(1e-9));
}

TEST_CASE("truncated and missing files raise unreadable-file errors")
{
    testutil::ScratchDir dir("img");
    auto cut = png_gray_50;
    cut.resize(40);
    write_raw(dir / "cut.png", cut);
    write_raw(dir / "cut.pgm", pgm(4, 4, {1, 2, 3}));
    CHECK_THROWS_AS(load_image(dir / "cut.png"), IoError);
    CHECK_THROWS_AS(load_image(dir / "cut.pgm"), IoError);
    CHECK_THROWS_AS(load_image(dir / "absent.png"), IoError);
    try {
        load_image(dir / "cut.png");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("unreadable file") != std::string::npos);
    }
}

TEST_CASE("16-bit PGM is rejected as unsupported")
{
    testutil::ScratchDir dir("img");
    const std::string header = "P5\n1 1\n65535\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.push_back(0);
    bytes.push_back(1);
    write_raw(dir / "deep.pgm", bytes);
    CHECK_THROWS_AS(load_image(dir / "deep.pgm"), IoError);
}

TEST_CASE("save_mask writes 0/255 and round-trips")
{
    testutil::ScratchDir dir("img");
    const BinaryMask empty(4, 4);
    save_mask(empty, dir / "empty.png");
    const GrayImage raw = load_image(dir / "empty.png");
    REQUIRE(raw.width() == 4);
    for (std::size_t k = 0; k < raw.size(); ++k)
        CHECK(raw[k] == 0.0);

    BinaryMask checker(7, 5);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 7; ++c)
            checker.set(r, c, (r + c) % 2 == 0);
    save_mask(checker, dir / "checker.png");
    const GrayImage levels = load_image(dir / "checker.png");
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 7; ++c)
            CHECK(levels(r, c) == ((r + c) % 2 == 0 ? 1.0 : 0.0));
    CHECK(load_mask(dir / "checker.png") == checker);
}

TEST_CASE("save_mask to an unwritable location fails")
{
    testutil::ScratchDir dir("img");
    write_raw(dir / "plainfile", {1});
    CHECK_THROWS_AS(save_mask(BinaryMask(2, 2), dir / "plainfile" / "m.png"), IoError);
}

TEST_CASE("gradient examples")
{
    const ScalarField flat(6, 5, 0.37);
    const Gradient g0 = gradient(flat);
    for (std::size_t k = 0; k < flat.size(); ++k) {
        CHECK(g0.gx[k] == 0.0);
        CHECK(g0.gy[k] == 0.0);
    }

    ScalarField ramp(6, 5);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 6; ++c)
            ramp(r, c) = c;
    const Gradient g1 = gradient(ramp);
    for (int r = 1; r < 4; ++r)
        for (int c = 1; c < 5; ++c) {
            CHECK(g1.gx(r, c) == 1.0);
            CHECK(g1.gy(r, c) == 0.0);
        }
    CHECK(g1.gx(2, 0) == 0.5);  // replicated edge

    CHECK_THROWS_AS(gradient(ScalarField(1, 5)), std::invalid_argument);
}

TEST_CASE("gradient matches the stencil oracle")
{
    std::mt19937 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const ScalarField f = oracle::random_field(rng, 5 + trial % 3, 5 + trial % 2, -1.0, 1.0);
        ScalarField ox, oy;
        oracle::gradient(f, ox, oy);
        const Gradient g = gradient(f);
        for (std::size_t k = 0; k < f.size(); ++k) {
            CHECK(g.gx[k] == doctest::Approx(ox[k]).epsilon(1e-14));
            CHECK(g.gy[k] == doctest::Approx(oy[k]).epsilon(1e-14));
        }
    }
}

TEST_CASE("connected_components examples")
{
    CHECK(connected_components(BinaryMask(5, 5)).components.empty());

    BinaryMask diag(3, 3);
    diag.set(0, 0);
    diag.set(1, 1);
    const auto eight = connected_components(diag, Connectivity::eight);
    REQUIRE(eight.components.size() == 1);
    CHECK(eight.components[0].area == 2);
    const auto four = connected_components(diag, Connectivity::four);
    REQUIRE(four.components.size() == 2);
    CHECK(four.components[0].area == 1);
    CHECK(four.components[1].area == 1);
}

TEST_CASE("connected_components matches the flood-fill oracle")
{
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const BinaryMask m = oracle::random_mask(rng, 10 + trial % 6, 10, 0.45);
        for (const auto conn : {Connectivity::four, Connectivity::eight}) {
            const auto got = connected_components(m, conn);
            const auto want = oracle::flood_fill(m, static_cast<int>(conn));
            REQUIRE(got.components.size() == want.areas.size());
            for (std::size_t k = 0; k < m.size(); ++k)
                CHECK(got.labels[k] == want.labels[k]);
            for (std::size_t i = 0; i < want.areas.size(); ++i) {
                const Component& c = got.components[i];
                CHECK(c.id == static_cast<int>(i + 1));
                CHECK(c.area == want.areas[i]);
                CHECK(c.centroid_row == doctest::Approx(want.row_sum[i] / want.areas[i]).epsilon(1e-14));
                CHECK(c.centroid_col == doctest::Approx(want.col_sum[i] / want.areas[i]).epsilon(1e-14));
                CHECK(c.bbox == BoundingBox{want.top[i], want.left[i], want.bottom[i], want.right[i]});
            }
        }
    }
}

TEST_CASE("labels are nonzero exactly on foreground")
{
    std::mt19937 rng(9);
    const BinaryMask m = oracle::random_mask(rng, 20, 17, 0.5);
    const auto cs = connected_components(m);
    for (std::size_t k = 0; k < m.size(); ++k)
        CHECK((cs.labels[k] != 0) == (m[k] != 0));
}

TEST_CASE("dilate examples")
{
    std::mt19937 rng(3);
    const BinaryMask m = oracle::random_mask(rng, 9, 9, 0.3);
    CHECK(dilate(m, 0) == m);

    BinaryMask dot(11, 11);
    dot.set(5, 5);
    const BinaryMask disk = dilate(dot, 3);
    int count = 0;
    for (int r = 0; r < 11; ++r)
        for (int c = 0; c < 11; ++c) {
            const double d = std::hypot(r - 5.0, c - 5.0);
            CHECK(disk.test(r, c) == (d < 3.5));
            count += disk.test(r, c);
        }
    // Radius-3 disk under the < r + 0.5 rule: all pixels with d^2 <= 12.
    CHECK(count == 37);
}

TEST_CASE("dilate matches the all-pairs oracle")
{
    std::mt19937 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const BinaryMask m = oracle::random_mask(rng, 12, 12, 0.08);
        for (const int radius : {1, 2, 3, 5})
            CHECK(dilate(m, radius) == oracle::dilate(m, radius));
    }
}

TEST_CASE("dilate is monotone and extensive")
{
    std::mt19937 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const BinaryMask b = oracle::random_mask(rng, 14, 13, 0.15);
        const BinaryMask a = subset_of(b, rng);
        for (const int radius : {0, 1, 3}) {
            const BinaryMask da = dilate(a, radius), db = dilate(b, radius);
            for (std::size_t k = 0; k < a.size(); ++k) {
                if (da[k])
                    CHECK(db[k]);
                if (a[k])
                    CHECK(da[k]);
            }
        }
    }
}

TEST_CASE("gaussian_blur preserves constants and mass")
{
    const ScalarField flat(9, 7, 0.4);
    const ScalarField b = gaussian_blur(flat, 1.5);
    for (std::size_t k = 0; k < b.size(); ++k)
        CHECK(b[k] == doctest::Approx(0.4).epsilon(1e-14));
    std::mt19937 rng(2);
    const ScalarField f = oracle::random_field(rng, 6, 6, 0, 1);
    CHECK(gaussian_blur(f, 0.0) == f);
}

TEST_CASE("crop bounds")
{
    GrayImage img(6, 4);
    for (std::size_t k = 0; k < img.size(); ++k)
        img[k] = k / 100.0;
    const GrayImage c = img.crop(2, 1, 3, 2);
    CHECK(c(0, 0) == img(1, 2));
    CHECK(c(1, 2) == img(2, 4));
    CHECK_THROWS(img.crop(4, 0, 3, 2));
}
