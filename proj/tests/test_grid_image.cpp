#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "toposeg/grid_image.hpp"
#include "toposeg/rng.hpp"

using namespace toposeg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("toposeg_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_pgm_p2(const std::string& path, int w, int h, int maxval,
                  const std::vector<int>& pixels) {
    std::ofstream out(path);
    out << "P2\n# test fixture\n" << w << ' ' << h << '\n' << maxval << '\n';
    for (int v : pixels) out << v << '\n';
}

void write_pgm_p5(const std::string& path, int w, int h, const std::vector<uint8_t>& pixels) {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n" << w << ' ' << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
}

}  // namespace

TEST_CASE("pgm loading normalizes by the format maximum") {
    TempDir dir;
    write_pgm_p2(dir.file("all255.pgm"), 2, 2, 255, {255, 255, 255, 255});
    const auto ones = load_image(dir.file("all255.pgm"));
    for (double v : ones.values) CHECK(v == 1.0);
    CHECK(ones.normalized);

    write_pgm_p2(dir.file("zeros.pgm"), 2, 2, 255, {0, 0, 0, 0});
    const auto zeros = load_image(dir.file("zeros.pgm"));
    for (double v : zeros.values) CHECK(v == 0.0);

    write_pgm_p2(dir.file("mid.pgm"), 1, 1, 255, {128});
    CHECK(load_image(dir.file("mid.pgm")).values[0] == doctest::Approx(128.0 / 255.0));

    write_pgm_p5(dir.file("bin.pgm"), 3, 1, {0, 128, 255});
    const auto bin = load_image(dir.file("bin.pgm"));
    CHECK(bin.values[1] == doctest::Approx(128.0 / 255.0));

    // 16-bit P2
    write_pgm_p2(dir.file("deep.pgm"), 1, 1, 65535, {65535});
    CHECK(load_image(dir.file("deep.pgm")).values[0] == 1.0);
}

TEST_CASE("png save/load round-trip stays within quantization") {
    TempDir dir;
    Rng rng(5);
    std::vector<double> vals(64);
    for (auto& v : vals) v = rng.uniform();
    const auto img = GrayImage::make(8, 8, std::move(vals));
    save_image(img, dir.file("x.png"));
    const auto back = load_image(dir.file("x.png"));
    REQUIRE(back.width == 8);
    REQUIRE(back.height == 8);
    for (size_t i = 0; i < img.size(); ++i)
        CHECK(std::abs(back.values[i] - img.values[i]) <= 1.0 / 255.0);
}

TEST_CASE("half values round up when stored") {
    TempDir dir;
    const auto img = GrayImage::make(1, 1, {0.5});
    save_image(img, dir.file("half.png"));
    const auto back = load_image(dir.file("half.png"));
    CHECK(back.values[0] == doctest::Approx(128.0 / 255.0));  // round(127.5) half-up
}

TEST_CASE("16-bit binary pgm reads big-endian samples") {
    TempDir dir;
    std::ofstream out(dir.file("deep5.pgm"), std::ios::binary);
    out << "P5\n2 1\n65535\n";
    const uint8_t bytes[4] = {0xff, 0xff, 0x80, 0x00};  // 65535, 32768
    out.write(reinterpret_cast<const char*>(bytes), 4);
    out.close();
    const auto img = load_image(dir.file("deep5.pgm"));
    CHECK(img.values[0] == 1.0);
    CHECK(img.values[1] == doctest::Approx(32768.0 / 65535.0));
}

TEST_CASE("color png is rejected as not grayscale") {
    TempDir dir;
    // 1x1 RGB PNG, precomputed bytes
    static const uint8_t rgb_png[] = {
        0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48,
        0x44, 0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00,
        0x00, 0x90, 0x77, 0x53, 0xde, 0x00, 0x00, 0x00, 0x0c, 0x49, 0x44, 0x41, 0x54, 0x78,
        0x9c, 0x63, 0x38, 0x21, 0xa7, 0x01, 0x00, 0x02, 0xc0, 0x01, 0x0f, 0xda, 0x40, 0x81,
        0xb9, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
    std::ofstream out(dir.file("rgb.png"), std::ios::binary);
    out.write(reinterpret_cast<const char*>(rgb_png), sizeof rgb_png);
    out.close();
    CHECK_THROWS_WITH_AS(load_image(dir.file("rgb.png")),
                         doctest::Contains("not grayscale"), std::runtime_error);
}

TEST_CASE("save rejects non-normalized images, loaders reject junk") {
    TempDir dir;
    GrayImage grad(2, 2);
    grad.values = {-1.0, 0.5, 2.0, 0.0};
    CHECK_THROWS_AS(save_image(grad, dir.file("bad.png")), std::invalid_argument);

    CHECK_THROWS_AS(load_image(dir.file("missing.pgm")), std::runtime_error);

    std::ofstream(dir.file("junk.pgm")) << "P9 nonsense";
    CHECK_THROWS_AS(load_image(dir.file("junk.pgm")), std::runtime_error);
}

TEST_CASE("binarize uses an inclusive threshold") {
    const auto img = GrayImage::make(2, 1, {0.7, 0.7});
    CHECK(binarize(img, 0.5).bits == std::vector<uint8_t>{1, 1});
    CHECK(binarize(img, 0.7).bits == std::vector<uint8_t>{1, 1});
    CHECK(binarize(img, 0.7001).bits == std::vector<uint8_t>{0, 0});

    const auto two = GrayImage::make(2, 1, {0.2, 0.8});
    CHECK(binarize(two, 0.5).bits == std::vector<uint8_t>{0, 1});
}

TEST_CASE("binarize is monotone in the threshold") {
    Rng rng(17);
    std::vector<double> vals(48);
    for (auto& v : vals) v = rng.uniform();
    const auto img = GrayImage::make(8, 6, std::move(vals));
    const auto lo = binarize(img, 0.3);
    const auto hi = binarize(img, 0.6);
    for (size_t i = 0; i < lo.size(); ++i)
        if (hi.bits[i]) CHECK(lo.bits[i]);
}

TEST_CASE("invert is an order-reversing involution") {
    // dyadic values keep the involution bit-exact
    const auto img = GrayImage::make(4, 1, {0.0, 0.25, 0.625, 1.0});
    const auto inv = invert(img);
    CHECK(inv.values == std::vector<double>{1.0, 0.75, 0.375, 0.0});
    CHECK(invert(inv).values == img.values);

    CHECK(invert(GrayImage::make(1, 1, {0.3})).values[0] == doctest::Approx(0.7));

    Rng rng(3);
    std::vector<double> vals(32);
    for (auto& v : vals) v = rng.uniform();
    const auto rnd = GrayImage::make(8, 4, std::move(vals));
    const auto rinv = invert(rnd);
    for (size_t i = 0; i < rnd.size(); ++i)
        for (size_t j = 0; j < rnd.size(); ++j)
            if (rnd.values[i] < rnd.values[j]) CHECK(rinv.values[i] > rinv.values[j]);

    GrayImage not_norm(1, 1);
    not_norm.values = {1.5};
    CHECK_THROWS_AS(invert(not_norm), std::invalid_argument);
}
