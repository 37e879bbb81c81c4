// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "helpers.hpp"
#include "topbac/image_io.hpp"

using namespace topbac;

TEST_CASE("load 8-bit PGM rescales linearly", "[image]") {
    auto dir = testutil::scratch_dir();
    auto path = (dir / "tiny.pgm").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n2 2\n255\n";
        unsigned char bytes[4] = {0, 255, 128, 64};
        out.write(reinterpret_cast<char*>(bytes), 4);
    }
    GrayImage img = load_image(path);
    REQUIRE(img.width() == 2);
    REQUIRE(img.height() == 2);
    CHECK(img.at(0, 0) == 0.0);
    CHECK(img.at(1, 0) == 1.0);
    CHECK(img.at(0, 1) == Catch::Approx(128.0 / 255.0));
    CHECK(img.at(1, 1) == Catch::Approx(64.0 / 255.0));
}

TEST_CASE("all-zero image loads as all zeros", "[image]") {
    auto path = (testutil::scratch_dir() / "zeros.pgm").string();
    save_pgm(GrayImage(4, 3, 0.0), path);
    GrayImage img = load_image(path);
    for (double v : img.values()) CHECK(v == 0.0);
}

TEST_CASE("16-bit PGM max value maps to 1", "[image]") {
    auto path = (testutil::scratch_dir() / "deep.pgm").string();
    GrayImage img(2, 1);
    img.at(0, 0) = 1.0;
    img.at(1, 0) = 0.25;
    save_pgm(img, path, 16);
    GrayImage back = load_image(path);
    CHECK(back.at(0, 0) == 1.0);
    CHECK(back.at(1, 0) == Catch::Approx(0.25).margin(1.0 / 65535.0));
}

TEST_CASE("P2 text PGM parses with comments", "[image]") {
    auto path = (testutil::scratch_dir() / "text.pgm").string();
    {
        std::ofstream out(path);
        out << "P2\n# a comment\n2 2\n255\n0 255\n128 64\n";
    }
    GrayImage img = load_image(path);
    CHECK(img.at(1, 0) == 1.0);
    CHECK(img.at(0, 1) == Catch::Approx(128.0 / 255.0));
}

TEST_CASE("8-bit round trip reproduces values within the half-step", "[image]") {
    GrayImage img(16, 9);
    Rng rng(99);
    for (double& v : img.values()) v = rng.uniform();
    for (const char* name : {"rt.pgm", "rt.png"}) {
        auto path = (testutil::scratch_dir() / name).string();
        save_image(img, path);
        GrayImage back = load_image(path);
        REQUIRE(back.width() == img.width());
        for (std::size_t i = 0; i < img.size(); ++i)
            CHECK(std::abs(back.values()[i] - img.values()[i]) <= 1.0 / 510.0 + 1e-12);
    }
}

TEST_CASE("round trip of quantized bytes is exact", "[image]") {
    GrayImage img(2, 2);
    img.at(0, 0) = 0.0;
    img.at(1, 0) = 1.0;
    img.at(0, 1) = 128.0 / 255.0;
    img.at(1, 1) = 64.0 / 255.0;
    auto path = (testutil::scratch_dir() / "exact.pgm").string();
    auto path2 = (testutil::scratch_dir() / "exact2.pgm").string();
    save_image(img, path);
    save_image(load_image(path), path2);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
}

TEST_CASE("0.5 quantizes to byte 128 (round half up)", "[image]") {
    CHECK(quantize8(0.5) == 128);
    CHECK(quantize8(0.0) == 0);
    CHECK(quantize8(1.0) == 255);
}

TEST_CASE("saving into a missing directory fails", "[image]") {
    GrayImage img(2, 2, 0.5);
    CHECK_THROWS_AS(save_image(img, "/nonexistent_dir_xyz/out.png"), error);
}

TEST_CASE("color PNG is rejected with the path in the message", "[image]") {
    auto path = (testutil::scratch_dir() / "rgb.png").string();
    std::vector<std::uint8_t> rgb(4 * 4 * 3, 10);
    save_png_rgb(rgb, 4, 4, path);
    try {
        load_image(path);
        FAIL("expected an error");
    } catch (const error& e) {
        CHECK(std::string(e.what()).find(path) != std::string::npos);
    }
}

TEST_CASE("PNG grayscale round trip", "[image]") {
    GrayImage img(7, 5);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) img.at(x, y) = (x + y) / 12.0;
    auto path = (testutil::scratch_dir() / "gray.png").string();
    save_png(img, path);
    GrayImage back = load_png(path);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(std::abs(back.values()[i] - img.values()[i]) <= 1.0 / 510.0 + 1e-12);
}

TEST_CASE("bilinear sampling interpolates between centers", "[image]") {
    GrayImage img(2, 2);
    img.at(0, 0) = 0.0;
    img.at(1, 0) = 1.0;
    img.at(0, 1) = 0.0;
    img.at(1, 1) = 1.0;
    CHECK(img.sample(0.5, 0.5) == Catch::Approx(0.5));
    CHECK(img.sample(0.25, 0.0) == Catch::Approx(0.25));
}
