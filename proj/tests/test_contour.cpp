// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "topbac/contour.hpp"

using namespace topbac;

TEST_CASE("orientation normalizes to positive shoelace area", "[contour]") {
    std::vector<Point2> cw = {{0, 0}, {0, 2}, {2, 2}, {2, 0}};
    Contour c(cw);
    CHECK(Contour::signed_area(c.points()) > 0);
    CHECK(c.area() == Catch::Approx(4.0));
}

TEST_CASE("construction rejects degenerate input", "[contour]") {
    CHECK_THROWS_AS(Contour(std::vector<Point2>{{0, 0}, {1, 1}}), error);
    CHECK_THROWS_AS(Contour(std::vector<Point2>{{0, 0}, {0, 0}, {1, 1}}), error);
}

TEST_CASE("axis-aligned square rasterizes to the 16 interior centers", "[contour]") {
    Contour square(std::vector<Point2>{{1.5, 1.5}, {5.5, 1.5}, {5.5, 5.5}, {1.5, 5.5}});
    PixelRegion r = rasterize_interior(square, 8, 8);
    CHECK(r.count() == 16);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            CHECK(r.at(x, y) == (x >= 2 && x <= 5 && y >= 2 && y <= 5));
}

TEST_CASE("rasterization matches the brute-force oracle on random curves", "[contour]") {
    Rng rng(21);
    for (int trial = 0; trial < 8; ++trial) {
        Contour c = testutil::random_smooth_curve(rng, 60, {8.0, 8.0}, 5.0, 0.3);
        PixelRegion r = rasterize_interior(c, 16, 16);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                CHECK(r.at(x, y) == testutil::brute_force_inside(c.points(), x, y));
    }
}

TEST_CASE("pixels exactly on an edge are members", "[contour]") {
    Contour square(std::vector<Point2>{{2, 2}, {6, 2}, {6, 6}, {2, 6}});
    PixelRegion r = rasterize_interior(square, 9, 9);
    CHECK(r.at(2, 2));   // corner
    CHECK(r.at(4, 2));   // edge midpoint
    CHECK(r.at(6, 6));
    CHECK(r.count() == 25);
}

TEST_CASE("degenerate sliver has empty interior", "[contour]") {
    Contour sliver(std::vector<Point2>{{0.3, 0.3}, {5.3, 0.3002}, {2.6, 0.3004}});
    PixelRegion r = rasterize_interior(sliver, 8, 8);
    CHECK(r.count() == 0);
}

TEST_CASE("full-image rectangle contains every pixel", "[contour]") {
    Contour rect(std::vector<Point2>{{-0.5, -0.5}, {7.5, -0.5}, {7.5, 7.5}, {-0.5, 7.5}});
    CHECK(rasterize_interior(rect, 8, 8).count() == 64);
}

TEST_CASE("self-intersecting contour is rejected with segment indices", "[contour]") {
    Contour bow(std::vector<Point2>{{0, 0}, {4, 4}, {4, 0}, {0, 4}});
    auto hit = find_self_intersection(bow);
    REQUIRE(hit.has_value());
    try {
        rasterize_interior(bow, 8, 8);
        FAIL("expected an error");
    } catch (const error& e) {
        CHECK(std::string(e.what()).find(std::to_string(hit->first)) != std::string::npos);
    }
}

TEST_CASE("containment is monotone", "[contour]") {
    Rng rng(5);
    for (int trial = 0; trial < 6; ++trial) {
        Contour inner = testutil::random_smooth_curve(rng, 50, {10, 10}, 4.0, 0.25);
        Contour outer = testutil::random_smooth_curve(rng, 50, {10, 10}, 8.0, 0.1);
        PixelRegion ri = rasterize_interior(inner, 21, 21);
        PixelRegion ro = rasterize_interior(outer, 21, 21);
        for (int y = 0; y < 21; ++y)
            for (int x = 0; x < 21; ++x)
                if (ri.at(x, y)) CHECK(ro.at(x, y));
    }
}

TEST_CASE("integer translation shifts the region", "[contour]") {
    Rng rng(6);
    Contour c = testutil::random_smooth_curve(rng, 40, {6, 6}, 4.0, 0.2);
    PixelRegion r0 = rasterize_interior(c, 24, 24);
    PixelRegion r1 = rasterize_interior(c.translated({3, 2}), 24, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
            bool shifted = (x >= 3 && y >= 2) ? r0.at(x - 3, y - 2) : false;
            CHECK(r1.at(x, y) == shifted);
        }
}

TEST_CASE("resampling is uniform and preserves area", "[contour]") {
    Contour c = circle_contour({10, 10}, 6.0, 37);
    Contour r = resample(c, 200);
    REQUIRE(r.size() == 200);
    double seg0 = dist(r[0], r[1]);
    for (std::size_t i = 0; i < r.size(); ++i)
        CHECK(dist(r[i], r[(i + 1) % r.size()]) == Catch::Approx(seg0).epsilon(0.02));
    CHECK(r.area() == Catch::Approx(c.area()).epsilon(0.005));
}

TEST_CASE("outward normals point outward and perpendicular", "[contour]") {
    Contour c = circle_contour({0, 0}, 5.0, 64);
    auto normals = outward_normals(c);
    for (std::size_t i = 0; i < c.size(); ++i) {
        Point2 radial = c[i] / norm(c[i]);
        CHECK(dot(normals[i], radial) > 0.99);
        Point2 tangent = c[(i + 1) % c.size()] - c[(i + c.size() - 1) % c.size()];
        CHECK(std::abs(dot(normals[i], tangent)) < 1e-8);
    }
    // moving along +n grows the enclosed area
    std::vector<Point2> grown = c.points();
    for (std::size_t i = 0; i < grown.size(); ++i) grown[i] += normals[i] * 0.1;
    CHECK(Contour::signed_area(grown) > c.area());
}

TEST_CASE("curvature of a circle is 1/r with positive sign", "[contour]") {
    Contour c = circle_contour({0, 0}, 4.0, 128);
    for (double k : curvatures(c)) CHECK(k == Catch::Approx(0.25).epsilon(0.01));
}

TEST_CASE("contour CSV round trip", "[contour]") {
    Rng rng(11);
    Contour c = testutil::random_smooth_curve(rng, 33, {3, 3}, 2.0, 0.2);
    auto path = (testutil::scratch_dir() / "c.csv").string();
    save_contour_csv(c, path);
    Contour back = load_contour_csv(path);
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(dist(back[i], c[i]) < 1e-12);
}
