// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "topbac/metrics.hpp"
#include "topbac/synth.hpp"

using namespace topbac;

namespace {

PixelRegion random_region(Rng& rng, int w, int h, double fill) {
    PixelRegion r(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (rng.uniform() < fill) r.set(x, y, true);
    return r;
}

double brute_hausdorff(const PixelRegion& a, const PixelRegion& b) {
    auto points = [](const PixelRegion& r) {
        std::vector<Point2> pts;
        for (int y = 0; y < r.height(); ++y)
            for (int x = 0; x < r.width(); ++x)
                if (r.at(x, y)) pts.push_back({double(x), double(y)});
        return pts;
    };
    auto pa = points(a), pb = points(b);
    auto directed = [](const std::vector<Point2>& from, const std::vector<Point2>& to) {
        double worst = 0.0;
        for (const Point2& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const Point2& q : to) best = std::min(best, dist(p, q));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(pa, pb), directed(pb, pa));
}

double brute_hamming(const PixelRegion& a, const PixelRegion& b) {
    // directional sums with estimate/truth regions paired by role
    double only_a = 0, only_b = 0;
    for (std::size_t i = 0; i < a.mask().size(); ++i) {
        if (a.mask()[i] && !b.mask()[i]) ++only_a;
        if (!a.mask()[i] && b.mask()[i]) ++only_b;
    }
    double d12 = only_b + only_a;  // mass of B in A^c plus mass of B^c in A
    double d21 = only_a + only_b;
    return (d12 + d21) / (2.0 * a.mask().size());
}

}  // namespace

TEST_CASE("hausdorff basics", "[metrics]") {
    PixelRegion a(8, 8), b(8, 8);
    a.set(0, 0, true);
    b.set(3, 4, true);
    CHECK(hausdorff(a, a) == 0.0);
    CHECK(hausdorff(a, b) == Catch::Approx(5.0));
    CHECK_THROWS_AS(hausdorff(a, PixelRegion(8, 8)), error);
}

TEST_CASE("hausdorff matches brute force on random regions", "[metrics]") {
    Rng rng(41);
    for (int trial = 0; trial < 25; ++trial) {
        PixelRegion a = random_region(rng, 12, 12, 0.1);
        PixelRegion b = random_region(rng, 12, 12, 0.1);
        if (a.count() == 0 || b.count() == 0) continue;
        CHECK(hausdorff(a, b) == Catch::Approx(brute_hausdorff(a, b)).margin(1e-12));
    }
}

TEST_CASE("hamming identities", "[metrics]") {
    Rng rng(42);
    PixelRegion a = random_region(rng, 10, 10, 0.4);
    CHECK(hamming(a, a) == 0.0);
    PixelRegion comp(10, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) comp.set(x, y, !a.at(x, y));
    CHECK(hamming(a, comp) == 1.0);  // maximal for a two-region partition
    for (int trial = 0; trial < 20; ++trial) {
        PixelRegion r1 = random_region(rng, 9, 7, 0.3);
        PixelRegion r2 = random_region(rng, 9, 7, 0.3);
        CHECK(hamming(r1, r2) == Catch::Approx(brute_hamming(r1, r2)).margin(1e-12));
        CHECK(hamming(r1, r2) == Catch::Approx(hamming(r2, r1)).margin(1e-12));
    }
}

TEST_CASE("jaccard distance basics", "[metrics]") {
    PixelRegion a(6, 6), b(6, 6);
    for (int i = 0; i < 4; ++i) a.set(i, 0, true);
    for (int i = 2; i < 6; ++i) b.set(i, 0, true);
    CHECK(jaccard_distance(a, a) == 0.0);
    CHECK(jaccard_distance(a, b) == Catch::Approx(1.0 - 2.0 / 6.0));
    PixelRegion e(6, 6);
    CHECK(jaccard_distance(e, e) == 0.0);  // both empty
    PixelRegion c(6, 6);
    c.set(5, 5, true);
    CHECK(jaccard_distance(a, c) == 1.0);  // disjoint
}

TEST_CASE("pm equals jaccard distance on every input", "[metrics]") {
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        PixelRegion a = random_region(rng, 8, 8, rng.uniform());
        PixelRegion b = random_region(rng, 8, 8, rng.uniform());
        CHECK(pm(a, b) == jaccard_distance(a, b));
    }
    // TP=2 FP=2 FN=2 case
    PixelRegion a(4, 4), b(4, 4);
    a.set(0, 0, true); a.set(1, 0, true); a.set(2, 0, true); a.set(3, 0, true);
    b.set(0, 0, true); b.set(1, 0, true); b.set(0, 1, true); b.set(1, 1, true);
    CHECK(pm(a, b) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("metrics are translation invariant", "[metrics]") {
    Rng rng(44);
    PixelRegion a = random_region(rng, 8, 8, 0.3);
    PixelRegion b = random_region(rng, 8, 8, 0.3);
    auto shift = [](const PixelRegion& r, int dx, int dy) {
        PixelRegion out(r.width() + 6, r.height() + 6);
        for (int y = 0; y < r.height(); ++y)
            for (int x = 0; x < r.width(); ++x)
                if (r.at(x, y)) out.set(x + dx, y + dy, true);
        return out;
    };
    PixelRegion a0 = shift(a, 0, 0), b0 = shift(b, 0, 0);
    PixelRegion a1 = shift(a, 3, 2), b1 = shift(b, 3, 2);
    if (a.count() && b.count())
        CHECK(hausdorff(a0, b0) == Catch::Approx(hausdorff(a1, b1)).margin(1e-12));
    CHECK(jaccard_distance(a0, b0) == Catch::Approx(jaccard_distance(a1, b1)).margin(1e-12));
}

TEST_CASE("esd report matches contours by descending area", "[metrics]") {
    Contour big = circle_contour({50, 50}, 30, 100);
    Contour small = circle_contour({50, 50}, 10, 100);
    EsdReport r = esd_report({big, small}, {small, big}, 100);
    REQUIRE(r.distances.size() == 2);
    CHECK(r.distances[0] < 1e-5);  // circles of different radius: same shape
    CHECK(r.distances[1] < 1e-5);
    CHECK(r.unmatched_estimate == 0);

    EsdReport u = esd_report({big}, {small, big}, 100);
    CHECK(u.distances.size() == 1);
    CHECK(u.unmatched_truth == 1);
}

TEST_CASE("identical contour sets give all-zero metrics", "[metrics]") {
    Scene s = make_donut(100, 100, 30, 12, {50, 50});
    MetricsReport r = evaluate(s.truth, s.truth, 100, 100, 100);
    CHECK(r.hausdorff == 0.0);
    CHECK(r.hamming == 0.0);
    CHECK(r.jaccard_distance == 0.0);
    CHECK(r.pm == 0.0);
    for (double d : r.esd.distances) CHECK(d < 1e-5);
}

TEST_CASE("metrics table mentions every measure", "[metrics]") {
    MetricsReport r;
    r.esd.distances = {0.1, 0.2};
    std::string t = r.to_table();
    for (const char* k : {"d_H", "p_H", "d_J", "PM", "ESD 1", "ESD 2"})
        CHECK(t.find(k) != std::string::npos);
}
