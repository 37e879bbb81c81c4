// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "helpers.hpp"
#include "topbac/srvf.hpp"

using namespace topbac;

namespace {

Contour ellipse(double a, double b, int n, double phase = 0.0) {
    std::vector<Point2> pts(n);
    for (int i = 0; i < n; ++i) {
        double t = 2.0 * std::numbers::pi * i / n + phase;
        pts[i] = {a * std::cos(t), b * std::sin(t)};
    }
    return Contour(std::move(pts));
}

Contour rotated(const Contour& c, double angle) {
    double ca = std::cos(angle), sa = std::sin(angle);
    std::vector<Point2> pts;
    for (const Point2& p : c.points()) pts.push_back({ca * p.x - sa * p.y, sa * p.x + ca * p.y});
    return Contour(std::move(pts));
}

Contour scaled(const Contour& c, double s) {
    std::vector<Point2> pts;
    for (const Point2& p : c.points()) pts.push_back(p * s);
    return Contour(std::move(pts));
}

Contour cyclic_shift(const Contour& c, int k) {
    std::vector<Point2> pts;
    const std::size_t n = c.size();
    for (std::size_t i = 0; i < n; ++i) pts.push_back(c[(i + k) % n]);
    return Contour(std::move(pts));
}

double rms_q_error(const Srvf& a, const Srvf& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        Point2 d = a.samples[i] - b.samples[i];
        acc += dot(d, d);
    }
    return std::sqrt(acc / a.size());
}

}  // namespace

TEST_CASE("srvf of a circle has unit-magnitude samples", "[srvf]") {
    for (double r : {1.0, 7.5, 30.0}) {
        Srvf q = to_srvf(circle_contour({3, 4}, r, 200));
        for (const Point2& p : q.samples) CHECK(norm(p) == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("srvf kills translation and scale", "[srvf]") {
    Rng rng(8);
    Contour c = testutil::random_smooth_curve(rng, 150, {0, 0}, 2.0, 0.3);
    Srvf q = to_srvf(c);
    Srvf qt = to_srvf(c.translated({12.5, -3.25}));
    Srvf qs = to_srvf(scaled(c, 2.0));
    CHECK(rms_q_error(q, qt) < 1e-12);
    CHECK(rms_q_error(q, qs) < 1e-12);
}

TEST_CASE("reconstruction closes and round-trips", "[srvf]") {
    Srvf q = to_srvf(circle_contour({0, 0}, 1.0, 200));
    std::vector<Point2> pts = integrate_srvf(q, {0, 0});
    // closure gap vs unit curve length
    Point2 g = q.samples.back() * norm(q.samples.back());
    Point2 g0 = q.samples.front() * norm(q.samples.front());
    Point2 closed = pts.back() + (g + g0) * (0.5 / 200.0) - pts.front();
    CHECK(norm(closed) < 1e-2);

    for (int n : {100, 200}) {
        Srvf qe = to_srvf(ellipse(2.0, 1.0, n));
        Srvf back = to_srvf(from_srvf(qe, {0, 0}));
        CHECK(rms_q_error(qe, back) < 1e-3);
    }
}

TEST_CASE("zero srvf cannot be integrated", "[srvf]") {
    Srvf zero;
    zero.samples.assign(64, {0, 0});
    CHECK_THROWS_AS(integrate_srvf(zero, {0, 0}), error);
}

TEST_CASE("self-registration is the identity", "[srvf]") {
    Rng rng(12);
    Srvf q = to_srvf(testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3));
    Registration reg = register_srvf(q, q);
    CHECK(reg.inner_product == Catch::Approx(1.0).margin(1e-9));
    CHECK(reg.seed == 0);
    CHECK(reg.rot_c == Catch::Approx(1.0).margin(1e-9));
    CHECK(std::abs(reg.rot_s) < 1e-9);
}

TEST_CASE("registration recovers a pure rotation", "[srvf]") {
    Rng rng(13);
    Contour c = testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3);
    Srvf q1 = to_srvf(c);
    Srvf q2 = to_srvf(rotated(c, std::numbers::pi / 2));
    Registration reg = register_srvf(q1, q2);
    CHECK(reg.inner_product >= 1.0 - 1e-6);
    // the recovered rotation composed with the applied one is the identity
    double cc = reg.rot_c * std::cos(std::numbers::pi / 2) - reg.rot_s * std::sin(std::numbers::pi / 2);
    CHECK(std::abs(cc - 1.0) < 1e-6);
}

TEST_CASE("registration recovers a cyclic seed shift", "[srvf]") {
    Rng rng(14);
    Contour c = testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3);
    Srvf q1 = to_srvf(c);
    Srvf q2 = to_srvf(cyclic_shift(c, 37));
    Registration reg = register_srvf(q1, q2);
    CHECK(reg.inner_product >= 1.0 - 1e-6);
    CHECK((reg.seed == 37 || reg.seed == 100 - 37));
}

TEST_CASE("elastic distance vanishes on the diagonal", "[srvf]") {
    Rng rng(15);
    for (int trial = 0; trial < 3; ++trial) {
        Contour c = testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3);
        CHECK(elastic_distance(c, c, 100) < 1e-6);
    }
}

TEST_CASE("elastic distance is invariant to the shape-preserving group", "[srvf]") {
    Rng rng(16);
    Contour a = testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3);
    Contour b = testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3);
    double base = elastic_distance(a, b, 100);
    CHECK(base > 0.0);
    CHECK(std::abs(elastic_distance(a, rotated(b, 1.1), 100) - base) < 1e-5);
    CHECK(std::abs(elastic_distance(a, b.translated({4, -2}), 100) - base) < 1e-5);
    CHECK(std::abs(elastic_distance(a, scaled(b, 3.0), 100) - base) < 1e-5);
    CHECK(std::abs(elastic_distance(a, cyclic_shift(b, 21), 100) - base) < 1e-5);
    CHECK(std::abs(elastic_distance(b, a, 100) - base) < 1e-5);  // symmetry
}

TEST_CASE("elastic distance orders eccentricity", "[srvf]") {
    Contour circle = circle_contour({0, 0}, 1.0, 100);
    double d_wide = elastic_distance(circle, ellipse(2.0, 1.0, 100), 100);
    double d_mild = elastic_distance(circle, ellipse(1.1, 1.0, 100), 100);
    CHECK(d_wide > d_mild);
    CHECK(d_mild > 0.0);
}

TEST_CASE("triangle inequality holds with discretization slack", "[srvf]") {
    Rng rng(17);
    for (int trial = 0; trial < 4; ++trial) {
        Contour a = testutil::random_smooth_curve(rng, 80, {0, 0}, 1.0, 0.25);
        Contour b = testutil::random_smooth_curve(rng, 80, {0, 0}, 1.0, 0.25);
        Contour c = testutil::random_smooth_curve(rng, 80, {0, 0}, 1.0, 0.25);
        double ab = elastic_distance(a, b, 80);
        double bc = elastic_distance(b, c, 80);
        double ac = elastic_distance(a, c, 80);
        CHECK(ac <= ab + bc + 1e-3);
    }
}

TEST_CASE("sphere geometry identities", "[srvf]") {
    Rng rng(18);
    Srvf base = to_srvf(testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3));
    Srvf target = to_srvf(testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3));

    CHECK(rms_q_error(exp_map(base, Tangent(100, {0, 0})), base) < 1e-12);

    Tangent v = inv_exp_map(base, target);
    CHECK(tangent_norm(v) ==
          Catch::Approx(std::acos(std::clamp(srvf_dot(base, target), -1.0, 1.0))).margin(1e-10));
    Srvf back = exp_map(base, v);
    CHECK(rms_q_error(back, target) < 1e-8);
}

TEST_CASE("parallel transport is an isometry with inverse", "[srvf]") {
    Rng rng(19);
    Srvf a = to_srvf(testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3));
    Srvf b = to_srvf(testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3));
    Tangent v = inv_exp_map(a, b);  // a tangent at a
    CHECK(std::abs(tangent_dot(v, Tangent(a.samples))) < 1e-10);

    Tangent same = parallel_transport(v, a, a);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(dist(same[i], v[i]) < 1e-12);

    Tangent moved = parallel_transport(v, a, b);
    double tangency = 0.0;
    for (std::size_t i = 0; i < moved.size(); ++i) tangency += dot(moved[i], b.samples[i]);
    CHECK(std::abs(tangency / moved.size()) < 1e-8);
    CHECK(tangent_norm(moved) == Catch::Approx(tangent_norm(v)).margin(1e-8));

    Tangent round = parallel_transport(moved, b, a);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(dist(round[i], v[i]) < 1e-8);
}

TEST_CASE("karcher mean trivial cases", "[srvf]") {
    Rng rng(20);
    Srvf q = to_srvf(testutil::random_smooth_curve(rng, 80, {0, 0}, 1.0, 0.3));
    KarcherResult one = karcher_mean({q});
    CHECK(one.converged);
    CHECK(rms_q_error(one.mean, q) < 1e-12);

    KarcherResult same = karcher_mean({q, q, q});
    CHECK(same.converged);
    CHECK(same.iterations == 1);
    CHECK(rms_q_error(same.mean, q) < 1e-12);
}

TEST_CASE("karcher mean of two perturbed circles sits near the geodesic midpoint", "[srvf]") {
    Rng rng(22);
    Contour c1 = testutil::random_smooth_curve(rng, 200, {0, 0}, 1.0, 0.035);
    Contour c2 = testutil::random_smooth_curve(rng, 200, {0, 0}, 1.0, 0.035);
    Srvf q1 = to_srvf(c1), q2 = to_srvf(c2);
    KarcherResult km = karcher_mean({q1, q2});
    CHECK(km.converged);
    double d12 = elastic_distance(q1, q2);
    double d1m = elastic_distance(q1, km.mean);
    double d2m = elastic_distance(q2, km.mean);
    CHECK(std::abs(d1m - 0.5 * d12) < 0.1 * 0.5 * d12);
    CHECK(std::abs(d2m - 0.5 * d12) < 0.1 * 0.5 * d12);
}

TEST_CASE("registration pull-back inverts the group action", "[srvf]") {
    Rng rng(23);
    Contour c1 = testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3);
    Contour c2 = testutil::random_smooth_curve(rng, 100, {0, 0}, 1.0, 0.3);
    Srvf q1 = to_srvf(c1), q2 = to_srvf(c2);
    Registration reg = register_srvf(q1, q2);
    Srvf back = registration_pull_back(reg, reg.q2_registered);
    CHECK(rms_q_error(back, q2) < 8e-2);  // interpolation-limited
    CHECK(srvf_dot(back, q2) > 0.998);
}
