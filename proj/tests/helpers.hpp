// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "topbac/contour.hpp"
#include "topbac/rng.hpp"

namespace testutil {

using topbac::Contour;
using topbac::Point2;

/// Independent point-in-polygon oracle: ray-crossing parity with an on-edge
/// membership test. Kept separate from the library's scanline fill.
inline bool brute_force_inside(const std::vector<Point2>& poly, double px, double py) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = poly[i];
        const Point2& b = poly[(i + 1) % n];
        double cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
        double d2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
        if (d2 > 0) {
            double t = ((px - a.x) * (b.x - a.x) + (py - a.y) * (b.y - a.y)) / d2;
            if (t >= 0 && t <= 1) {
                double dx = px - (a.x + t * (b.x - a.x));
                double dy = py - (a.y + t * (b.y - a.y));
                if (std::abs(cross) < 1e-9 && dx * dx + dy * dy < 1e-18) return true;
            }
        }
    }
    bool inside = false;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = poly[i];
        const Point2& b = poly[(i + 1) % n];
        if ((a.y <= py && b.y > py) || (b.y <= py && a.y > py)) {
            double x = a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y);
            if (px < x) inside = !inside;
        }
    }
    return inside;
}

/// Least-squares circle fit (Kasa); returns (cx, cy, r).
inline std::array<double, 3> fit_circle(const std::vector<Point2>& pts) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, sxz = 0, syz = 0, sz = 0;
    const double n = static_cast<double>(pts.size());
    for (const Point2& p : pts) {
        double z = p.x * p.x + p.y * p.y;
        sx += p.x; sy += p.y; sxx += p.x * p.x; syy += p.y * p.y; sxy += p.x * p.y;
        sxz += p.x * z; syz += p.y * z; sz += z;
    }
    // solve [sxx sxy sx; sxy syy sy; sx sy n] [a b c]^T = [sxz syz sz]^T
    double m[3][4] = {{sxx, sxy, sx, sxz}, {sxy, syy, sy, syz}, {sx, sy, n, sz}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    double a = m[0][3] / m[0][0], b = m[1][3] / m[1][1], c = m[2][3] / m[2][2];
    double cx = a / 2, cy = b / 2;
    double r = std::sqrt(std::max(c + cx * cx + cy * cy, 0.0));
    return {cx, cy, r};
}

/// Smooth random star-shaped closed curve around a center (low-order Fourier
/// radius perturbation), guaranteed simple.
inline Contour random_smooth_curve(topbac::Rng& rng, int n = 100, Point2 center = {0, 0},
                                   double base_radius = 1.0, double wobble = 0.25) {
    std::vector<double> amp(4), phase(4);
    for (int k = 0; k < 4; ++k) {
        amp[k] = wobble * base_radius * rng.uniform() / (k + 1);
        phase[k] = 2.0 * std::numbers::pi * rng.uniform();
    }
    std::vector<Point2> pts(n);
    for (int i = 0; i < n; ++i) {
        double t = 2.0 * std::numbers::pi * i / n;
        double r = base_radius;
        for (int k = 0; k < 4; ++k) r += amp[k] * std::cos((k + 1) * t + phase[k]);
        pts[i] = {center.x + r * std::cos(t), center.y + r * std::sin(t)};
    }
    return Contour(std::move(pts));
}

/// scratch directory for file-based tests
inline std::filesystem::path scratch_dir() {
    auto p = std::filesystem::temp_directory_path() / "topbac_tests";
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testutil
