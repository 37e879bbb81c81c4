// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "topbac/contour.hpp"
#include "topbac/image.hpp"
#include "topbac/rng.hpp"

namespace topbac {

enum class NoiseKind { gaussian_blur, salt_pepper, contour_perturb };

/// Only the fields relevant to `kind` are consulted.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian_blur;
    double blur_sigma = 15.0;       // pixels
    double sp_density = 0.3;        // fraction of pixels hit
    double perturb_sigma = 3.0;     // pixels, per-point Gaussian offsets
    std::uint64_t seed = 0;
};

/// A synthetic image together with its ground-truth contours.
struct Scene {
    GrayImage image;
    std::vector<Contour> truth;
};

/// Annulus test image: 1.0 between the two circles, 0.0 elsewhere. The white
/// region is exactly the even-odd XOR of the two returned polygon interiors,
/// so ground truth and raster stay consistent at boundary pixels.
inline Scene make_donut(int width, int height, double outer_radius, double inner_radius,
                        Point2 center, int n_points = 200) {
    if (inner_radius <= 0 || inner_radius >= outer_radius)
        throw error("make_donut: need 0 < inner_radius < outer_radius");
    if (center.x - outer_radius < 0 || center.x + outer_radius > width - 1 ||
        center.y - outer_radius < 0 || center.y + outer_radius > height - 1)
        throw error("make_donut: annulus exceeds image bounds");
    Scene s;
    s.truth.push_back(circle_contour(center, outer_radius, n_points));
    s.truth.push_back(circle_contour(center, inner_radius, n_points));
    PixelRegion white = region_from_contours(s.truth, width, height);
    s.image = GrayImage(width, height, 0.0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (white.at(x, y)) s.image.at(x, y) = 1.0;
    return s;
}

struct BlobShape {
    enum Kind { disk, annulus } kind = disk;
    Point2 center;
    double r_out = 10.0;
    double r_in = 0.0;   // annulus only
    double level = 1.0;  // constant grayscale in [0,1]
};

/// Paints shapes in order (later shapes overwrite earlier ones) on a black
/// background; ground-truth contours are returned in declaration order, an
/// annulus contributing its outer then inner circle.
inline Scene make_blob_scene(int width, int height, const std::vector<BlobShape>& shapes,
                             int n_points = 200) {
    Scene s;
    s.image = GrayImage(width, height, 0.0);
    for (const BlobShape& b : shapes) {
        if (b.level < 0.0 || b.level > 1.0) throw error("make_blob_scene: level outside [0,1]");
        std::vector<Contour> cs;
        cs.push_back(circle_contour(b.center, b.r_out, n_points));
        if (b.kind == BlobShape::annulus) {
            if (b.r_in <= 0 || b.r_in >= b.r_out)
                throw error("make_blob_scene: annulus needs 0 < r_in < r_out");
            cs.push_back(circle_contour(b.center, b.r_in, n_points));
        }
        PixelRegion r = region_from_contours(cs, width, height);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (r.at(x, y)) s.image.at(x, y) = b.level;
        for (Contour& c : cs) s.truth.push_back(std::move(c));
    }
    return s;
}

/// The multi-level annulus-plus-dots scene used to contrast value-only
/// clustering with the topological pipeline. The lower-right dot carries the
/// lowest intermediate level.
inline Scene figure5_scene(int width = 256, int height = 256) {
    double sx = width / 256.0, sy = height / 256.0;
    std::vector<BlobShape> shapes;
    shapes.push_back({BlobShape::annulus, {128 * sx, 128 * sy}, 62 * sx, 34 * sx, 1.0});
    shapes.push_back({BlobShape::disk, {200 * sx, 200 * sy}, 11 * sx, 0, 0.18});
    shapes.push_back({BlobShape::disk, {56 * sx, 200 * sy}, 11 * sx, 0, 0.45});
    shapes.push_back({BlobShape::disk, {200 * sx, 56 * sy}, 11 * sx, 0, 0.62});
    shapes.push_back({BlobShape::disk, {56 * sx, 56 * sy}, 11 * sx, 0, 0.80});
    return make_blob_scene(width, height, shapes);
}

/// Isotropic Gaussian convolution, kernel radius ceil(3*sigma), replicated
/// border, output clipped to [0,1].
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0) throw error("gaussian_blur: sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;

    const int w = img.width(), h = img.height();
    GrayImage tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * img.at(std::clamp(x + i, 0, w - 1), y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1));
            out.at(x, y) = std::clamp(acc, 0.0, 1.0);
        }
    return out;
}

inline Scene apply_noise(const GrayImage& img, const std::vector<Contour>& contours,
                         const NoiseSpec& spec) {
    Scene s{img, contours};
    switch (spec.kind) {
        case NoiseKind::gaussian_blur:
            s.image = gaussian_blur(img, spec.blur_sigma);
            break;
        case NoiseKind::salt_pepper: {
            if (spec.sp_density < 0.0 || spec.sp_density > 1.0)
                throw error("apply_noise: sp_density outside [0,1]");
            Rng rng(spec.seed);
            std::size_t n = img.size();
            std::size_t hits = static_cast<std::size_t>(std::floor(spec.sp_density * n + 0.5));
            for (std::size_t i : rng.sample_indices(n, hits))
                s.image.values()[i] = rng.below(2) ? 1.0 : 0.0;
            break;
        }
        case NoiseKind::contour_perturb: {
            if (spec.perturb_sigma < 0) throw error("apply_noise: perturb_sigma must be >= 0");
            Rng rng(spec.seed);
            s.truth.clear();
            for (const Contour& c : contours) {
                std::vector<Point2> pts = c.points();
                for (Point2& p : pts) {
                    p.x += spec.perturb_sigma * rng.normal();
                    p.y += spec.perturb_sigma * rng.normal();
                }
                s.truth.emplace_back(std::move(pts));
            }
            PixelRegion white = region_from_contours(s.truth, img.width(), img.height());
            s.image = GrayImage(img.width(), img.height(), 0.0);
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x)
                    if (white.at(x, y)) s.image.at(x, y) = 1.0;
            break;
        }
    }
    return s;
}

}  // namespace topbac
