// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "topbac/contour.hpp"
#include "topbac/image.hpp"
#include "topbac/srvf.hpp"

namespace topbac {

namespace detail {

// finite stand-in for "no member pixel here"; squared pixel distances stay
// far below it, and it keeps the parabola intersections NaN-free
inline constexpr double kEdtFar = 1e15;

/// 1-D squared Euclidean distance transform (Felzenszwalb-Huttenlocher).
inline void edt_1d(const std::vector<double>& f, std::vector<double>& d, int n) {
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<int> v(n);
    std::vector<double> z(n + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        d[q] = (q - v[k]) * static_cast<double>(q - v[k]) + f[v[k]];
    }
}

/// exact squared distance to the nearest member pixel, everywhere
inline std::vector<double> edt_squared(const PixelRegion& r) {
    const int w = r.width(), h = r.height();
    std::vector<double> grid(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            grid[static_cast<std::size_t>(y) * w + x] = r.at(x, y) ? 0.0 : kEdtFar;
    std::vector<double> col(h), dcol(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[y] = grid[static_cast<std::size_t>(y) * w + x];
        edt_1d(col, dcol, h);
        for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = dcol[y];
    }
    std::vector<double> row(w), drow(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) row[x] = grid[static_cast<std::size_t>(y) * w + x];
        edt_1d(row, drow, w);
        for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y) * w + x] = drow[x];
    }
    return grid;
}

struct OverlapCounts {
    std::size_t both = 0, only_a = 0, only_b = 0, neither = 0;
};

inline OverlapCounts overlaps(const PixelRegion& a, const PixelRegion& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw error("metrics: region dimensions differ");
    OverlapCounts c;
    for (std::size_t i = 0; i < a.mask().size(); ++i) {
        bool ia = a.mask()[i], ib = b.mask()[i];
        if (ia && ib) ++c.both;
        else if (ia) ++c.only_a;
        else if (ib) ++c.only_b;
        else ++c.neither;
    }
    return c;
}

}  // namespace detail

/// Exact Hausdorff distance between member-pixel centers.
inline double hausdorff(const PixelRegion& a, const PixelRegion& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw error("hausdorff: region dimensions differ");
    if (a.count() == 0 || b.count() == 0) throw error("hausdorff: empty region");
    std::vector<double> db = detail::edt_squared(b);
    std::vector<double> da = detail::edt_squared(a);
    double worst = 0.0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            std::size_t i = static_cast<std::size_t>(y) * a.width() + x;
            if (a.mask()[i]) worst = std::max(worst, db[i]);
            if (b.mask()[i]) worst = std::max(worst, da[i]);
        }
    return std::sqrt(worst);
}

/// Symmetrized directional Hamming distance between the two-region partitions
/// {A, A^c} and {B, B^c}, normalized by 2|S|, with regions paired by role
/// (estimate region to truth region). Lower is better.
inline double hamming(const PixelRegion& a, const PixelRegion& b) {
    detail::OverlapCounts c = detail::overlaps(a, b);
    const double total = static_cast<double>(a.mask().size());
    // mass of each region overlapping the non-corresponding region of the
    // other partition; both directions count the symmetric difference
    double d12 = static_cast<double>(c.only_b) + static_cast<double>(c.only_a);
    double d21 = static_cast<double>(c.only_a) + static_cast<double>(c.only_b);
    return (d12 + d21) / (2.0 * total);
}

/// 1 - |A n B| / |A u B|; both empty gives 0.
inline double jaccard_distance(const PixelRegion& a, const PixelRegion& b) {
    detail::OverlapCounts c = detail::overlaps(a, b);
    std::size_t uni = c.both + c.only_a + c.only_b;
    if (uni == 0) return 0.0;
    return 1.0 - static_cast<double>(c.both) / static_cast<double>(uni);
}

/// 1 - TP/(TP+FP+FN) over pixels; algebraically equal to jaccard_distance.
inline double pm(const PixelRegion& a, const PixelRegion& b) {
    detail::OverlapCounts c = detail::overlaps(a, b);
    std::size_t denom = c.both + c.only_a + c.only_b;
    if (denom == 0) return 0.0;
    return 1.0 - static_cast<double>(c.both) / static_cast<double>(denom);
}

struct EsdReport {
    std::vector<double> distances;  // per matched pair, both lists area-sorted
    int unmatched_estimate = 0;
    int unmatched_truth = 0;
};

/// Elastic shape distances between estimate/truth contours matched by
/// descending enclosed area.
inline EsdReport esd_report(std::vector<Contour> est, std::vector<Contour> truth,
                            int n_points = 200) {
    auto by_area = [](const Contour& a, const Contour& b) { return a.area() > b.area(); };
    std::stable_sort(est.begin(), est.end(), by_area);
    std::stable_sort(truth.begin(), truth.end(), by_area);
    EsdReport r;
    std::size_t m = std::min(est.size(), truth.size());
    for (std::size_t i = 0; i < m; ++i)
        r.distances.push_back(elastic_distance(est[i], truth[i], n_points));
    r.unmatched_estimate = static_cast<int>(est.size() - m);
    r.unmatched_truth = static_cast<int>(truth.size() - m);
    return r;
}

struct MetricsReport {
    double hausdorff = 0.0;
    double hamming = 0.0;
    double jaccard_distance = 0.0;
    double pm = 0.0;
    EsdReport esd;

    nlohmann::json to_json() const {
        return {{"hausdorff", hausdorff},
                {"hamming", hamming},
                {"jaccard_distance", jaccard_distance},
                {"pm", pm},
                {"esd", esd.distances},
                {"esd_unmatched_estimate", esd.unmatched_estimate},
                {"esd_unmatched_truth", esd.unmatched_truth}};
    }

    /// aligned text table in the usual row order
    std::string to_table(const std::string& column = "value") const {
        std::ostringstream os;
        os << std::left << std::setw(22) << "Measure" << column << "\n";
        auto row = [&](const std::string& name, double v) {
            os << std::left << std::setw(22) << name << std::fixed << std::setprecision(4) << v
               << "\n";
        };
        row("d_H (Hausdorff)", hausdorff);
        row("p_H (Hamming)", hamming);
        row("d_J (Jaccard)", jaccard_distance);
        row("PM (discovery rate)", pm);
        for (std::size_t i = 0; i < esd.distances.size(); ++i)
            row("ESD " + std::to_string(i + 1), esd.distances[i]);
        if (esd.unmatched_estimate > 0)
            os << "unmatched estimate contours: " << esd.unmatched_estimate << "\n";
        if (esd.unmatched_truth > 0)
            os << "unmatched truth contours: " << esd.unmatched_truth << "\n";
        return os.str();
    }
};

/// All five measures for one estimate / ground truth pair. Regions are the
/// even-odd interiors of each side's contour set.
inline MetricsReport evaluate(const std::vector<Contour>& est, const std::vector<Contour>& truth,
                              int width, int height, int n_points = 200) {
    PixelRegion ra = region_from_contours(est, width, height);
    PixelRegion rb = region_from_contours(truth, width, height);
    MetricsReport r;
    r.hausdorff = hausdorff(ra, rb);
    r.hamming = hamming(ra, rb);
    r.jaccard_distance = jaccard_distance(ra, rb);
    r.pm = pm(ra, rb);
    r.esd = esd_report(est, truth, n_points);
    return r;
}

}  // namespace topbac
