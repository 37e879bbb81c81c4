// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "topbac/image.hpp"

namespace topbac {

/// Closed planar curve as an ordered point list, point N-1 connecting back to
/// point 0. Orientation is normalized to positive shoelace area on
/// construction; consecutive points must not coincide.
class Contour {
public:
    Contour() = default;

    explicit Contour(std::vector<Point2> pts) : points_(std::move(pts)) {
        if (points_.size() < 3) throw error("Contour: need at least 3 points");
        const std::size_t n = points_.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (dist(points_[i], points_[(i + 1) % n]) < 1e-12)
                throw error("Contour: coincident consecutive points at index " + std::to_string(i));
        }
        if (signed_area(points_) < 0.0)
            std::reverse(points_.begin(), points_.end());
    }

    static double signed_area(const std::vector<Point2>& pts) {
        double a = 0.0;
        const std::size_t n = pts.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2& p = pts[i];
            const Point2& q = pts[(i + 1) % n];
            a += p.x * q.y - q.x * p.y;
        }
        return 0.5 * a;
    }

    const std::vector<Point2>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    const Point2& operator[](std::size_t i) const { return points_[i]; }

    double area() const { return std::abs(signed_area(points_)); }

    double perimeter() const {
        double len = 0.0;
        const std::size_t n = points_.size();
        for (std::size_t i = 0; i < n; ++i) len += dist(points_[i], points_[(i + 1) % n]);
        return len;
    }

    Point2 centroid() const {
        Point2 c{0, 0};
        for (const Point2& p : points_) c += p;
        return c / static_cast<double>(points_.size());
    }

    Contour translated(const Point2& d) const {
        std::vector<Point2> pts = points_;
        for (Point2& p : pts) p += d;
        return Contour(std::move(pts));
    }

private:
    std::vector<Point2> points_;
};

/// Regular N-gon approximation of a circle, counterclockwise.
inline Contour circle_contour(Point2 center, double radius, int n = 200) {
    std::vector<Point2> pts(n);
    for (int i = 0; i < n; ++i) {
        double t = 2.0 * std::numbers::pi * i / n;
        pts[i] = {center.x + radius * std::cos(t), center.y + radius * std::sin(t)};
    }
    return Contour(std::move(pts));
}

/// Resample a closed polyline to n points spaced uniformly by arc length,
/// keeping the first point anchored.
inline std::vector<Point2> resample_closed(const std::vector<Point2>& pts, int n) {
    const std::size_t m = pts.size();
    std::vector<double> cum(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        cum[i + 1] = cum[i] + dist(pts[i], pts[(i + 1) % m]);
    const double total = cum[m];
    if (total <= 0.0) throw error("resample: zero-length contour");
    std::vector<Point2> out(n);
    std::size_t seg = 0;
    for (int k = 0; k < n; ++k) {
        double s = total * k / n;
        while (seg + 1 < m && cum[seg + 1] <= s) ++seg;
        double ds = cum[seg + 1] - cum[seg];
        double t = ds > 0 ? (s - cum[seg]) / ds : 0.0;
        const Point2& a = pts[seg];
        const Point2& b = pts[(seg + 1) % m];
        out[k] = a + (b - a) * t;
    }
    return out;
}

inline Contour resample(const Contour& c, int n) {
    return Contour(resample_closed(c.points(), n));
}

/// Outward unit normals, using centered tangents on the closed grid.
inline std::vector<Point2> outward_normals(const Contour& c) {
    const std::size_t n = c.size();
    std::vector<Point2> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Point2 t = c[(i + 1) % n] - c[(i + n - 1) % n];
        double len = norm(t);
        if (len < 1e-14) { out[i] = {0, 0}; continue; }
        out[i] = Point2{t.y / len, -t.x / len};
    }
    return out;
}

/// Signed discrete curvature (Menger) per point; positive on convex arcs of a
/// positively-oriented contour.
inline std::vector<double> curvatures(const Contour& c) {
    const std::size_t n = c.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = c[(i + n - 1) % n];
        const Point2& b = c[i];
        const Point2& d = c[(i + 1) % n];
        double denom = dist(a, b) * dist(b, d) * dist(a, d);
        out[i] = denom < 1e-14 ? 0.0 : 2.0 * cross(b - a, d - b) / denom;
    }
    return out;
}

namespace detail {

inline bool proper_intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    double d1 = cross(b - a, c - a);
    double d2 = cross(b - a, d - a);
    double d3 = cross(d - c, a - c);
    double d4 = cross(d - c, b - c);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
           ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

inline double point_segment_dist(const Point2& p, const Point2& a, const Point2& b) {
    Point2 ab = b - a;
    double len2 = dot(ab, ab);
    double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    return dist(p, a + ab * t);
}

}  // namespace detail

/// First pair of non-adjacent segments that properly cross, if any.
inline std::optional<std::pair<int, int>> find_self_intersection(const Contour& c) {
    const int n = static_cast<int>(c.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // adjacent around the seam
            if (detail::proper_intersect(c[i], c[(i + 1) % n], c[j], c[(j + 1) % n]))
                return std::make_pair(i, j);
        }
    }
    return std::nullopt;
}

namespace detail {

/// Even-odd scanline fill of one closed polygon onto a pixel grid. Centers on
/// an edge are members. No simplicity requirement.
inline void fill_even_odd(const std::vector<Point2>& pts, PixelRegion& region) {
    const int w = region.width(), h = region.height();
    const std::size_t n = pts.size();
    double ymin = pts[0].y, ymax = pts[0].y, xmin = pts[0].x, xmax = pts[0].x;
    for (const Point2& p : pts) {
        ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
        xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
    }
    int y0 = std::max(0, static_cast<int>(std::ceil(ymin)));
    int y1 = std::min(h - 1, static_cast<int>(std::floor(ymax)));
    std::vector<double> xs;
    for (int y = y0; y <= y1; ++y) {
        xs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2& p = pts[i];
            const Point2& q = pts[(i + 1) % n];
            // half-open in y so shared vertices count once
            if ((p.y <= y && q.y > y) || (q.y <= y && p.y > y))
                xs.push_back(p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            int xa = std::max(0, static_cast<int>(std::ceil(xs[k])));
            int xb = std::min(w - 1, static_cast<int>(std::floor(xs[k + 1])));
            for (int x = xa; x <= xb; ++x) {
                // centers exactly at the right crossing belong to the edge pass
                if (x == xs[k + 1] && x != xs[k]) continue;
                region.set(x, y, !region.at(x, y));
            }
        }
    }
    // pixels whose center lies exactly on an edge are members
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& p = pts[i];
        const Point2& q = pts[(i + 1) % n];
        int bx0 = std::max(0, static_cast<int>(std::floor(std::min(p.x, q.x))));
        int bx1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(p.x, q.x))));
        int by0 = std::max(0, static_cast<int>(std::floor(std::min(p.y, q.y))));
        int by1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(p.y, q.y))));
        for (int y = by0; y <= by1; ++y)
            for (int x = bx0; x <= bx1; ++x)
                if (point_segment_dist({double(x), double(y)}, p, q) < 1e-9)
                    region.set(x, y, true);
    }
}

}  // namespace detail

/// Pixel-center interior of a simple closed contour by the even-odd rule;
/// pixels exactly on an edge are members. Throws on self-intersection.
inline PixelRegion rasterize_interior(const Contour& c, int width, int height) {
    if (auto hit = find_self_intersection(c))
        throw error("rasterize_interior: contour self-intersects (segments " +
                    std::to_string(hit->first) + " and " + std::to_string(hit->second) + ")");
    PixelRegion region(width, height);
    detail::fill_even_odd(c.points(), region);
    return region;
}

/// Combined even-odd region of several contours (per-contour fills XOR-ed).
/// Tolerates self-intersections; used wherever jagged curves must still
/// produce a region.
inline PixelRegion region_from_contours(const std::vector<Contour>& cs, int width, int height) {
    PixelRegion acc(width, height);
    for (const Contour& c : cs) {
        PixelRegion r(width, height);
        detail::fill_even_odd(c.points(), r);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (r.at(x, y)) acc.set(x, y, !acc.at(x, y));
    }
    return acc;
}

inline void save_contour_csv(const Contour& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error("save_contour_csv: cannot open '" + path + "'");
    out.precision(17);
    for (const Point2& p : c.points()) out << p.x << "," << p.y << "\n";
    if (!out) throw error("save_contour_csv: I/O failure writing '" + path + "'");
}

inline Contour load_contour_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("load_contour_csv: cannot open '" + path + "'");
    std::vector<Point2> pts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        Point2 p;
        if (ss >> p.x >> p.y) pts.push_back(p);
    }
    if (pts.size() < 3) throw error("load_contour_csv: '" + path + "': fewer than 3 points");
    return Contour(std::move(pts));
}

}  // namespace topbac
