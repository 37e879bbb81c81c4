// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "topbac/contour.hpp"
#include "topbac/density.hpp"
#include "topbac/image.hpp"
#include "topbac/parallel.hpp"

namespace topbac {

/// Mean-shift / persistence parameters. sigma2 follows the usual convention
/// of 8-bit grayscale levels and is divided by 255 internally; the
/// persistence threshold lives on a scale where the strongest mode density
/// is 100, which keeps thresholds transferable across image sizes.
struct TopParams {
    double sigma1 = 3.0;        // spatial bandwidth, pixels
    double sigma2 = 5.0;        // value bandwidth, 8-bit grayscale levels
    double threshold = 5.0;     // persistence merge threshold, 0..100 scale
    double step_tol = 1e-4;     // combined-metric step tolerance
    int max_iter = 200;
    double trunc_factor = 3.0;  // kernel cut at trunc_factor*sigma1; <= 0 disables

    double sigma_val() const { return sigma2 / 255.0; }
};

struct ModeSet {
    std::vector<FeaturePoint> modes;   // deduplicated fixed points, density-sorted
    std::vector<double> mode_density;  // nonincreasing
    std::vector<int> assignment;       // per-pixel mode index, row-major
    int width = 0;
    int height = 0;
};

struct MergeEvent {
    double threshold = 0.0;  // persistence at which the pair joins
    int mode_a = 0;
    int mode_b = 0;
};

struct ClusterHierarchy {
    ModeSet modes;
    std::map<std::pair<int, int>, double> saddle_value;  // raw density at the saddle
    std::map<std::pair<int, int>, double> persistence;   // rescaled, clamped at 0
    std::vector<std::pair<int, int>> sign_inconsistent;  // pairs with raw p < 0
    std::vector<MergeEvent> merge_tree;                  // nondecreasing thresholds
    double density_scale = 1.0;                          // 100 / max mode density
};

namespace detail {

struct MsStep {
    Point2 pos;
    double val;
    double density;  // kernel sum at the query
};

/// One kernel-weighted mean over the (possibly truncated) pixel window.
inline MsStep ms_step(const GrayImage& img, Point2 q, double qv, const TopParams& p) {
    const int w = img.width(), h = img.height();
    double radius = p.trunc_factor > 0 ? p.trunc_factor * p.sigma1
                                       : std::hypot(w, h) + 1.0;
    const double r2 = radius * radius;
    const double ip = 1.0 / (2.0 * p.sigma1 * p.sigma1);
    const double sv = p.sigma_val();
    const double iv = 1.0 / (2.0 * sv * sv);
    int x0 = std::max(0, static_cast<int>(std::floor(q.x - radius)));
    int x1 = std::min(w - 1, static_cast<int>(std::ceil(q.x + radius)));
    int y0 = std::max(0, static_cast<int>(std::floor(q.y - radius)));
    int y1 = std::min(h - 1, static_cast<int>(std::ceil(q.y + radius)));
    double sw = 0.0, sx = 0.0, sy = 0.0, svl = 0.0;
    for (int y = y0; y <= y1; ++y) {
        const double dy2 = (y - q.y) * (y - q.y);
        for (int x = x0; x <= x1; ++x) {
            const double d2 = (x - q.x) * (x - q.x) + dy2;
            if (d2 > r2) continue;
            const double dv = img.at(x, y) - qv;
            const double wgt = std::exp(-d2 * ip - dv * dv * iv);
            sw += wgt;
            sx += wgt * x;
            sy += wgt * y;
            svl += wgt * img.at(x, y);
        }
    }
    if (sw <= 0.0) return {q, qv, 0.0};
    return {{sx / sw, sy / sw}, svl / sw, sw};
}

}  // namespace detail

/// Kernel sum of the joint feature-space density at an arbitrary query point
/// (same kernel and truncation as the mode search).
inline double feature_density_at(const GrayImage& img, const FeaturePoint& q, const TopParams& p) {
    return detail::ms_step(img, q.position, q.value, p).density;
}

/// Full mean-shift trajectory from one pixel, ending when the combined-metric
/// step (spatial/sigma1 + value/sigma_val) drops below step_tol or max_iter
/// is reached. First entry is the pixel's own feature point.
inline std::vector<FeaturePoint> mean_shift_trajectory(const GrayImage& img, int px, int py,
                                                       const TopParams& p) {
    std::vector<FeaturePoint> traj;
    Point2 q{static_cast<double>(px), static_cast<double>(py)};
    double qv = img.at(px, py);
    traj.push_back({q, qv});
    const double sv = p.sigma_val();
    for (int it = 0; it < p.max_iter; ++it) {
        detail::MsStep s = detail::ms_step(img, q, qv, p);
        double step = dist(s.pos, q) / p.sigma1 + std::abs(s.val - qv) / sv;
        q = s.pos;
        qv = s.val;
        traj.push_back({q, qv});
        if (step < p.step_tol) break;
    }
    return traj;
}

/// Density of the per-pixel feature points evaluated at every pixel.
inline std::vector<double> feature_density_map(const GrayImage& img, const TopParams& p) {
    const int w = img.width(), h = img.height();
    std::vector<double> f(static_cast<std::size_t>(w) * h);
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t yb, std::size_t ye) {
        for (std::size_t y = yb; y < ye; ++y)
            for (int x = 0; x < w; ++x) {
                FeaturePoint q{{static_cast<double>(x), static_cast<double>(y)},
                               img.at(x, static_cast<int>(y))};
                f[y * w + x] = feature_density_at(img, q, p);
            }
    });
    return f;
}

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    // lower index wins as representative
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (a < b) parent[b] = a; else parent[a] = b;
        return true;
    }
};

}  // namespace detail

/// Per-pixel mean-shift mode extraction. Converged endpoints are merged
/// transitively when within 0.5*sigma1 spatially and 0.5*sigma_val in value;
/// trajectories that hit the iteration cap inherit a mode by steepest ascent
/// over the pixel-grid density, which keeps slow ramp pixels from spawning
/// spurious low-persistence modes.
inline ModeSet mean_shift_modes(const GrayImage& img, const TopParams& p) {
    const int w = img.width(), h = img.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const double sv = p.sigma_val();

    std::vector<Point2> epos(n);
    std::vector<double> eval_(n);
    std::vector<std::uint8_t> conv(n, 0);
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t yb, std::size_t ye) {
        for (std::size_t y = yb; y < ye; ++y)
            for (int x = 0; x < w; ++x) {
                Point2 q{static_cast<double>(x), static_cast<double>(y)};
                double qv = img.at(x, static_cast<int>(y));
                bool ok = false;
                for (int it = 0; it < p.max_iter; ++it) {
                    detail::MsStep s = detail::ms_step(img, q, qv, p);
                    double step = dist(s.pos, q) / p.sigma1 + std::abs(s.val - qv) / sv;
                    q = s.pos;
                    qv = s.val;
                    if (step < p.step_tol) { ok = true; break; }
                }
                std::size_t i = y * w + x;
                epos[i] = q;
                eval_[i] = qv;
                conv[i] = ok ? 1 : 0;
            }
    });

    // transitive dedup of converged endpoints via a spatial hash
    detail::UnionFind uf(static_cast<int>(n));
    const double cell = 0.5 * p.sigma1;
    std::map<std::pair<int, int>, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < n; ++i) {
        if (!conv[i]) continue;
        buckets[{static_cast<int>(std::floor(epos[i].x / cell)),
                 static_cast<int>(std::floor(epos[i].y / cell))}].push_back(i);
    }
    for (const auto& [key, members] : buckets) {
        for (std::size_t i : members) {
            for (int ox = -1; ox <= 1; ++ox)
                for (int oy = -1; oy <= 1; ++oy) {
                    auto it = buckets.find({key.first + ox, key.second + oy});
                    if (it == buckets.end()) continue;
                    for (std::size_t j : it->second) {
                        if (j <= i) continue;
                        if (dist(epos[i], epos[j]) <= 0.5 * p.sigma1 &&
                            std::abs(eval_[i] - eval_[j]) <= 0.5 * sv)
                            uf.unite(static_cast<int>(i), static_cast<int>(j));
                    }
                }
        }
    }

    std::vector<double> fhat = feature_density_map(img, p);

    // density at converged endpoints picks the component representative
    std::vector<double> edens(n, 0.0);
    std::vector<std::size_t> conv_idx;
    for (std::size_t i = 0; i < n; ++i)
        if (conv[i]) conv_idx.push_back(i);
    parallel_for(conv_idx.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            std::size_t i = conv_idx[k];
            edens[i] = feature_density_at(img, {epos[i], eval_[i]}, p);
        }
    });

    std::map<int, std::size_t> rep;  // component root -> representative endpoint
    for (std::size_t i : conv_idx) {
        int r = uf.find(static_cast<int>(i));
        auto it = rep.find(r);
        if (it == rep.end() || edens[i] > edens[it->second]) rep[r] = i;
    }

    std::vector<int> assign(n, -1);
    std::vector<std::size_t> mode_rep;
    std::map<int, int> root_to_mode;
    for (const auto& [root, ri] : rep) {
        root_to_mode[root] = static_cast<int>(mode_rep.size());
        mode_rep.push_back(ri);
    }
    for (std::size_t i : conv_idx) assign[i] = root_to_mode[uf.find(static_cast<int>(i))];

    // steepest-ascent completion for capped trajectories
    if (conv_idx.size() < n) {
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < n; ++i) {
            if (assign[i] >= 0) continue;
            stack.clear();
            std::size_t cur = i;
            while (assign[cur] < 0) {
                stack.push_back(cur);
                int cx = static_cast<int>(cur % w), cy = static_cast<int>(cur / w);
                double best = fhat[cur];
                std::size_t nxt = cur;
                for (int oy = -1; oy <= 1; ++oy)
                    for (int ox = -1; ox <= 1; ++ox) {
                        int mx = cx + ox, my = cy + oy;
                        if (mx < 0 || mx >= w || my < 0 || my >= h) continue;
                        std::size_t m = static_cast<std::size_t>(my) * w + mx;
                        if (fhat[m] > best) { best = fhat[m]; nxt = m; }
                    }
                if (nxt == cur) break;  // capped local max: becomes its own mode
                cur = nxt;
            }
            int mode = assign[cur];
            if (mode < 0) {
                mode = static_cast<int>(mode_rep.size());
                mode_rep.push_back(cur);
                assign[cur] = mode;
            }
            for (std::size_t s : stack) assign[s] = mode;
        }
    }

    // sort modes by density, nonincreasing; stable on ties by discovery order
    std::vector<int> order(mode_rep.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> mdens(mode_rep.size());
    for (std::size_t k = 0; k < mode_rep.size(); ++k) {
        std::size_t ri = mode_rep[k];
        mdens[k] = conv[ri] ? edens[ri] : feature_density_at(img, {epos[ri], eval_[ri]}, p);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return mdens[a] > mdens[b]; });
    std::vector<int> rank(mode_rep.size());
    for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = static_cast<int>(k);

    ModeSet ms;
    ms.width = w;
    ms.height = h;
    ms.modes.resize(mode_rep.size());
    ms.mode_density.resize(mode_rep.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        std::size_t ri = mode_rep[order[k]];
        ms.modes[k] = {epos[ri], eval_[ri]};
        ms.mode_density[k] = mdens[order[k]];
    }
    ms.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) ms.assignment[i] = rank[assign[i]];
    return ms;
}

inline ModeSet mean_shift_modes(const GrayImage& img, double sigma1, double sigma2) {
    TopParams p;
    p.sigma1 = sigma1;
    p.sigma2 = sigma2;
    return mean_shift_modes(img, p);
}

/// Saddle values and boundary persistences between spatially adjacent
/// clusters. The saddle between clusters j,k is the max over 4-adjacent pixel
/// pairs on their interface of min(density at the two feature points);
/// persistences are rescaled so the strongest mode sits at 100 and clamped at
/// zero, with raw-negative pairs recorded separately.
inline ClusterHierarchy compute_persistence(const GrayImage& img, const ModeSet& modes,
                                            const TopParams& p) {
    if (modes.modes.empty()) throw error("compute_persistence: empty mode set");
    ClusterHierarchy hy;
    hy.modes = modes;
    const int w = modes.width, h = modes.height;
    std::vector<double> fhat = feature_density_map(img, p);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            const int a = modes.assignment[i];
            for (int d = 0; d < 2; ++d) {
                int nx = x + (d == 0 ? 1 : 0), ny = y + (d == 0 ? 0 : 1);
                if (nx >= w || ny >= h) continue;
                std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                const int b = modes.assignment[j];
                if (a == b) continue;
                auto key = std::minmax(a, b);
                double v = std::min(fhat[i], fhat[j]);
                auto it = hy.saddle_value.find(key);
                if (it == hy.saddle_value.end() || v > it->second) hy.saddle_value[key] = v;
            }
        }

    double fmax = modes.mode_density.empty() ? 1.0 : modes.mode_density.front();
    hy.density_scale = fmax > 0 ? 100.0 / fmax : 1.0;
    for (const auto& [key, sv] : hy.saddle_value) {
        int lower = modes.mode_density[key.first] < modes.mode_density[key.second] ? key.first
                                                                                   : key.second;
        double raw = (modes.mode_density[lower] - sv) * hy.density_scale;
        if (raw < 0) hy.sign_inconsistent.push_back(key);
        hy.persistence[key] = std::max(raw, 0.0);
    }

    std::vector<std::pair<double, std::pair<int, int>>> pairs;
    for (const auto& [key, per] : hy.persistence) pairs.push_back({per, key});
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    detail::UnionFind uf(static_cast<int>(modes.modes.size()));
    for (const auto& [per, key] : pairs)
        if (uf.unite(key.first, key.second))
            hy.merge_tree.push_back({per, key.first, key.second});
    return hy;
}

struct SegmentResult {
    int width = 0;
    int height = 0;
    int num_clusters = 0;
    std::vector<int> labels;  // row-major cluster ids, 0..num_clusters-1
    PixelRegion boundary;     // pixels with a 4-neighbor of different label
    ClusterHierarchy hierarchy;
};

/// Full TOP stage: modes, persistences, merge of every pair below the
/// threshold, relabel, boundary map.
inline SegmentResult segment(const GrayImage& img, const TopParams& p) {
    if (p.threshold < 0) throw error("segment: threshold must be >= 0");
    SegmentResult r;
    r.width = img.width();
    r.height = img.height();
    ModeSet modes = mean_shift_modes(img, p);
    r.hierarchy = compute_persistence(img, modes, p);

    const int k = static_cast<int>(modes.modes.size());
    detail::UnionFind uf(k);
    for (const auto& [key, per] : r.hierarchy.persistence)
        if (per < p.threshold) uf.unite(key.first, key.second);

    std::vector<int> compact(k, -1);
    int next = 0;
    for (int m = 0; m < k; ++m) {
        int root = uf.find(m);
        if (compact[root] < 0) compact[root] = next++;
    }
    r.num_clusters = next;
    r.labels.resize(modes.assignment.size());
    for (std::size_t i = 0; i < r.labels.size(); ++i)
        r.labels[i] = compact[uf.find(modes.assignment[i])];

    r.boundary = PixelRegion(r.width, r.height);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) {
            int lab = r.labels[static_cast<std::size_t>(y) * r.width + x];
            bool edge = (x + 1 < r.width && r.labels[static_cast<std::size_t>(y) * r.width + x + 1] != lab) ||
                        (y + 1 < r.height && r.labels[(static_cast<std::size_t>(y) + 1) * r.width + x] != lab) ||
                        (x > 0 && r.labels[static_cast<std::size_t>(y) * r.width + x - 1] != lab) ||
                        (y > 0 && r.labels[(static_cast<std::size_t>(y) - 1) * r.width + x] != lab);
            if (edge) r.boundary.set(x, y, true);
        }
    return r;
}

inline SegmentResult segment(const GrayImage& img, double sigma1, double sigma2, double threshold) {
    TopParams p;
    p.sigma1 = sigma1;
    p.sigma2 = sigma2;
    p.threshold = threshold;
    return segment(img, p);
}

// ---------------------------------------------------------------------------
// marching squares on cluster masks
// ---------------------------------------------------------------------------

struct TracedLoop {
    Contour contour;
    int cluster = -1;
    double area = 0.0;
    bool border_touching = false;
};

namespace detail {

/// Iso-0.5 loops of a binary mask via marching squares on a zero-padded grid,
/// so regions touching the border close along it. Saddle cells resolve by the
/// four-corner average. Coordinates are in the original pixel frame.
inline std::vector<std::vector<Point2>> trace_mask_loops(const std::vector<std::uint8_t>& mask,
                                                         int w, int h) {
    const int pw = w + 2, ph = h + 2;
    auto val = [&](int x, int y) -> int {
        if (x < 1 || x > w || y < 1 || y > h) return 0;
        return mask[static_cast<std::size_t>(y - 1) * w + (x - 1)] ? 1 : 0;
    };
    // crossing point ids: horizontal edge (between (x,y) and (x+1,y)) and
    // vertical edge (between (x,y) and (x,y+1)) of the padded center grid
    auto hid = [&](int x, int y) { return 2 * (static_cast<std::size_t>(y) * pw + x); };
    auto vid = [&](int x, int y) { return 2 * (static_cast<std::size_t>(y) * pw + x) + 1; };
    std::map<std::size_t, std::array<std::size_t, 2>> adj;
    std::map<std::size_t, int> deg;
    auto link = [&](std::size_t a, std::size_t b) {
        if (deg[a] >= 2 || deg[b] >= 2)
            throw error("trace_mask_loops: crossing degree exceeds 2");
        adj[a][deg[a]++] = b;
        adj[b][deg[b]++] = a;
    };
    for (int y = 0; y + 1 < ph; ++y)
        for (int x = 0; x + 1 < pw; ++x) {
            int tl = val(x, y), tr = val(x + 1, y), br = val(x + 1, y + 1), bl = val(x, y + 1);
            int code = tl | (tr << 1) | (br << 2) | (bl << 3);
            if (code == 0 || code == 15) continue;
            std::size_t top = hid(x, y), bottom = hid(x, y + 1), left = vid(x, y),
                        right = vid(x + 1, y);
            switch (code) {
                case 1: case 14: link(left, top); break;
                case 2: case 13: link(top, right); break;
                case 3: case 12: link(left, right); break;
                case 4: case 11: link(right, bottom); break;
                case 6: case 9:  link(top, bottom); break;
                case 7: case 8:  link(left, bottom); break;
                // saddles: keep diagonal foreground pixels 4-connected (split)
                case 5:  link(left, top); link(right, bottom); break;
                case 10: link(top, right); link(left, bottom); break;
            }
        }
    auto coord = [&](std::size_t id) -> Point2 {
        std::size_t cell = id / 2;
        int x = static_cast<int>(cell % pw), y = static_cast<int>(cell / pw);
        // padded center (x,y) maps to original (x-1, y-1)
        if (id % 2 == 0) return {x - 1 + 0.5, static_cast<double>(y - 1)};
        return {static_cast<double>(x - 1), y - 1 + 0.5};
    };
    std::vector<std::vector<Point2>> loops;
    std::map<std::size_t, bool> used;
    for (const auto& [start, nbrs] : adj) {
        if (used[start]) continue;
        std::vector<Point2> loop;
        std::size_t prev = start, cur = nbrs[0];
        used[start] = true;
        loop.push_back(coord(start));
        while (cur != start) {
            used[cur] = true;
            loop.push_back(coord(cur));
            const auto& nb = adj[cur];
            std::size_t nxt = (nb[0] == prev) ? nb[1] : nb[0];
            prev = cur;
            cur = nxt;
        }
        if (loop.size() >= 3) loops.push_back(std::move(loop));
    }
    return loops;
}

}  // namespace detail

/// Traces the outer boundary and every hole of each cluster, resampling each
/// loop to n_points by uniform arc length; loops ordered by descending
/// enclosed area. Loops running along the image border are flagged.
inline std::vector<TracedLoop> extract_cluster_loops(const SegmentResult& seg, int n_points = 200) {
    std::vector<TracedLoop> out;
    const int w = seg.width, h = seg.height;
    for (int c = 0; c < seg.num_clusters; ++c) {
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = seg.labels[i] == c ? 1 : 0;
        for (auto& loop : detail::trace_mask_loops(mask, w, h)) {
            TracedLoop t;
            t.cluster = c;
            bool border = false;
            for (const Point2& p : loop)
                if (p.x < -0.25 || p.y < -0.25 || p.x > w - 0.75 || p.y > h - 0.75) border = true;
            t.border_touching = border;
            Contour raw(std::move(loop));
            t.contour = raw.size() == static_cast<std::size_t>(n_points) ? raw
                                                                         : resample(raw, n_points);
            t.area = t.contour.area();
            out.push_back(std::move(t));
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TracedLoop& a, const TracedLoop& b) { return a.area > b.area; });
    return out;
}

/// Contour list per the raw label map, largest enclosed area first.
inline std::vector<Contour> extract_contours(const SegmentResult& seg, int n_points = 200) {
    std::vector<Contour> cs;
    for (auto& t : extract_cluster_loops(seg, n_points)) cs.push_back(std::move(t.contour));
    return cs;
}

inline nlohmann::json hierarchy_to_json(const ClusterHierarchy& hy) {
    nlohmann::json jmodes = nlohmann::json::array();
    for (std::size_t k = 0; k < hy.modes.modes.size(); ++k)
        jmodes.push_back({{"x", hy.modes.modes[k].position.x},
                          {"y", hy.modes.modes[k].position.y},
                          {"value", hy.modes.modes[k].value},
                          {"density", hy.modes.mode_density[k]}});
    nlohmann::json jsad = nlohmann::json::array();
    for (const auto& [key, v] : hy.saddle_value)
        jsad.push_back({{"a", key.first}, {"b", key.second}, {"density", v},
                        {"persistence", hy.persistence.at(key)}});
    nlohmann::json jtree = nlohmann::json::array();
    for (const MergeEvent& e : hy.merge_tree)
        jtree.push_back({{"threshold", e.threshold}, {"a", e.mode_a}, {"b", e.mode_b}});
    return {{"modes", jmodes},
            {"saddles", jsad},
            {"merge_tree", jtree},
            {"density_scale", hy.density_scale}};
}

}  // namespace topbac
