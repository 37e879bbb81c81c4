// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "topbac/contour.hpp"
#include "topbac/density.hpp"
#include "topbac/shape_prior.hpp"

namespace topbac {

struct EnergyWeights {
    double lambda1 = 0.15;  // image term
    double lambda2 = 0.3;   // smoothness term
    double lambda3 = 0.0;   // shape prior term
    double epsilon = 0.3;   // prior step size

    void validate() const {
        if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0)
            throw error("EnergyWeights: weights must be nonnegative");
        if (lambda1 == 0 && lambda2 == 0 && lambda3 == 0)
            throw error("EnergyWeights: at least one weight must be positive");
        if (epsilon <= 0) throw error("EnergyWeights: epsilon must be positive");
    }
};

enum class StopReason { tolerance, max_iter, degenerate };

inline std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::tolerance: return "tolerance";
        case StopReason::max_iter: return "max_iter";
        default: return "degenerate";
    }
}

struct EvolutionState {
    Contour contour;
    int iteration = 0;
    std::vector<double> energy_history;  // length iteration + 1
    bool converged = false;
    StopReason stop_reason = StopReason::max_iter;
    bool self_intersected = false;
    std::vector<Contour> snapshots;
};

struct EvolveOptions {
    double tol = 1e-7;
    int max_iter = 500;
    int n_points = 200;
    int intersect_check_every = 10;
    int snapshot_every = 0;  // 0 disables contour snapshots
};

namespace detail {

/// per-pixel -log p terms, floored like log_ratio
struct PixelLogTerms {
    std::vector<double> lint;  // -log p_int(f)
    std::vector<double> lext;  // -log p_ext(f)
    double lext_total = 0.0;
    int width = 0, height = 0;

    PixelLogTerms(const GrayImage& img, const ValueDensity& d_int, const ValueDensity& d_ext) {
        width = img.width();
        height = img.height();
        lint.resize(img.size());
        lext.resize(img.size());
        for (std::size_t i = 0; i < img.size(); ++i) {
            double v = img.values()[i];
            lint[i] = -std::log(std::max(d_int(v), ValueDensity::kFloor));
            lext[i] = -std::log(std::max(d_ext(v), ValueDensity::kFloor));
            lext_total += lext[i];
        }
    }

    /// sum over the even-odd interior of lint, exterior of lext
    double energy(const std::vector<Point2>& pts) const {
        PixelRegion r(width, height);
        fill_even_odd(pts, r);
        double e = lext_total;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                std::size_t i = static_cast<std::size_t>(y) * width + x;
                if (r.mask()[i]) e += lint[i] - lext[i];
            }
        return e;
    }
};

}  // namespace detail

/// Image energy of a simple closed contour: interior pixels score against the
/// interior value density, exterior pixels against the exterior one.
inline double energy_image(const GrayImage& img, const Contour& c, const ValueDensity& d_int,
                           const ValueDensity& d_ext) {
    if (auto hit = find_self_intersection(c))
        throw error("energy_image: contour self-intersects (segments " +
                    std::to_string(hit->first) + " and " + std::to_string(hit->second) + ")");
    return detail::PixelLogTerms(img, d_int, d_ext).energy(c.points());
}

/// First-derivative smoothness energy, sum |c_{i+1}-c_i|^2 / dt with dt = 1/N.
inline double energy_smooth(const Contour& c) {
    const std::size_t n = c.size();
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Point2 d = c[(i + 1) % n] - c[i];
        e += dot(d, d);
    }
    return e * static_cast<double>(n);
}

/// Analytic gradient of energy_smooth with respect to vertex i.
inline std::vector<Point2> energy_smooth_gradient(const Contour& c) {
    const std::size_t n = c.size();
    std::vector<Point2> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = (c[i] * 2.0 - c[(i + n - 1) % n] - c[(i + 1) % n]) * (2.0 * static_cast<double>(n));
    return g;
}

/// Image gradient field: -log(p_int(f)/p_ext(f)) along the outward normal.
inline std::vector<Point2> image_update(const GrayImage& img, const Contour& c,
                                        const ValueDensity& d_int, const ValueDensity& d_ext) {
    std::vector<Point2> normals = outward_normals(c);
    std::vector<Point2> upd(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        double v = img.sample(c[i].x, c[i].y);
        upd[i] = normals[i] * (-log_ratio(d_int, d_ext, v));
    }
    return upd;
}

inline double total_energy(const GrayImage& img, const Contour& c, const ValueDensity& d_int,
                           const ValueDensity& d_ext, const ShapePrior* prior,
                           const EnergyWeights& w) {
    w.validate();
    double e = 0.0;
    if (w.lambda1 > 0) e += w.lambda1 * energy_image(img, c, d_int, d_ext);
    if (w.lambda2 > 0) e += w.lambda2 * energy_smooth(c);
    if (w.lambda3 > 0) {
        if (!prior) throw error("total_energy: lambda3 > 0 requires a shape prior");
        e += w.lambda3 * prior_energy(*prior, c);
    }
    return e;
}

/// Gradient-descent contour evolution: image, curvature, and prior updates
/// along the outward normal field, uniform arc-length resampling each step,
/// stop on relative energy change below tol or at max_iter. Self-intersection
/// is flagged, never repaired; collapse below 4 px of enclosed area stops the
/// run as degenerate.
inline EvolutionState evolve(const GrayImage& img, const Contour& init, const ValueDensity& d_int,
                             const ValueDensity& d_ext, const ShapePrior* prior,
                             const EnergyWeights& w, const EvolveOptions& opts = {}) {
    w.validate();
    if (w.lambda3 > 0 && !prior) throw error("evolve: lambda3 > 0 requires a shape prior");
    if (prior && prior->n_points != opts.n_points)
        throw error("evolve: n_points must match the prior discretization");

    detail::PixelLogTerms terms(img, d_int, d_ext);
    EvolutionState st;
    st.contour = resample(init, opts.n_points);

    auto lenient_total = [&](const Contour& c) {
        double e = 0.0;
        if (w.lambda1 > 0) e += w.lambda1 * terms.energy(c.points());
        if (w.lambda2 > 0) e += w.lambda2 * energy_smooth(c);
        if (w.lambda3 > 0) e += w.lambda3 * prior_energy(*prior, c);
        return e;
    };

    double prev = lenient_total(st.contour);
    st.energy_history.push_back(prev);
    const int n = opts.n_points;

    for (int it = 1; it <= opts.max_iter; ++it) {
        const Contour& c = st.contour;
        std::vector<Point2> normals = outward_normals(c);
        std::vector<double> kappa = curvatures(c);
        std::vector<Point2> prior_dir;
        if (w.lambda3 > 0) prior_dir = prior_update_direction(*prior, c, w.epsilon).direction;

        std::vector<Point2> next(n);
        for (int i = 0; i < n; ++i) {
            Point2 step{0, 0};
            if (w.lambda1 > 0) {
                double v = img.sample(c[i].x, c[i].y);
                step += normals[i] * (-log_ratio(d_int, d_ext, v)) * w.lambda1;
            }
            if (w.lambda2 > 0) step += normals[i] * kappa[i] * w.lambda2;
            if (w.lambda3 > 0) step += prior_dir[i] * w.lambda3;
            next[i] = c[i] - step;
            next[i].x = std::clamp(next[i].x, 0.0, static_cast<double>(img.width() - 1));
            next[i].y = std::clamp(next[i].y, 0.0, static_cast<double>(img.height() - 1));
        }

        try {
            st.contour = Contour(resample_closed(next, n));
        } catch (const error&) {
            // collapsed to (near) a point
            st.iteration = it;
            st.stop_reason = StopReason::degenerate;
            st.energy_history.push_back(st.energy_history.back());
            return st;
        }
        st.iteration = it;

        if (opts.snapshot_every > 0 && it % opts.snapshot_every == 0)
            st.snapshots.push_back(st.contour);
        if (opts.intersect_check_every > 0 && it % opts.intersect_check_every == 0 &&
            find_self_intersection(st.contour))
            st.self_intersected = true;

        if (st.contour.area() < 4.0) {
            st.stop_reason = StopReason::degenerate;
            st.energy_history.push_back(lenient_total(st.contour));
            return st;
        }

        double e = lenient_total(st.contour);
        st.energy_history.push_back(e);
        double rel = std::abs(e - prev) / (std::abs(prev) + 1e-12);
        prev = e;
        if (rel < opts.tol) {
            st.converged = true;
            st.stop_reason = StopReason::tolerance;
            break;
        }
        if (it == opts.max_iter) st.stop_reason = StopReason::max_iter;
    }
    // final check so short runs between periodic checks are not missed
    if (find_self_intersection(st.contour)) st.self_intersected = true;
    return st;
}

inline nlohmann::json evolution_to_json(const EvolutionState& st) {
    nlohmann::json jc = nlohmann::json::array();
    for (const Point2& p : st.contour.points()) jc.push_back({p.x, p.y});
    nlohmann::json js = nlohmann::json::array();
    for (const Contour& c : st.snapshots) {
        nlohmann::json one = nlohmann::json::array();
        for (const Point2& p : c.points()) one.push_back({p.x, p.y});
        js.push_back(std::move(one));
    }
    return {{"contour", jc},
            {"iterations", st.iteration},
            {"energy_history", st.energy_history},
            {"converged", st.converged},
            {"stop_reason", to_string(st.stop_reason)},
            {"self_intersected", st.self_intersected},
            {"snapshots", js}};
}

}  // namespace topbac
