// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "topbac/active_contour.hpp"
#include "topbac/contour.hpp"
#include "topbac/density.hpp"
#include "topbac/image_io.hpp"
#include "topbac/metrics.hpp"
#include "topbac/rng.hpp"
#include "topbac/topo.hpp"

namespace topbac {

/// Raised when the TOP stage cannot supply a usable initialization.
class init_failure : public error {
public:
    using error::error;
};

struct TrainingSet {
    std::vector<GrayImage> images;
    std::vector<std::vector<Contour>> truths;  // aligned with images

    std::size_t size() const { return images.size(); }
};

/// Directory convention: every PNG/PGM image plus sidecar contour files named
/// `<stem>_gt<j>.csv`, one vertex per row as x,y.
inline TrainingSet load_training_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    TrainingSet ts;
    if (!fs::is_directory(dir)) throw error("load_training_dir: '" + dir + "' is not a directory");
    std::vector<fs::path> images;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        for (auto& c : ext) c = static_cast<char>(std::tolower(c));
        if (ext == ".png" || ext == ".pgm") images.push_back(e.path());
    }
    std::sort(images.begin(), images.end());
    for (const fs::path& p : images) {
        std::vector<Contour> truth;
        for (int j = 1;; ++j) {
            fs::path gt = p.parent_path() / (p.stem().string() + "_gt" + std::to_string(j) + ".csv");
            if (!fs::exists(gt)) break;
            truth.push_back(load_contour_csv(gt.string()));
        }
        if (truth.empty()) continue;  // image without ground truth is skipped
        ts.images.push_back(load_image(p.string()));
        ts.truths.push_back(std::move(truth));
    }
    if (ts.images.empty())
        throw error("load_training_dir: no image with _gt*.csv sidecars found in '" + dir + "'");
    return ts;
}

/// One density pair pooled across the whole training set: interior samples
/// from the even-odd region of each image's contours, exterior from the
/// complement.
inline std::pair<ValueDensity, ValueDensity> estimate_pixel_densities(const TrainingSet& train,
                                                                      double bandwidth,
                                                                      DensityKind kind) {
    if (train.size() == 0) throw error("estimate_pixel_densities: empty training set");
    std::vector<double> inside, outside;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const GrayImage& img = train.images[i];
        PixelRegion r = region_from_contours(train.truths[i], img.width(), img.height());
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                (r.at(x, y) ? inside : outside).push_back(img.at(x, y));
    }
    if (inside.empty()) throw error("estimate_pixel_densities: ground truth has empty interior");
    if (outside.empty()) throw error("estimate_pixel_densities: ground truth has empty exterior");
    return {fit_value_density(inside, bandwidth, kind), fit_value_density(outside, bandwidth, kind)};
}

namespace detail {

/// mean distance from the vertices of one contour to the polygon of another
inline double mean_contour_distance(const Contour& a, const Contour& b) {
    double acc = 0.0;
    const std::size_t nb = b.size();
    for (const Point2& p : a.points()) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < nb; ++j)
            best = std::min(best, point_segment_dist(p, b[j], b[(j + 1) % nb]));
        acc += best;
    }
    return acc / static_cast<double>(a.size());
}

}  // namespace detail

/// Drops loops that run along the image border and collapses coincident
/// traces of the same physical boundary (a region boundary appears once per
/// adjacent cluster). Input must be area-descending; output keeps that order.
inline std::vector<TracedLoop> filter_candidate_loops(std::vector<TracedLoop> loops) {
    std::vector<TracedLoop> kept;
    for (TracedLoop& t : loops) {
        if (t.border_touching) continue;
        bool duplicate = false;
        for (const TracedLoop& k : kept) {
            if (std::abs(k.area - t.area) > 0.01 * std::max(k.area, 1.0)) continue;
            if (dist(k.contour.centroid(), t.contour.centroid()) > 1.5) continue;
            if (detail::mean_contour_distance(t.contour, k.contour) < 0.75) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) kept.push_back(std::move(t));
    }
    return kept;
}

/// TOP stage of the pipeline: segmentation, loop tracing, border exclusion,
/// dedup. Largest enclosed area first.
inline std::vector<TracedLoop> top_initial_contours(const GrayImage& img, const TopParams& p,
                                                    int n_points, SegmentResult* seg_out = nullptr) {
    SegmentResult seg = segment(img, p);
    std::vector<TracedLoop> loops = filter_candidate_loops(extract_cluster_loops(seg, n_points));
    if (seg_out) *seg_out = std::move(seg);
    return loops;
}

enum class SelectionRule { descending_area, largest_smallest };

inline std::string to_string(SelectionRule r) {
    return r == SelectionRule::descending_area ? "descending_area" : "largest_smallest";
}

inline SelectionRule selection_rule_from_string(const std::string& s) {
    if (s == "descending_area") return SelectionRule::descending_area;
    if (s == "largest_smallest") return SelectionRule::largest_smallest;
    throw error("unknown selection rule '" + s + "'");
}

struct PipelineParams {
    TopParams top;
    EnergyWeights weights;
    double bandwidth = 0.05;
    DensityKind estimator = DensityKind::gaussian_kde;
    int n_points = 200;
    double tol = 1e-7;
    int max_iter = 500;
    int keep = 2;  // contours to refine
    SelectionRule selection = SelectionRule::descending_area;
    std::uint64_t seed = 0;
};

struct StageTiming {
    double top_seconds = 0.0;
    double density_seconds = 0.0;
    double evolve_seconds = 0.0;
};

struct SegmentationResult {
    std::vector<Contour> initial;
    std::vector<int> initial_clusters;  // TOP cluster id per contour, -1 if n/a
    std::vector<EvolutionState> finals;
    PipelineParams params;
    StageTiming timing;
    bool kept_fewer_than_requested = false;
    int top_contour_count = 0;

    bool any_degenerate() const {
        for (const EvolutionState& st : finals)
            if (st.self_intersected || st.stop_reason == StopReason::degenerate) return true;
        return false;
    }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// densities estimated empirically from one TOP cluster: interior from the
/// cluster's pixels, exterior from a 10-pixel band outside it
inline std::pair<ValueDensity, ValueDensity> cluster_band_densities(const GrayImage& img,
                                                                    const SegmentResult& seg,
                                                                    int cluster, double bandwidth,
                                                                    DensityKind kind) {
    PixelRegion mask(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (seg.labels[static_cast<std::size_t>(y) * img.width() + x] == cluster)
                mask.set(x, y, true);
    std::vector<double> d2 = edt_squared(mask);
    std::vector<double> inside, outside;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            std::size_t i = static_cast<std::size_t>(y) * img.width() + x;
            if (mask.mask()[i]) inside.push_back(img.at(x, y));
            else if (d2[i] <= 100.0) outside.push_back(img.at(x, y));
        }
    if (inside.empty() || outside.empty())
        throw error("cluster_band_densities: degenerate cluster");
    return {fit_value_density(inside, bandwidth, kind), fit_value_density(outside, bandwidth, kind)};
}

}  // namespace detail

/// TOP followed by independent contour refinements. Without a training set,
/// the value densities are estimated per contour from its TOP cluster and a
/// 10-pixel exterior band.
inline SegmentationResult top_bac(const GrayImage& img, const TrainingSet* train,
                                  const PipelineParams& params, const ShapePrior* prior = nullptr) {
    params.weights.validate();
    if (params.weights.lambda3 > 0 && !prior && !train)
        throw error("top_bac: lambda3 > 0 requires training contours for the shape prior");

    SegmentationResult out;
    out.params = params;

    auto t0 = std::chrono::steady_clock::now();
    SegmentResult seg;
    std::vector<TracedLoop> loops = top_initial_contours(img, params.top, params.n_points, &seg);
    out.timing.top_seconds = detail::seconds_since(t0);
    out.top_contour_count = static_cast<int>(loops.size());

    const double min_usable_area = 0.05 * img.width() * img.height();
    bool usable = false;
    for (const TracedLoop& t : loops)
        if (t.area >= min_usable_area) usable = true;
    if (loops.empty() || !usable)
        throw init_failure(
            "top_bac: TOP produced " + std::to_string(loops.size()) +
            " candidate contours, none enclosing at least 5% of the image; the pixel noise is "
            "likely too high for an automatic initialization. Adjust (sigma1, sigma2, T), "
            "denoise, or supply a manual initialization.");

    std::vector<TracedLoop> selected;
    if (params.selection == SelectionRule::largest_smallest) {
        selected.push_back(loops.front());
        if (loops.size() > 1) selected.push_back(loops.back());
        if (params.keep > 2) out.kept_fewer_than_requested = true;
    } else {
        for (int i = 0; i < params.keep && i < static_cast<int>(loops.size()); ++i)
            selected.push_back(loops[i]);
    }
    if (static_cast<int>(selected.size()) < params.keep) out.kept_fewer_than_requested = true;

    t0 = std::chrono::steady_clock::now();
    std::optional<std::pair<ValueDensity, ValueDensity>> pooled;
    if (train)
        pooled = estimate_pixel_densities(*train, params.bandwidth, params.estimator);

    std::optional<ShapePrior> trained_prior;
    const ShapePrior* active_prior = prior;
    if (params.weights.lambda3 > 0 && !active_prior) {
        std::vector<Contour> all;
        for (const auto& list : train->truths)
            for (const Contour& c : list) all.push_back(c);
        trained_prior = fit_prior(all, 0.95, params.n_points);
        active_prior = &*trained_prior;
    }
    out.timing.density_seconds = detail::seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    EvolveOptions opts;
    opts.tol = params.tol;
    opts.max_iter = params.max_iter;
    opts.n_points = params.n_points;
    for (const TracedLoop& t : selected) {
        std::pair<ValueDensity, ValueDensity> dens =
            pooled ? *pooled
                   : detail::cluster_band_densities(img, seg, t.cluster, params.bandwidth,
                                                    params.estimator);
        out.initial.push_back(t.contour);
        out.initial_clusters.push_back(t.cluster);
        out.finals.push_back(evolve(img, t.contour, dens.first, dens.second, active_prior,
                                    params.weights, opts));
    }
    out.timing.evolve_seconds = detail::seconds_since(t0);
    return out;
}

/// Contour screening heuristics, applied in order: area floor, centroid
/// proximity to a reference point, then keep the m most circular by elastic
/// distance to a circle (scale-invariant).
inline std::vector<Contour> filter_contours(const std::vector<Contour>& contours, double min_area,
                                            std::optional<std::pair<Point2, double>> center_within,
                                            std::optional<int> keep_most_circular,
                                            int n_points = 200) {
    std::vector<Contour> kept;
    for (const Contour& c : contours) {
        if (c.area() < min_area) continue;
        if (center_within && dist(c.centroid(), center_within->first) > center_within->second)
            continue;
        kept.push_back(c);
    }
    if (keep_most_circular && static_cast<int>(kept.size()) > *keep_most_circular) {
        Contour circle = circle_contour({0, 0}, 1.0, n_points);
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t i = 0; i < kept.size(); ++i)
            scored.push_back({elastic_distance(circle, kept[i], n_points), i});
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<Contour> top;
        std::vector<std::size_t> order;
        for (int i = 0; i < *keep_most_circular; ++i) order.push_back(scored[i].second);
        std::sort(order.begin(), order.end());  // stay a subsequence of the input
        for (std::size_t i : order) top.push_back(kept[i]);
        kept = std::move(top);
    }
    return kept;
}

struct KmeansResult {
    std::vector<int> labels;  // row-major, 0..k_effective-1 ordered by centroid
    std::vector<double> centroids;
    int k_effective = 0;
    std::vector<TracedLoop> contours;  // filtered like the TOP candidates
};

/// 1-D k-means over grayscale values with a k-means++ style seeded start;
/// cluster boundaries traced like the TOP output.
inline KmeansResult kmeans_baseline(const GrayImage& img, int k, std::uint64_t seed,
                                    int n_points = 200, int max_iter = 100, double tol = 1e-6) {
    if (k < 2) throw error("kmeans_baseline: k must be at least 2");
    const std::vector<double>& v = img.values();
    Rng rng(seed);

    std::vector<double> centers;
    centers.push_back(v[rng.below(v.size())]);
    std::vector<double> d2(v.size());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double c : centers) best = std::min(best, (v[i] - c) * (v[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centers.push_back(centers.back());  // all mass covered; duplicate
            continue;
        }
        double r = rng.uniform() * total;
        std::size_t pick = 0;
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            acc += d2[i];
            if (acc >= r) { pick = i; break; }
        }
        centers.push_back(v[pick]);
    }

    std::vector<int> assign(v.size(), 0);
    for (int it = 0; it < max_iter; ++it) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                double d = (v[i] - centers[c]) * (v[i] - centers[c]);
                if (d < bd) { bd = d; best = c; }
            }
            assign[i] = best;
        }
        std::vector<double> sum(k, 0.0), cnt(k, 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) {
            sum[assign[i]] += v[i];
            cnt[assign[i]] += 1.0;
        }
        double moved = 0.0;
        for (int c = 0; c < k; ++c) {
            if (cnt[c] == 0.0) continue;
            double nc = sum[c] / cnt[c];
            moved = std::max(moved, std::abs(nc - centers[c]));
            centers[c] = nc;
        }
        if (moved < tol) break;
    }

    // compact nonempty clusters, ordered by centroid value
    std::vector<std::pair<double, int>> order;
    std::vector<bool> nonempty(k, false);
    for (int a : assign) nonempty[a] = true;
    for (int c = 0; c < k; ++c)
        if (nonempty[c]) order.push_back({centers[c], c});
    std::sort(order.begin(), order.end());
    // merge clusters whose centroids coincide (constant regions)
    std::vector<int> remap(k, -1);
    int next = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0 && std::abs(order[i].first - order[i - 1].first) < 1e-12)
            remap[order[i].second] = remap[order[i - 1].second];
        else
            remap[order[i].second] = next++;
    }

    KmeansResult out;
    out.k_effective = next;
    out.labels.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.labels[i] = remap[assign[i]];
    out.centroids.resize(next, 0.0);
    std::vector<double> cnt(next, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.centroids[out.labels[i]] += v[i];
        cnt[out.labels[i]] += 1.0;
    }
    for (int c = 0; c < next; ++c) out.centroids[c] /= std::max(cnt[c], 1.0);

    SegmentResult fake;
    fake.width = img.width();
    fake.height = img.height();
    fake.num_clusters = next;
    fake.labels = out.labels;
    out.contours = filter_candidate_loops(extract_cluster_loops(fake, n_points));
    return out;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

inline nlohmann::json params_to_json(const PipelineParams& p) {
    return {{"sigma1", p.top.sigma1},
            {"sigma2", p.top.sigma2},
            {"threshold", p.top.threshold},
            {"ms_step_tol", p.top.step_tol},
            {"ms_max_iter", p.top.max_iter},
            {"trunc_factor", p.top.trunc_factor},
            {"lambda1", p.weights.lambda1},
            {"lambda2", p.weights.lambda2},
            {"lambda3", p.weights.lambda3},
            {"epsilon", p.weights.epsilon},
            {"bandwidth", p.bandwidth},
            {"estimator", to_string(p.estimator)},
            {"n_points", p.n_points},
            {"tol", p.tol},
            {"max_iter", p.max_iter},
            {"keep", p.keep},
            {"selection", to_string(p.selection)},
            {"seed", p.seed}};
}

inline PipelineParams params_from_json(const nlohmann::json& j) {
    PipelineParams p;
    p.top.sigma1 = j.at("sigma1").get<double>();
    p.top.sigma2 = j.at("sigma2").get<double>();
    p.top.threshold = j.at("threshold").get<double>();
    p.top.step_tol = j.at("ms_step_tol").get<double>();
    p.top.max_iter = j.at("ms_max_iter").get<int>();
    p.top.trunc_factor = j.at("trunc_factor").get<double>();
    p.weights.lambda1 = j.at("lambda1").get<double>();
    p.weights.lambda2 = j.at("lambda2").get<double>();
    p.weights.lambda3 = j.at("lambda3").get<double>();
    p.weights.epsilon = j.at("epsilon").get<double>();
    p.bandwidth = j.at("bandwidth").get<double>();
    p.estimator = density_kind_from_string(j.at("estimator").get<std::string>());
    p.n_points = j.at("n_points").get<int>();
    p.tol = j.at("tol").get<double>();
    p.max_iter = j.at("max_iter").get<int>();
    p.keep = j.at("keep").get<int>();
    p.selection = selection_rule_from_string(j.at("selection").get<std::string>());
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

inline nlohmann::json contour_to_json(const Contour& c) {
    nlohmann::json j = nlohmann::json::array();
    for (const Point2& p : c.points()) j.push_back({p.x, p.y});
    return j;
}

/// Deterministic payload: timing is reported separately so reruns compare
/// byte-for-byte.
inline nlohmann::json result_to_json(const SegmentationResult& r, bool include_timing = false) {
    nlohmann::json jinit = nlohmann::json::array();
    for (const Contour& c : r.initial) jinit.push_back(contour_to_json(c));
    nlohmann::json jfin = nlohmann::json::array();
    for (const EvolutionState& st : r.finals) jfin.push_back(evolution_to_json(st));
    nlohmann::json j{{"initial", jinit},
                     {"initial_clusters", r.initial_clusters},
                     {"finals", jfin},
                     {"params", params_to_json(r.params)},
                     {"top_contour_count", r.top_contour_count},
                     {"kept_fewer_than_requested", r.kept_fewer_than_requested}};
    if (include_timing)
        j["timing"] = {{"top_seconds", r.timing.top_seconds},
                       {"density_seconds", r.timing.density_seconds},
                       {"evolve_seconds", r.timing.evolve_seconds}};
    return j;
}

}  // namespace topbac
