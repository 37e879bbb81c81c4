// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "topbac/image.hpp"

namespace topbac {

enum class DensityKind { gaussian_kde, histogram };

inline std::string to_string(DensityKind k) {
    return k == DensityKind::gaussian_kde ? "gaussian_kde" : "histogram";
}

inline DensityKind density_kind_from_string(const std::string& s) {
    if (s == "gaussian_kde") return DensityKind::gaussian_kde;
    if (s == "histogram") return DensityKind::histogram;
    throw error("unknown density estimator '" + s + "'");
}

/// Density of grayscale values over [0,1], tabulated on a uniform grid with
/// linear interpolation in between, normalized so the trapezoid integral over
/// [0,1] is 1.
class ValueDensity {
public:
    static constexpr int kGridSize = 512;
    static constexpr double kFloor = 1e-10;  // applied before any log

    ValueDensity() = default;
    ValueDensity(DensityKind kind, double bandwidth, std::vector<double> grid_values)
        : kind_(kind), bandwidth_(bandwidth), values_(std::move(grid_values)) {
        normalize();
    }

    DensityKind kind() const { return kind_; }
    double bandwidth() const { return bandwidth_; }
    const std::vector<double>& grid_values() const { return values_; }

    double operator()(double v) const {
        v = std::clamp(v, 0.0, 1.0);
        double t = v * (values_.size() - 1);
        std::size_t i = std::min(static_cast<std::size_t>(t), values_.size() - 2);
        double f = t - i;
        return values_[i] * (1 - f) + values_[i + 1] * f;
    }

    double log_at(double v) const { return std::log(std::max((*this)(v), kFloor)); }

    nlohmann::json to_json() const {
        return {{"kind", to_string(kind_)},
                {"bandwidth", bandwidth_},
                {"grid_size", values_.size()},
                {"values", values_}};
    }

    static ValueDensity from_json(const nlohmann::json& j) {
        ValueDensity d;
        d.kind_ = density_kind_from_string(j.at("kind").get<std::string>());
        d.bandwidth_ = j.at("bandwidth").get<double>();
        d.values_ = j.at("values").get<std::vector<double>>();
        if (d.values_.size() < 2) throw error("ValueDensity: bad grid in JSON");
        d.normalize();
        return d;
    }

private:
    void normalize() {
        if (values_.size() < 2) throw error("ValueDensity: grid too small");
        double dx = 1.0 / (values_.size() - 1);
        double integral = 0.0;
        for (std::size_t i = 0; i + 1 < values_.size(); ++i)
            integral += 0.5 * (values_[i] + values_[i + 1]) * dx;
        if (integral <= 0.0) throw error("ValueDensity: zero mass");
        for (double& v : values_) v /= integral;
    }

    DensityKind kind_ = DensityKind::gaussian_kde;
    double bandwidth_ = 0.05;
    std::vector<double> values_;
};

/// Fixed-bandwidth Gaussian KDE or histogram over grayscale samples in [0,1].
/// KDE sums go through a fine binning of the samples above 4096 points; the
/// approximation error is far below the grid resolution for bandwidths of
/// interest (>= 0.005).
inline ValueDensity fit_value_density(const std::vector<double>& samples, double bandwidth,
                                      DensityKind kind) {
    if (samples.empty()) throw error("fit_value_density: empty sample set");
    if (bandwidth <= 0) throw error("fit_value_density: bandwidth must be positive");
    const int G = ValueDensity::kGridSize;
    std::vector<double> grid(G, 0.0);
    if (kind == DensityKind::histogram) {
        int nbins = std::max(1, static_cast<int>(std::ceil(1.0 / bandwidth)));
        std::vector<double> counts(nbins, 0.0);
        for (double v : samples) {
            int b = std::min(nbins - 1, static_cast<int>(std::clamp(v, 0.0, 1.0) * nbins));
            counts[b] += 1.0;
        }
        double width = 1.0 / nbins;
        for (int i = 0; i < G; ++i) {
            double x = static_cast<double>(i) / (G - 1);
            int b = std::min(nbins - 1, static_cast<int>(x * nbins));
            grid[i] = counts[b] / (samples.size() * width);
        }
    } else {
        const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
        const double norm = 1.0 / (samples.size() * bandwidth * std::sqrt(2.0 * std::numbers::pi));
        if (samples.size() <= 4096) {
            for (int i = 0; i < G; ++i) {
                double x = static_cast<double>(i) / (G - 1);
                double acc = 0.0;
                for (double v : samples) acc += std::exp(-(x - v) * (x - v) * inv2h2);
                grid[i] = acc * norm;
            }
        } else {
            constexpr int B = 2048;
            std::vector<double> counts(B, 0.0);
            for (double v : samples) {
                int b = std::min(B - 1, static_cast<int>(std::clamp(v, 0.0, 1.0) * B));
                counts[b] += 1.0;
            }
            for (int i = 0; i < G; ++i) {
                double x = static_cast<double>(i) / (G - 1);
                double acc = 0.0;
                for (int b = 0; b < B; ++b) {
                    if (counts[b] == 0.0) continue;
                    double c = (b + 0.5) / B;
                    acc += counts[b] * std::exp(-(x - c) * (x - c) * inv2h2);
                }
                grid[i] = acc * norm;
            }
        }
    }
    return ValueDensity(kind, bandwidth, std::move(grid));
}

/// log p_int(v) - log p_ext(v), both densities floored before the log.
inline double log_ratio(const ValueDensity& d_int, const ValueDensity& d_ext, double v) {
    return d_int.log_at(v) - d_ext.log_at(v);
}

/// Point of the joint (position, value) feature space.
struct FeaturePoint {
    Point2 position;
    double value = 0.0;
};

/// Unnormalized product-Gaussian kernel sum at `query`; only ratios and
/// ordering of these values are consumed downstream.
inline double feature_density(const std::vector<FeaturePoint>& points, const FeaturePoint& query,
                              double sigma_pos, double sigma_val) {
    if (points.empty()) throw error("feature_density: empty point set");
    if (sigma_pos <= 0 || sigma_val <= 0) throw error("feature_density: bandwidths must be positive");
    const double ip = 1.0 / (2.0 * sigma_pos * sigma_pos);
    const double iv = 1.0 / (2.0 * sigma_val * sigma_val);
    double acc = 0.0;
    for (const FeaturePoint& p : points) {
        double d2 = dot(query.position - p.position, query.position - p.position);
        double dv = query.value - p.value;
        acc += std::exp(-d2 * ip - dv * dv * iv);
    }
    return acc;
}

}  // namespace topbac
