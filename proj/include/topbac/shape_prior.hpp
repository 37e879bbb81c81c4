// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <variant>
#include <vector>

#include <json.hpp>

#include "topbac/srvf.hpp"

namespace topbac {

/// Tangent-space Gaussian shape model: Karcher mean, the leading J
/// eigenvectors/eigenvalues of the sample covariance of vectorized tangents,
/// and the residual floor delta.
struct ShapePrior {
    Srvf mean;
    Eigen::MatrixXd basis;        // 2N x J, orthonormal columns
    Eigen::VectorXd eigenvalues;  // J, positive, nonincreasing
    double delta = 0.0;
    int n_points = 0;

    int retained() const { return static_cast<int>(eigenvalues.size()); }

    nlohmann::json to_json() const {
        nlohmann::json jm = nlohmann::json::array();
        for (const Point2& p : mean.samples) jm.push_back({p.x, p.y});
        std::vector<double> b(basis.data(), basis.data() + basis.size());
        std::vector<double> ev(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
        return {{"mean", jm},      {"basis", b},          {"basis_rows", basis.rows()},
                {"eigenvalues", ev}, {"delta", delta},    {"n_points", n_points}};
    }

    static ShapePrior from_json(const nlohmann::json& j) {
        ShapePrior p;
        for (const auto& e : j.at("mean")) p.mean.samples.push_back({e[0], e[1]});
        p.n_points = j.at("n_points").get<int>();
        p.delta = j.at("delta").get<double>();
        auto ev = j.at("eigenvalues").get<std::vector<double>>();
        auto b = j.at("basis").get<std::vector<double>>();
        long rows = j.at("basis_rows").get<long>();
        long cols = ev.empty() ? 0 : static_cast<long>(b.size()) / static_cast<long>(ev.size());
        (void)cols;
        p.eigenvalues = Eigen::Map<Eigen::VectorXd>(ev.data(), static_cast<long>(ev.size()));
        p.basis = Eigen::Map<Eigen::MatrixXd>(b.data(), rows,
                                              static_cast<long>(b.size()) / rows);
        return p;
    }
};

namespace detail {

/// stack the two coordinate rows: [x_0..x_{N-1}, y_0..y_{N-1}]
inline Eigen::VectorXd vectorize(const Tangent& v) {
    Eigen::VectorXd w(2 * v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        w[static_cast<long>(i)] = v[i].x;
        w[static_cast<long>(i + v.size())] = v[i].y;
    }
    return w;
}

inline Tangent unvectorize(const Eigen::VectorXd& w) {
    std::size_t n = static_cast<std::size_t>(w.size()) / 2;
    Tangent v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = {w[static_cast<long>(i)], w[static_cast<long>(i + n)]};
    return v;
}

/// tangent vector of a shape at the prior mean, after registration
inline Eigen::VectorXd shape_coordinates(const ShapePrior& prior, const Srvf& qc,
                                         Registration* reg_out = nullptr) {
    if (qc.size() != static_cast<std::size_t>(prior.n_points))
        throw error("shape prior: sample count differs from the prior discretization");
    Registration reg = register_srvf(prior.mean, qc);
    Tangent v = inv_exp_map(prior.mean, reg.q2_registered);
    if (reg_out) *reg_out = std::move(reg);
    return vectorize(v);
}

inline Contour at_prior_resolution(const ShapePrior& prior, const Contour& c) {
    return c.size() == static_cast<std::size_t>(prior.n_points)
               ? c
               : resample(c, prior.n_points);
}

}  // namespace detail

/// Number of modes to keep: an explicit count, or the smallest count reaching
/// a fraction of total variance (default 0.95).
using PriorTruncation = std::variant<int, double>;

inline ShapePrior fit_prior(const std::vector<Contour>& training,
                            PriorTruncation truncation = 0.95, int n_points = 200,
                            int karcher_max_iter = 50, double karcher_tol = 1e-5) {
    if (training.size() < 2) throw error("fit_prior: need at least 2 training contours");
    std::vector<Srvf> shapes;
    shapes.reserve(training.size());
    for (const Contour& c : training) shapes.push_back(to_srvf(resample(c, n_points)));

    KarcherResult km = karcher_mean(shapes, karcher_max_iter, karcher_tol);

    const long M = static_cast<long>(shapes.size());
    const long D = 2 * n_points;
    Eigen::MatrixXd W(D, M);
    for (long i = 0; i < M; ++i) {
        Registration reg = register_srvf(km.mean, shapes[static_cast<std::size_t>(i)]);
        W.col(i) = detail::vectorize(inv_exp_map(km.mean, reg.q2_registered));
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(W / std::sqrt(static_cast<double>(M - 1)),
                                       Eigen::ComputeThinU);
    Eigen::VectorXd lambda = svd.singularValues().array().square();
    if (lambda.size() == 0 || lambda[0] < 1e-14)
        throw error("fit_prior: degenerate variance (training shapes are identical)");

    // usable rank: drop directions at the Karcher-residual noise floor
    long rank = 0;
    for (long k = 0; k < lambda.size(); ++k)
        if (lambda[k] > 1e-6 * lambda[0]) rank = k + 1;

    long J;
    if (std::holds_alternative<int>(truncation)) {
        J = std::clamp<long>(std::get<int>(truncation), 1, rank);
    } else {
        double frac = std::get<double>(truncation);
        if (frac <= 0 || frac > 1) throw error("fit_prior: variance fraction outside (0,1]");
        double total = lambda.head(rank).sum();
        double acc = 0.0;
        J = rank;
        for (long k = 0; k < rank; ++k) {
            acc += lambda[k];
            if (acc >= frac * total) { J = k + 1; break; }
        }
    }

    ShapePrior prior;
    prior.mean = km.mean;
    prior.basis = svd.matrixU().leftCols(J);
    prior.eigenvalues = lambda.head(J);
    prior.delta = 0.5 * lambda[J - 1];
    prior.n_points = n_points;
    return prior;
}

/// Two-term tangent Gaussian energy: covariance-weighted distance in the
/// retained subspace plus the residual term scaled by delta.
inline double prior_energy(const ShapePrior& prior, const Srvf& shape) {
    Eigen::VectorXd w = detail::shape_coordinates(prior, shape);
    Eigen::VectorXd z = prior.basis.transpose() * w;
    double term1 = 0.5 * (z.array().square() / prior.eigenvalues.array()).sum();
    Eigen::VectorXd resid = w - prior.basis * z;
    double term2 = resid.squaredNorm() / (2.0 * prior.delta * prior.delta);
    return term1 + term2;
}

inline double prior_energy(const ShapePrior& prior, const Contour& c) {
    return prior_energy(prior, to_srvf(detail::at_prior_resolution(prior, c)));
}

/// Gradient direction of the prior energy expressed as a vector field on the
/// contour: move down the tangent gradient via the exponential map, rebuild
/// the curve, rescale/translate it to match the input's length and centroid,
/// and report (c - beta_new)/epsilon pointwise. The returned field pairs with
/// the contour resampled to the prior's point count.
struct PriorUpdate {
    std::vector<Point2> direction;  // per point of the resampled contour
    Contour beta_new;
};

/// Core form: qc is the shape of the reference curve rc, in pointwise
/// correspondence with it.
inline PriorUpdate prior_update_from_shape(const ShapePrior& prior, const Srvf& qc,
                                           const Contour& rc, double epsilon) {
    if (epsilon <= 0) throw error("prior_update_direction: epsilon must be positive");
    Registration reg;
    Eigen::VectorXd w = detail::shape_coordinates(prior, qc, &reg);

    Eigen::VectorXd z = prior.basis.transpose() * w;
    Eigen::VectorXd a = prior.basis * (z.array() / prior.eigenvalues.array()).matrix() +
                        (w - prior.basis * z) / (prior.delta * prior.delta);
    Tangent at = detail::unvectorize(a);
    // keep it tangent at the mean
    double ip = 0.0;
    for (std::size_t i = 0; i < at.size(); ++i) ip += dot(at[i], prior.mean.samples[i]);
    ip /= static_cast<double>(at.size());
    for (std::size_t i = 0; i < at.size(); ++i) at[i] -= prior.mean.samples[i] * ip;

    Tangent b = parallel_transport(at, prior.mean, reg.q2_registered);
    for (Point2& p : b) p = p * (-epsilon);
    Srvf q_new_aligned = exp_map(reg.q2_registered, b);
    Srvf q_new = registration_pull_back(reg, q_new_aligned);

    std::vector<Point2> beta = integrate_srvf(q_new, rc[0]);
    // match length and centroid of the input
    double len_beta = 0.0, len_c = rc.perimeter();
    for (std::size_t i = 0; i < beta.size(); ++i)
        len_beta += dist(beta[i], beta[(i + 1) % beta.size()]);
    if (len_beta < 1e-12) throw error("prior_update_direction: degenerate reconstruction");
    double scale = len_c / len_beta;
    Point2 mean_beta{0, 0};
    for (const Point2& p : beta) mean_beta += p;
    mean_beta = mean_beta / static_cast<double>(beta.size());
    Point2 target = rc.centroid();
    for (Point2& p : beta) p = (p - mean_beta) * scale + target;

    PriorUpdate out;
    out.direction.resize(beta.size());
    for (std::size_t i = 0; i < beta.size(); ++i)
        out.direction[i] = (rc[i] - beta[i]) / epsilon;
    out.beta_new = Contour(std::move(beta));
    return out;
}

inline PriorUpdate prior_update_direction(const ShapePrior& prior, const Contour& c,
                                          double epsilon = 0.3) {
    Contour rc = detail::at_prior_resolution(prior, c);
    return prior_update_from_shape(prior, to_srvf(rc), rc, epsilon);
}

inline PriorUpdate prior_update_direction(const ShapePrior& prior, const Srvf& shape,
                                          double epsilon = 0.3) {
    return prior_update_from_shape(prior, shape, from_srvf(shape), epsilon);
}

}  // namespace topbac
