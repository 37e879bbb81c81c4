// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "topbac/contour.hpp"
#include "topbac/parallel.hpp"

namespace topbac {

/// Square-root velocity representation of a closed curve, sampled on the
/// uniform grid t_i = i/N. Shape-normalized instances live on the unit
/// Hilbert sphere (unit L2 norm).
struct Srvf {
    std::vector<Point2> samples;

    std::size_t size() const { return samples.size(); }
};

/// L2 inner product on the closed grid.
inline double srvf_dot(const Srvf& a, const Srvf& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) s += dot(a.samples[i], b.samples[i]);
    return s / static_cast<double>(a.samples.size());
}

inline double srvf_norm(const Srvf& q) { return std::sqrt(std::max(srvf_dot(q, q), 0.0)); }

using Tangent = std::vector<Point2>;  // element of the tangent space at some Srvf

inline double tangent_dot(const Tangent& a, const Tangent& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += dot(a[i], b[i]);
    return s / static_cast<double>(a.size());
}

inline double tangent_norm(const Tangent& v) { return std::sqrt(std::max(tangent_dot(v, v), 0.0)); }

/// SRVF of a closed contour: centered differences for the derivative, q = 0
/// where the derivative vanishes, then scaled to unit L2 norm (translation is
/// gone with the derivative, scale with the normalization).
inline Srvf to_srvf(const Contour& c) {
    const std::size_t n = c.size();
    Srvf q;
    q.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Point2 deriv = (c[(i + 1) % n] - c[(i + n - 1) % n]) * (static_cast<double>(n) / 2.0);
        double m = norm(deriv);
        q.samples[i] = m < 1e-12 ? Point2{0, 0} : deriv / std::sqrt(m);
    }
    double nm = srvf_norm(q);
    if (nm < 1e-12) throw error("to_srvf: degenerate curve (zero speed everywhere)");
    for (Point2& p : q.samples) p = p / nm;
    return q;
}

/// Curve reconstruction by cumulative trapezoid integration of q|q|. The raw
/// form keeps pointwise correspondence with q (no orientation normalization).
inline std::vector<Point2> integrate_srvf(const Srvf& q, Point2 start = {0, 0}) {
    const std::size_t n = q.size();
    if (n < 3) throw error("integrate_srvf: too few samples");
    double total = 0.0;
    for (const Point2& p : q.samples) total += dot(p, p);
    if (total < 1e-12) throw error("integrate_srvf: zero SRVF integrates to a point");
    std::vector<Point2> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = q.samples[i] * norm(q.samples[i]);
    std::vector<Point2> pts(n);
    pts[0] = start;
    const double dt = 1.0 / static_cast<double>(n);
    for (std::size_t i = 1; i < n; ++i) pts[i] = pts[i - 1] + (g[i - 1] + g[i]) * (0.5 * dt);
    return pts;
}

inline Contour from_srvf(const Srvf& q, Point2 start = {0, 0}) {
    return Contour(integrate_srvf(q, start));
}

// ---------------------------------------------------------------------------
// registration (rotation x cyclic seed x reparameterization)
// ---------------------------------------------------------------------------

/// Group element aligning q2 to q1, plus the aligned result. gamma maps each
/// output slot i to a fractional sample index of the original q2 (monotone,
/// unwrapped: gamma[i+1] >= gamma[i], total increase N across the period).
struct Registration {
    double rot_c = 1.0;
    double rot_s = 0.0;
    std::vector<double> gamma;      // length N, index units into original q2
    std::vector<double> gamma_dot;  // composite slope per slot (index per index)
    int seed = 0;                   // integer cyclic offset, lround(gamma[0]) mod N
    Srvf q2_registered;
    double inner_product = -1.0;
};

namespace detail {

inline Point2 rotate(const Point2& p, double c, double s) {
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

/// periodic linear interpolation of SRVF samples at fractional index u
inline Point2 sample_periodic(const std::vector<Point2>& v, double u) {
    const double n = static_cast<double>(v.size());
    u = std::fmod(u, n);
    if (u < 0) u += n;
    std::size_t a = static_cast<std::size_t>(u) % v.size();
    std::size_t b = (a + 1) % v.size();
    double f = u - std::floor(u);
    return v[a] * (1 - f) + v[b] * f;
}

/// best rotation angle components maximizing <q1, R q2>
inline void procrustes_rotation(const Srvf& q1, const Srvf& q2, double& c, double& s) {
    double A = 0.0, B = 0.0;
    for (std::size_t i = 0; i < q1.size(); ++i) {
        A += dot(q1.samples[i], q2.samples[i]);
        B += cross(q2.samples[i], q1.samples[i]);
    }
    double m = std::hypot(A, B);
    if (m < 1e-300) { c = 1.0; s = 0.0; return; }
    c = A / m;
    s = B / m;
}

struct DpResult {
    double value = -std::numeric_limits<double>::infinity();
    int seed = 0;
    std::vector<double> gamma;      // per-slot fractional index into the DP's q2
    std::vector<double> gamma_dot;  // per-slot slope
};

constexpr int kDpSteps[][2] = {{1, 1}, {1, 2}, {2, 1}, {1, 3}, {3, 1}, {2, 3},
                               {3, 2}, {1, 4}, {4, 1}, {3, 4}, {4, 3}};
constexpr int kNumDpSteps = static_cast<int>(sizeof(kDpSteps) / sizeof(kDpSteps[0]));

/// One monotone grid-path DP for a fixed cyclic seed; P/Q are the dot and
/// cross matrices of (q1, q2), rotation (c,s) is folded into the integrand.
/// Returns the path value and fills gamma (index units into the seeded q2).
inline double dp_single_seed(const std::vector<double>& P, const std::vector<double>& Q, int n,
                             int seed, double c, double s, std::vector<double>* gamma,
                             std::vector<double>* gamma_dot, std::vector<double>& dpval,
                             std::vector<signed char>& dpstep) {
    const int m = n + 1;
    const double neg = -std::numeric_limits<double>::infinity();
    std::fill(dpval.begin(), dpval.end(), neg);
    dpval[0] = 0.0;
    auto at = [&](int row, double u) -> double {
        // integrand sample: q1[row] . (R q2)(u + seed), periodic
        double uu = u + seed;
        int a = static_cast<int>(std::floor(uu));
        double f = uu - a;
        int a0 = ((a % n) + n) % n;
        int a1 = (a0 + 1) % n;
        std::size_t r = static_cast<std::size_t>(row) * n;
        double pv = (1 - f) * P[r + a0] + f * P[r + a1];
        double qv = (1 - f) * Q[r + a0] + f * Q[r + a1];
        return c * pv + s * qv;
    };
    const double dt = 1.0 / n;
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            double best = neg;
            signed char bstep = -1;
            for (int k = 0; k < kNumDpSteps; ++k) {
                int di = kDpSteps[k][0], dj = kDpSteps[k][1];
                int pi = i - di, pj = j - dj;
                if (pi < 0 || pj < 0) continue;
                double prev = dpval[static_cast<std::size_t>(pi) * m + pj];
                if (prev == neg) continue;
                double slope = static_cast<double>(dj) / di;
                double root = std::sqrt(slope);
                double acc = 0.0;
                for (int r = 0; r < di; ++r) acc += at(pi + r, pj + slope * r);
                double val = prev + acc * root * dt;
                if (val > best) { best = val; bstep = static_cast<signed char>(k); }
            }
            dpval[static_cast<std::size_t>(i) * m + j] = best;
            dpstep[static_cast<std::size_t>(i) * m + j] = bstep;
        }
    }
    double result = dpval[static_cast<std::size_t>(n) * m + n];
    if (gamma) {
        gamma->assign(n, 0.0);
        gamma_dot->assign(n, 1.0);
        int i = n, j = n;
        while (i > 0) {
            int k = dpstep[static_cast<std::size_t>(i) * m + j];
            if (k < 0) throw error("register: DP backtrack failed");
            int di = kDpSteps[k][0], dj = kDpSteps[k][1];
            double slope = static_cast<double>(dj) / di;
            for (int r = 0; r < di; ++r) {
                int row = i - di + r;
                if (row < n) {
                    (*gamma)[row] = (j - dj) + slope * r;
                    (*gamma_dot)[row] = slope;
                }
            }
            i -= di;
            j -= dj;
        }
    }
    return result;
}

}  // namespace detail

/// Aligns q2 to q1 over rotation, cyclic seed, and reparameterization:
/// Procrustes rotation alternated with a monotone-path DP; the first DP round
/// searches every cyclic seed of the closed curve (disable seed_search to
/// refine an already-aligned pair). A rotation-plus-shift-only candidate is
/// kept as a floor so exact group actions are recovered exactly.
inline Registration register_srvf(const Srvf& q1, const Srvf& q2, int max_rounds = 3,
                                  bool seed_search = true) {
    const int n = static_cast<int>(q1.size());
    if (n < 8) throw error("register: need at least 8 samples");
    if (q2.size() != q1.size()) throw error("register: sample counts differ");

    std::vector<double> P(static_cast<std::size_t>(n) * n), Q(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            P[static_cast<std::size_t>(i) * n + j] = dot(q1.samples[i], q2.samples[j]);
            Q[static_cast<std::size_t>(i) * n + j] = cross(q2.samples[j], q1.samples[i]);
        }

    // rotation + integer-shift-only candidate
    double best_shift_ip = -std::numeric_limits<double>::infinity();
    int best_shift = 0;
    double best_shift_c = 1.0, best_shift_s = 0.0;
    for (int sft = 0; sft < n; ++sft) {
        double A = 0.0, B = 0.0;
        for (int i = 0; i < n; ++i) {
            int j = (i + sft) % n;
            A += P[static_cast<std::size_t>(i) * n + j];
            B += Q[static_cast<std::size_t>(i) * n + j];
        }
        double ip = std::hypot(A, B) / n;
        if (ip > best_shift_ip) {
            best_shift_ip = ip;
            best_shift = sft;
            double m = std::max(std::hypot(A, B), 1e-300);
            best_shift_c = A / m;
            best_shift_s = B / m;
        }
    }

    // composite map state: slot i of the working q2 samples original index M[i]
    std::vector<double> M(n), G(n, 1.0);
    for (int i = 0; i < n; ++i) M[i] = i;
    double rc = 1.0, rs = 0.0;
    Srvf work = q2;

    auto rebuild = [&](Srvf& out) {
        out.samples.resize(n);
        for (int i = 0; i < n; ++i)
            out.samples[i] =
                detail::rotate(detail::sample_periodic(q2.samples, M[i]), rc, rs) * std::sqrt(G[i]);
        double nm = srvf_norm(out);
        if (nm > 1e-12)
            for (Point2& p : out.samples) p = p / nm;
    };

    double prev_ip = -std::numeric_limits<double>::infinity();
    std::vector<double> dpval(static_cast<std::size_t>(n + 1) * (n + 1));
    std::vector<signed char> dpstep(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int round = 0; round < max_rounds; ++round) {
        detail::DpResult best;
        if (round == 0 && seed_search) {
            // all cyclic seeds, each with its own optimal rotation, so the
            // search commutes exactly with integer shifts and rotations of q2
            std::vector<double> seed_value(n), seed_c(n), seed_s(n);
            for (int sd = 0; sd < n; ++sd) {
                double A = 0.0, B = 0.0;
                for (int i = 0; i < n; ++i) {
                    int j = (i + sd) % n;
                    A += P[static_cast<std::size_t>(i) * n + j];
                    B += Q[static_cast<std::size_t>(i) * n + j];
                }
                double m = std::max(std::hypot(A, B), 1e-300);
                seed_c[sd] = A / m;
                seed_s[sd] = B / m;
            }
            parallel_for(static_cast<std::size_t>(n), [&](std::size_t b, std::size_t e) {
                std::vector<double> dv(static_cast<std::size_t>(n + 1) * (n + 1));
                std::vector<signed char> ds(static_cast<std::size_t>(n + 1) * (n + 1));
                for (std::size_t sd = b; sd < e; ++sd)
                    seed_value[sd] = detail::dp_single_seed(P, Q, n, static_cast<int>(sd),
                                                            seed_c[sd], seed_s[sd], nullptr,
                                                            nullptr, dv, ds);
            });
            int arg = 0;
            for (int sd = 1; sd < n; ++sd)
                if (seed_value[sd] > seed_value[arg]) arg = sd;
            best.seed = arg;
            best.value = detail::dp_single_seed(P, Q, n, arg, seed_c[arg], seed_s[arg],
                                                &best.gamma, &best.gamma_dot, dpval, dpstep);
            rc = seed_c[arg];
            rs = seed_s[arg];
        } else {
            // refine rotation, then one DP on the already-aligned pair
            double c, s;
            detail::procrustes_rotation(q1, work, c, s);
            double nrc = c * rc - s * rs, nrs = s * rc + c * rs;
            rc = nrc;
            rs = nrs;
            for (Point2& p : work.samples) p = detail::rotate(p, c, s);
            std::vector<double> Pw(static_cast<std::size_t>(n) * n),
                Qw(static_cast<std::size_t>(n) * n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    Pw[static_cast<std::size_t>(i) * n + j] = dot(q1.samples[i], work.samples[j]);
                    Qw[static_cast<std::size_t>(i) * n + j] =
                        cross(work.samples[j], q1.samples[i]);
                }
            best.seed = 0;
            best.value = detail::dp_single_seed(Pw, Qw, n, 0, 1.0, 0.0, &best.gamma,
                                                &best.gamma_dot, dpval, dpstep);
        }

        // compose into (M, G); gamma indexes the current working samples,
        // M unwraps with period n
        auto Mat = [&](int idx) {
            int base = static_cast<int>(std::floor(static_cast<double>(idx) / n));
            return M[idx - base * n] + static_cast<double>(base) * n;
        };
        std::vector<double> newM(n), newG(n);
        for (int i = 0; i < n; ++i) {
            double u = best.gamma[i] + best.seed;  // unwrapped current-slot index
            int a = static_cast<int>(std::floor(u));
            double f = u - a;
            double Ma = Mat(a), Mb = Mat(a + 1);
            newM[i] = Ma * (1 - f) + Mb * f;
            newG[i] = std::max(best.gamma_dot[i] * (Mb - Ma), 1e-12);
        }
        M = std::move(newM);
        G = std::move(newG);
        rebuild(work);
        double ip = srvf_dot(q1, work);
        bool settled = round > 0 && ip - prev_ip < 1e-8;
        prev_ip = std::max(ip, prev_ip);
        if (settled) break;
    }

    Registration reg;
    if (best_shift_ip >= prev_ip) {
        // exact group recovery beats the discretized path
        reg.rot_c = best_shift_c;
        reg.rot_s = best_shift_s;
        reg.gamma.resize(n);
        reg.gamma_dot.assign(n, 1.0);
        for (int i = 0; i < n; ++i) reg.gamma[i] = i + best_shift;
        reg.seed = best_shift;
        reg.q2_registered.samples.resize(n);
        for (int i = 0; i < n; ++i)
            reg.q2_registered.samples[i] =
                detail::rotate(q2.samples[(i + best_shift) % n], reg.rot_c, reg.rot_s);
        double nm = srvf_norm(reg.q2_registered);
        for (Point2& p : reg.q2_registered.samples) p = p / nm;
        reg.inner_product = srvf_dot(q1, reg.q2_registered);
    } else {
        reg.rot_c = rc;
        reg.rot_s = rs;
        reg.gamma = M;
        reg.gamma_dot = G;
        reg.seed = static_cast<int>(std::lround(M[0])) % n;
        if (reg.seed < 0) reg.seed += n;
        reg.q2_registered = work;
        reg.inner_product = prev_ip;
    }
    return reg;
}

/// Maps samples living on q1's parameter grid back onto the original q2 frame
/// by inverting the registration's group action.
inline Srvf registration_pull_back(const Registration& reg, const Srvf& aligned) {
    const int n = static_cast<int>(aligned.size());
    Srvf out;
    out.samples.resize(n);
    // invert the monotone unwrapped map M: original index j -> slot index
    const std::vector<double>& M = reg.gamma;
    for (int j = 0; j < n; ++j) {
        double target = M[0] + std::fmod(static_cast<double>(j) - M[0], static_cast<double>(n));
        if (target < M[0]) target += n;
        // find slot i with M(i) = target, M treated piecewise linear, period n
        int lo = 0, hi = n;  // M(n) := M(0) + n
        auto Mat = [&](int idx) { return idx < n ? M[idx] : M[0] + n; };
        while (hi - lo > 1) {
            int mid = (lo + hi) / 2;
            if (Mat(mid) <= target) lo = mid; else hi = mid;
        }
        double Ma = Mat(lo), Mb = Mat(lo + 1);
        double f = Mb > Ma ? (target - Ma) / (Mb - Ma) : 0.0;
        double slot = lo + f;
        double slope = Mb - Ma;  // dM/di at the slot
        Point2 v = detail::sample_periodic(aligned.samples, slot);
        // undo rotation and the sqrt(gamma_dot) factor
        v = detail::rotate(v, reg.rot_c, -reg.rot_s);
        out.samples[j] = v / std::sqrt(std::max(slope, 1e-12));
    }
    double nm = srvf_norm(out);
    if (nm > 1e-12)
        for (Point2& p : out.samples) p = p / nm;
    return out;
}

/// Geodesic distance on the shape space: arccos of the registered inner
/// product, clamped into [-1,1]. Both registration directions are tried and
/// the better alignment wins, which makes the distance exactly symmetric.
inline double elastic_distance(const Srvf& q1, const Srvf& q2) {
    double ip = std::max(register_srvf(q1, q2).inner_product,
                         register_srvf(q2, q1).inner_product);
    return std::acos(std::clamp(ip, -1.0, 1.0));
}

inline double elastic_distance(const Contour& c1, const Contour& c2, int n = 200) {
    return elastic_distance(to_srvf(resample(c1, n)), to_srvf(resample(c2, n)));
}

// ---------------------------------------------------------------------------
// unit-sphere geometry
// ---------------------------------------------------------------------------

inline Srvf exp_map(const Srvf& base, const Tangent& v) {
    double nv = tangent_norm(v);
    if (nv < 1e-14) return base;
    Srvf out;
    out.samples.resize(base.size());
    double cv = std::cos(nv), sv = std::sin(nv);
    for (std::size_t i = 0; i < base.size(); ++i)
        out.samples[i] = base.samples[i] * cv + v[i] * (sv / nv);
    double nm = srvf_norm(out);
    for (Point2& p : out.samples) p = p / nm;
    return out;
}

inline Tangent inv_exp_map(const Srvf& base, const Srvf& target) {
    double ip = std::clamp(srvf_dot(base, target), -1.0, 1.0);
    double theta = std::acos(ip);
    if (theta > std::numbers::pi - 1e-6)
        throw error("inv_exp_map: antipodal shapes");
    Tangent v(base.size(), {0, 0});
    if (theta < 1e-14) return v;
    double scale = theta / std::sin(theta);
    for (std::size_t i = 0; i < base.size(); ++i)
        v[i] = (target.samples[i] - base.samples[i] * ip) * scale;
    return v;
}

/// Parallel transport along the great circle joining two points of the unit
/// sphere; an isometry between the two tangent spaces.
inline Tangent parallel_transport(const Tangent& v, const Srvf& from, const Srvf& to) {
    double ip = srvf_dot(from, to);
    if (1.0 + ip < 1e-12) throw error("parallel_transport: antipodal endpoints");
    Tangent vt(v.size());
    double factor_ip = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) factor_ip += dot(v[i], to.samples[i]);
    factor_ip /= static_cast<double>(v.size());
    double k = factor_ip / (1.0 + ip);
    for (std::size_t i = 0; i < v.size(); ++i)
        vt[i] = v[i] - (from.samples[i] + to.samples[i]) * k;
    return vt;
}

// ---------------------------------------------------------------------------
// Karcher mean
// ---------------------------------------------------------------------------

struct KarcherResult {
    Srvf mean;
    bool converged = false;
    int iterations = 0;
};

/// Intrinsic mean on the shape space: register every shape to the current
/// estimate, average the inverse-exponential tangents, step halfway along the
/// exponential map. The full cyclic-seed search runs on the first sweep;
/// later sweeps refine the alignments from where they left off.
inline KarcherResult karcher_mean(const std::vector<Srvf>& shapes, int max_iter = 50,
                                  double tol = 1e-5) {
    if (shapes.empty()) throw error("karcher_mean: no shapes");
    KarcherResult r;
    r.mean = shapes[0];
    if (shapes.size() == 1) {
        r.converged = true;
        return r;
    }
    const std::size_t n = r.mean.size();
    std::vector<Srvf> aligned(shapes.begin(), shapes.end());
    for (int it = 1; it <= max_iter; ++it) {
        Tangent vbar(n, {0, 0});
        for (Srvf& q : aligned) {
            Registration reg = register_srvf(r.mean, q, 3, it == 1);
            q = reg.q2_registered;
            Tangent v = inv_exp_map(r.mean, q);
            for (std::size_t i = 0; i < n; ++i) vbar[i] += v[i];
        }
        for (Point2& p : vbar) p = p / static_cast<double>(shapes.size());
        r.iterations = it;
        if (tangent_norm(vbar) < tol) {
            r.converged = true;
            break;
        }
        for (Point2& p : vbar) p = p * 0.5;
        r.mean = exp_map(r.mean, vbar);
    }
    return r;
}

}  // namespace topbac
