// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "mpsts/errors.hpp"

namespace mpsts {

// Neumaier-compensated accumulator.  Used wherever probability mass is summed
// against tolerances tighter than plain summation roundoff (~n * eps).
class KahanSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double log_sum_exp(const std::vector<double>& log_terms) {
    double m = -std::numeric_limits<double>::infinity();
    for (double t : log_terms) m = std::max(m, t);
    if (!std::isfinite(m)) return m;
    KahanSum s;
    for (double t : log_terms) s.add(std::exp(t - m));
    return m + std::log(s.value());
}

inline double log_binomial(std::int64_t n, std::int64_t k) {
    return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
           std::lgamma(double(n - k) + 1.0);
}

struct IntegrateOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-11;
    int min_refinements = 4;
    int max_refinements = 16;
    int initial_intervals = 64;
};

// Composite trapezoid with interval doubling and Simpson extrapolation.
// Stops once successive Simpson estimates agree within tolerance.
template <class F>
double integrate(F&& f, double lo, double hi, IntegrateOptions opt = {}) {
    require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, errc::parameter_domain,
            "integration bounds must be finite and ordered");
    if (lo == hi) return 0.0;
    const double width = hi - lo;
    std::size_t n = static_cast<std::size_t>(opt.initial_intervals);
    double h = width / double(n);
    KahanSum acc;
    acc.add(0.5 * (f(lo) + f(hi)));
    for (std::size_t i = 1; i < n; ++i) acc.add(f(lo + double(i) * h));
    double trapezoid = acc.value() * h;
    double simpson_prev = trapezoid;
    for (int r = 0; r < opt.max_refinements; ++r) {
        KahanSum mid;
        for (std::size_t i = 0; i < n; ++i) mid.add(f(lo + (double(i) + 0.5) * h));
        const double trapezoid_next = 0.5 * trapezoid + 0.5 * h * mid.value();
        const double simpson = (4.0 * trapezoid_next - trapezoid) / 3.0;
        n *= 2;
        h *= 0.5;
        trapezoid = trapezoid_next;
        if (r + 1 >= opt.min_refinements) {
            const double err = std::abs(simpson - simpson_prev);
            if (err <= opt.abs_tol + opt.rel_tol * std::abs(simpson)) return simpson;
        }
        simpson_prev = simpson;
    }
    return simpson_prev;
}

// Same scheme for three integrands sharing the evaluation points.  f(q) must
// return std::array<double, 3>.
template <class F>
std::array<double, 3> integrate3(F&& f, double lo, double hi, IntegrateOptions opt = {}) {
    require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, errc::parameter_domain,
            "integration bounds must be finite and ordered");
    std::array<double, 3> zero{0.0, 0.0, 0.0};
    if (lo == hi) return zero;
    const double width = hi - lo;
    std::size_t n = static_cast<std::size_t>(opt.initial_intervals);
    double h = width / double(n);
    std::array<KahanSum, 3> acc;
    const auto f_lo = f(lo), f_hi = f(hi);
    for (int c = 0; c < 3; ++c) acc[c].add(0.5 * (f_lo[c] + f_hi[c]));
    for (std::size_t i = 1; i < n; ++i) {
        const auto v = f(lo + double(i) * h);
        for (int c = 0; c < 3; ++c) acc[c].add(v[c]);
    }
    std::array<double, 3> trapezoid, simpson_prev, simpson;
    for (int c = 0; c < 3; ++c) simpson_prev[c] = trapezoid[c] = acc[c].value() * h;
    for (int r = 0; r < opt.max_refinements; ++r) {
        std::array<KahanSum, 3> mid;
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = f(lo + (double(i) + 0.5) * h);
            for (int c = 0; c < 3; ++c) mid[c].add(v[c]);
        }
        bool done = (r + 1 >= opt.min_refinements);
        for (int c = 0; c < 3; ++c) {
            const double trapezoid_next = 0.5 * trapezoid[c] + 0.5 * h * mid[c].value();
            simpson[c] = (4.0 * trapezoid_next - trapezoid[c]) / 3.0;
            trapezoid[c] = trapezoid_next;
            if (std::abs(simpson[c] - simpson_prev[c]) >
                opt.abs_tol + opt.rel_tol * std::abs(simpson[c])) {
                done = false;
            }
        }
        n *= 2;
        h *= 0.5;
        if (done) return simpson;
        simpson_prev = simpson;
    }
    return simpson_prev;
}

// Tabulated CDF of a nonnegative density on a uniform grid, with linear
// interpolation for both cdf() and quantile().  Serves inverse-CDF sampling,
// goodness-of-fit binning, and empirical-CDF comparisons.
class GriddedCdf {
  public:
    template <class F>
    GriddedCdf(F&& pdf, double lo, double hi, int points) {
        require(points >= 2 && lo < hi, errc::parameter_domain, "bad cdf grid");
        x_.resize(std::size_t(points));
        cdf_.resize(std::size_t(points));
        const double h = (hi - lo) / double(points - 1);
        std::vector<double> density(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) {
            x_[std::size_t(i)] = lo + double(i) * h;
            density[std::size_t(i)] = pdf(x_[std::size_t(i)]);
            require(density[std::size_t(i)] >= 0.0 && std::isfinite(density[std::size_t(i)]),
                    errc::parameter_domain, "density must be finite and nonnegative");
        }
        KahanSum acc;
        cdf_[0] = 0.0;
        for (int i = 1; i < points; ++i) {
            acc.add(0.5 * h * (density[std::size_t(i - 1)] + density[std::size_t(i)]));
            cdf_[std::size_t(i)] = acc.value();
        }
        total_ = cdf_.back();
        require(total_ > 0.0, errc::parameter_domain, "density integrates to zero on the grid");
    }

    double total_mass() const { return total_; }
    double min() const { return x_.front(); }
    double max() const { return x_.back(); }

    double cdf(double x) const {
        if (x <= x_.front()) return 0.0;
        if (x >= x_.back()) return 1.0;
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t i = std::size_t(it - x_.begin());
        const double t = (x - x_[i - 1]) / (x_[i] - x_[i - 1]);
        return (cdf_[i - 1] + t * (cdf_[i] - cdf_[i - 1])) / total_;
    }

    // u in [0, 1]; flat (zero-density) stretches resolve to their left edge.
    double quantile(double u) const {
        require(u >= 0.0 && u <= 1.0, errc::parameter_domain, "quantile argument outside [0,1]");
        const double target = u * total_;
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), target);
        if (it == cdf_.begin()) return x_.front();
        if (it == cdf_.end()) return x_.back();
        const std::size_t i = std::size_t(it - cdf_.begin());
        const double c0 = cdf_[i - 1], c1 = cdf_[i];
        if (c1 <= c0) return x_[i - 1];
        const double t = (target - c0) / (c1 - c0);
        return x_[i - 1] + t * (x_[i] - x_[i - 1]);
    }

  private:
    std::vector<double> x_, cdf_;
    double total_ = 0.0;
};

// 2x2 matrix, row-major.  Enough linear algebra for a two-parameter model.
struct Mat2 {
    double m[2][2] = {{0.0, 0.0}, {0.0, 0.0}};

    static Mat2 identity() { return Mat2{{{1.0, 0.0}, {0.0, 1.0}}}; }

    double det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

    Mat2 inverse() const {
        const double d = det();
        const double scale = std::max({std::abs(m[0][0]), std::abs(m[0][1]),
                                       std::abs(m[1][0]), std::abs(m[1][1])});
        require(std::isfinite(d) && std::abs(d) > 1e-14 * scale * scale,
                errc::estimation_failure, "singular 2x2 matrix");
        return Mat2{{{m[1][1] / d, -m[0][1] / d}, {-m[1][0] / d, m[0][0] / d}}};
    }

    bool symmetric_psd(double tol = 1e-9) const {
        const double scale = std::max({std::abs(m[0][0]), std::abs(m[1][1]), 1e-300});
        if (std::abs(m[0][1] - m[1][0]) > tol * scale) return false;
        if (m[0][0] < -tol * scale || m[1][1] < -tol * scale) return false;
        return det() >= -tol * scale * scale;
    }
};

struct MinimizeResult {
    std::array<double, 2> x{0.0, 0.0};
    double f = 0.0;
    int evaluations = 0;
    bool converged = false;
};

// Nelder-Mead on R^2.  x_tol is an absolute tolerance on the simplex extent
// (callers work in log-parameters, where absolute steps are relative steps);
// f_tol is relative to |f|, since an absolute spread bound below ~eps |f|
// could never be met for objectives of large magnitude (log-likelihoods grow
// with the sample count).
template <class F>
MinimizeResult nelder_mead2(F&& f, std::array<double, 2> x0, double step, double x_tol,
                            double f_tol, int max_iterations) {
    using Point = std::array<double, 2>;
    struct Vertex {
        Point x;
        double f;
    };
    int evals = 0;
    auto eval = [&](const Point& p) {
        ++evals;
        return f(p);
    };
    std::array<Vertex, 3> s{{{x0, eval(x0)},
                             {{x0[0] + step, x0[1]}, 0.0},
                             {{x0[0], x0[1] + step}, 0.0}}};
    s[1].f = eval(s[1].x);
    s[2].f = eval(s[2].x);
    auto order = [&] { std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; }); };
    order();
    bool converged = false;
    for (int it = 0; it < max_iterations; ++it) {
        const double extent = std::max(
            std::max(std::abs(s[1].x[0] - s[0].x[0]), std::abs(s[2].x[0] - s[0].x[0])),
            std::max(std::abs(s[1].x[1] - s[0].x[1]), std::abs(s[2].x[1] - s[0].x[1])));
        if (extent < x_tol &&
            std::abs(s[2].f - s[0].f) <= f_tol * (std::abs(s[0].f) + 1.0)) {
            converged = true;
            break;
        }
        const Point centroid{0.5 * (s[0].x[0] + s[1].x[0]), 0.5 * (s[0].x[1] + s[1].x[1])};
        auto blend = [&](double c) {
            return Point{centroid[0] + c * (centroid[0] - s[2].x[0]),
                         centroid[1] + c * (centroid[1] - s[2].x[1])};
        };
        const Point xr = blend(1.0);
        const double fr = eval(xr);
        if (fr < s[0].f) {
            const Point xe = blend(2.0);
            const double fe = eval(xe);
            s[2] = (fe < fr) ? Vertex{xe, fe} : Vertex{xr, fr};
        } else if (fr < s[1].f) {
            s[2] = Vertex{xr, fr};
        } else {
            const Point xc = blend(fr < s[2].f ? 0.5 : -0.5);
            const double fc = eval(xc);
            if (fc < std::min(fr, s[2].f)) {
                s[2] = Vertex{xc, fc};
            } else {
                for (int i = 1; i < 3; ++i) {
                    s[i].x = {0.5 * (s[i].x[0] + s[0].x[0]), 0.5 * (s[i].x[1] + s[0].x[1])};
                    s[i].f = eval(s[i].x);
                }
            }
        }
        order();
    }
    return MinimizeResult{s[0].x, s[0].f, evals, converged};
}

// BFGS with central-difference gradients and Armijo backtracking, used to
// polish a Nelder-Mead solution.  Tolerances as in nelder_mead2 (f_tol is
// relative).  A failed line search counts as convergence: when no decrease is
// found along the estimated descent direction, the finite-difference gradient
// is dominated by roundoff of the objective, i.e. the point is optimal to
// machine resolution.
template <class F>
MinimizeResult bfgs_polish2(F&& f, std::array<double, 2> x0, double grad_step, double x_tol,
                            double f_tol, int max_iterations) {
    using Point = std::array<double, 2>;
    int evals = 0;
    auto eval = [&](const Point& p) {
        ++evals;
        return f(p);
    };
    auto gradient = [&](const Point& p) {
        Point g;
        for (int i = 0; i < 2; ++i) {
            Point hi = p, lo = p;
            hi[i] += grad_step;
            lo[i] -= grad_step;
            g[i] = (eval(hi) - eval(lo)) / (2.0 * grad_step);
        }
        return g;
    };
    Point x = x0;
    double fx = eval(x);
    Point g = gradient(x);
    Mat2 h_inv = Mat2::identity();
    bool converged = false;
    for (int it = 0; it < max_iterations; ++it) {
        Point d{-(h_inv.m[0][0] * g[0] + h_inv.m[0][1] * g[1]),
                -(h_inv.m[1][0] * g[0] + h_inv.m[1][1] * g[1])};
        double slope = d[0] * g[0] + d[1] * g[1];
        if (slope >= 0.0) {  // not a descent direction; reset to steepest descent
            h_inv = Mat2::identity();
            d = {-g[0], -g[1]};
            slope = -(g[0] * g[0] + g[1] * g[1]);
        }
        double t = 1.0;
        Point xn;
        double fn = fx;
        bool stepped = false;
        for (int ls = 0; ls < 40; ++ls) {
            xn = {x[0] + t * d[0], x[1] + t * d[1]};
            fn = eval(xn);
            if (std::isfinite(fn) && fn <= fx + 1e-4 * t * slope) {
                stepped = true;
                break;
            }
            t *= 0.5;
        }
        if (!stepped) {
            converged = true;
            break;
        }
        const Point gn = gradient(xn);
        const Point step{xn[0] - x[0], xn[1] - x[1]};
        const Point dg{gn[0] - g[0], gn[1] - g[1]};
        const double sy = step[0] * dg[0] + step[1] * dg[1];
        if (sy > 1e-12) {  // standard BFGS inverse update
            const double rho = 1.0 / sy;
            const double a00 = 1.0 - rho * step[0] * dg[0];
            const double a01 = -rho * step[0] * dg[1];
            const double a10 = -rho * step[1] * dg[0];
            const double a11 = 1.0 - rho * step[1] * dg[1];
            Mat2 tmp;  // (I - rho s y^T) H
            tmp.m[0][0] = a00 * h_inv.m[0][0] + a01 * h_inv.m[1][0];
            tmp.m[0][1] = a00 * h_inv.m[0][1] + a01 * h_inv.m[1][1];
            tmp.m[1][0] = a10 * h_inv.m[0][0] + a11 * h_inv.m[1][0];
            tmp.m[1][1] = a10 * h_inv.m[0][1] + a11 * h_inv.m[1][1];
            Mat2 next;  // ... (I - rho y s^T) + rho s s^T
            next.m[0][0] = tmp.m[0][0] * a00 + tmp.m[0][1] * a01 + rho * step[0] * step[0];
            next.m[0][1] = tmp.m[0][0] * a10 + tmp.m[0][1] * a11 + rho * step[0] * step[1];
            next.m[1][0] = tmp.m[1][0] * a00 + tmp.m[1][1] * a01 + rho * step[1] * step[0];
            next.m[1][1] = tmp.m[1][0] * a10 + tmp.m[1][1] * a11 + rho * step[1] * step[1];
            h_inv = next;
        }
        const double moved = std::max(std::abs(step[0]), std::abs(step[1]));
        const double improved = std::abs(fx - fn);
        x = xn;
        fx = fn;
        g = gn;
        if (moved < x_tol && improved <= f_tol * (std::abs(fn) + 1.0)) {
            converged = true;
            break;
        }
    }
    return MinimizeResult{x, fx, evals, converged};
}

// Golden-section search on a bracket, expanding the bracket first if the
// minimum sits on an edge.
template <class F>
double golden_minimize(F&& f, double lo, double hi, double x_tol, int max_iterations = 200) {
    require(lo < hi, errc::parameter_domain, "bad bracket");
    double f_lo = f(lo), f_hi = f(hi);
    for (int i = 0; i < 60; ++i) {
        const double w = hi - lo;
        if (f_lo < f(lo + 0.382 * w)) {
            lo -= w;
            f_lo = f(lo);
        } else if (f_hi < f(hi - 0.382 * w)) {
            hi += w;
            f_hi = f(hi);
        } else {
            break;
        }
    }
    const double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < max_iterations && (b - a) > x_tol; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace mpsts
