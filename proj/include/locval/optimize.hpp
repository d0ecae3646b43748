#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "locval/core.hpp"

namespace locval::optimize {

/// Objective returning f(x) and writing the gradient; non-finite values mark
/// infeasible points.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct Options {
    int max_iterations = 100;
    int memory = 8;
    double gradient_tolerance = 1e-5;   // projected-gradient inf-norm
    double relative_tolerance = 1e-10;  // relative objective gain over `stall_window` iterations
    int stall_window = 1;
    int max_backtracks = 30;
};

struct Result {
    Vector x;
    double value = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    int evaluations = 0;
};

namespace detail {

inline Vector project(const Vector& x, const Vector& lo, const Vector& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

/// Gradient with components zeroed where ascent would leave the box.
inline Vector projected_gradient(const Vector& x, const Vector& g, const Vector& lo, const Vector& hi) {
    Vector pg = g;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if ((x[i] <= lo[i] && g[i] < 0.0) || (x[i] >= hi[i] && g[i] > 0.0)) pg[i] = 0.0;
    }
    return pg;
}

}  // namespace detail

/// Maximizes `f` over the box [lo, hi] with a projected limited-memory BFGS
/// ascent. Every accepted step strictly increases f, so the returned value is
/// never below the value at the (projected) start.
inline Result maximize_box(const Objective& f, Vector x0, const Vector& lo, const Vector& hi,
                           const Options& opt = {}) {
    Result res;
    const Eigen::Index n = x0.size();
    Vector x = detail::project(x0, lo, hi);
    Vector g(n);
    double fx = f(x, g);
    res.evaluations = 1;
    res.x = x;
    res.value = fx;
    if (!std::isfinite(fx)) return res;

    std::deque<Vector> s_hist, y_hist;
    std::deque<double> rho_hist;
    std::deque<double> values{fx};

    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it + 1;
        const Vector pg = detail::projected_gradient(x, g, lo, hi);
        if (pg.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) break;

        // two-loop recursion on the ascent direction, restricted to free variables
        Vector q = pg;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[static_cast<std::size_t>(i)] = rho_hist[static_cast<std::size_t>(i)] * s_hist[static_cast<std::size_t>(i)].dot(q);
            q -= alpha[static_cast<std::size_t>(i)] * y_hist[static_cast<std::size_t>(i)];
        }
        double gamma = 1.0;
        if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        else gamma = 1.0 / std::max(1.0, pg.norm());
        Vector dir = gamma * q;
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(dir);
            dir += s_hist[i] * (alpha[i] - beta);
        }
        for (Eigen::Index i = 0; i < n; ++i)
            if (pg[i] == 0.0) dir[i] = 0.0;
        if (dir.dot(pg) <= 0.0) {
            dir = pg / std::max(1.0, pg.norm());
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        // backtracking along the projected path with an Armijo condition
        double step = 1.0;
        bool accepted = false;
        Vector xn(n), gn(n);
        double fn = 0.0;
        for (int bt = 0; bt < opt.max_backtracks; ++bt) {
            xn = detail::project(x + step * dir, lo, hi);
            const Vector dx = xn - x;
            if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;
            fn = f(xn, gn);
            ++res.evaluations;
            if (std::isfinite(fn) && fn >= fx + 1e-4 * g.dot(dx) && fn > fx) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (s_hist.empty()) break;
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            continue;
        }

        const Vector s = xn - x;
        const Vector y = g - gn;  // curvature pair of the minimization problem -f
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opt.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        values.push_back(fn);
        if (static_cast<int>(values.size()) > opt.stall_window + 1) values.pop_front();
        const double rel = (fn - values.front()) / std::max({1.0, std::abs(values.front()), std::abs(fn)});
        x = xn;
        g = gn;
        fx = fn;
        res.x = x;
        res.value = fx;
        if (static_cast<int>(values.size()) == opt.stall_window + 1 && rel < opt.relative_tolerance) break;
    }
    return res;
}

}  // namespace locval::optimize
