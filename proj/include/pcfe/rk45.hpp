// Adaptive Dormand-Prince 5(4) integrator for autonomous systems.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "pcfe/error.hpp"

namespace pcfe {

struct Rk45Options {
    double rtol = 1e-6;
    double atol = 1e-8;
    std::size_t max_steps = 100000;
    double safety = 0.9;
    double min_factor = 0.2;
    double max_factor = 5.0;
    /// Initial step as a fraction of the horizon.
    double initial_fraction = 0.1;
};

struct Rk45Stats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

namespace dopri5 {

inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;

inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                        a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;

// 5th-order weights (also row 7 of the tableau: first-same-as-last).
inline constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                        b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;

// Difference between 5th- and embedded 4th-order weights.
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

}  // namespace dopri5

/// Integrates dx/ds = deriv(x) from s = 0 to s = horizon and returns x(horizon).
/// A step is accepted when every component of the embedded error estimate is
/// within atol + rtol * max(|x_old|, |x_new|).
template <class Deriv>
Eigen::VectorXd rk45_integrate(Deriv&& deriv, const Eigen::VectorXd& state0, double horizon,
                               const Rk45Options& opt = {}, Rk45Stats* stats = nullptr) {
    using namespace dopri5;
    if (!(horizon > 0.0)) throw InvalidInput("rk45_integrate: horizon must be positive");
    if (!(opt.rtol > 0.0) || !(opt.atol > 0.0))
        throw InvalidInput("rk45_integrate: tolerances must be positive");
    if (!state0.allFinite()) throw DivergenceError("rk45_integrate: non-finite initial state", 0);

    Eigen::VectorXd x = state0;
    Eigen::VectorXd k1 = deriv(x);
    double s = 0.0;
    double h = horizon * opt.initial_fraction;
    std::size_t steps = 0;
    Rk45Stats local;

    while (s < horizon) {
        if (steps >= opt.max_steps)
            throw NonConvergenceError("rk45_integrate: exceeded " + std::to_string(opt.max_steps) +
                                      " steps before reaching the horizon");
        ++steps;
        const bool last = s + h >= horizon;
        if (last) h = horizon - s;

        const Eigen::VectorXd k2 = deriv(x + h * (a21 * k1));
        const Eigen::VectorXd k3 = deriv(x + h * (a31 * k1 + a32 * k2));
        const Eigen::VectorXd k4 = deriv(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Eigen::VectorXd k5 = deriv(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Eigen::VectorXd k6 =
            deriv(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Eigen::VectorXd x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Eigen::VectorXd k7 = deriv(x_new);

        const Eigen::VectorXd err =
            h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const Eigen::ArrayXd scale =
            opt.atol + opt.rtol * x.array().abs().max(x_new.array().abs());
        const double err_norm = (err.array().abs() / scale).maxCoeff();

        if (!std::isfinite(err_norm) || !x_new.allFinite()) {
            // Shrink and retry; only give up once the step is negligible.
            if (h <= 1e-14 * horizon)
                throw DivergenceError("rk45_integrate: state became non-finite", steps);
            h *= opt.min_factor;
            ++local.rejected;
            continue;
        }

        double factor;
        if (err_norm <= 1.0) {
            s = last ? horizon : s + h;
            x = x_new;
            k1 = k7;
            ++local.accepted;
            factor = err_norm == 0.0 ? opt.max_factor
                                     : opt.safety * std::pow(err_norm, -0.2);
        } else {
            ++local.rejected;
            factor = opt.safety * std::pow(err_norm, -0.2);
        }
        h *= std::clamp(factor, opt.min_factor, opt.max_factor);
    }

    if (stats) *stats = local;
    return x;
}

}  // namespace pcfe
