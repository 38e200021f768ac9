// Lotka-Volterra generative process and coloured observation noise.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcfe/error.hpp"

namespace pcfe {

struct LVParams {
    double alpha = 0.7;  ///< prey growth rate
    double beta = 0.5;   ///< predation rate
    double gamma = 0.3;  ///< predator death rate
    double delta = 0.2;  ///< predator growth rate

    void validate() const {
        if (!(alpha > 0.0 && beta > 0.0 && gamma > 0.0 && delta > 0.0))
            throw InvalidInput("Lotka-Volterra rates must be strictly positive");
    }
};

/// Sampled solution path of the generative process. `states[k]` is the state
/// after k+1 integration steps, at `times[k] = (k+1)*dt`; `velocities[k]` is
/// the flow evaluated at `states[k]`.
struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> velocities;

    std::size_t size() const noexcept { return states.size(); }
};

struct ObservationSeries {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> values;

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }
};

namespace detail {

inline bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v) {
    return v.allFinite();
}

}  // namespace detail

inline Eigen::VectorXd lotka_volterra_flow(const Eigen::Ref<const Eigen::VectorXd>& x,
                                           const LVParams& p) {
    if (x.size() != 2) throw InvalidInput("Lotka-Volterra state must be a 2-vector");
    if (!detail::all_finite(x)) throw InvalidInput("non-finite Lotka-Volterra state");
    Eigen::VectorXd dx(2);
    dx[0] = p.alpha * x[0] - p.beta * x[0] * x[1];
    dx[1] = -p.gamma * x[1] + p.delta * x[0] * x[1];
    return dx;
}

/// Forward Euler: x_{k+1} = x_k + dt * flow(x_k). Throws DivergenceError
/// naming the step once any component exceeds `overflow_guard` in magnitude.
template <class Flow>
Trajectory euler_integrate(Flow&& flow, const Eigen::VectorXd& x0, double dt,
                           std::size_t n_steps, double overflow_guard = 1e6) {
    if (!(dt > 0.0)) throw InvalidInput("euler_integrate: dt must be positive");
    if (n_steps < 1) throw InvalidInput("euler_integrate: n_steps must be >= 1");
    if (!x0.allFinite()) throw InvalidInput("euler_integrate: non-finite initial state");

    Trajectory traj;
    traj.times.reserve(n_steps);
    traj.states.reserve(n_steps);
    traj.velocities.reserve(n_steps);

    Eigen::VectorXd x = x0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        x = x + dt * flow(x);
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > overflow_guard)
            throw DivergenceError("euler_integrate diverged at step " + std::to_string(k + 1),
                                  k + 1);
        traj.times.push_back(static_cast<double>(k + 1) * dt);
        traj.states.push_back(x);
        traj.velocities.push_back(flow(x));
    }
    return traj;
}

inline Trajectory simulate_lotka_volterra(const LVParams& params, const Eigen::VectorXd& x0,
                                          double dt, std::size_t n_steps,
                                          double overflow_guard = 1e6) {
    params.validate();
    return euler_integrate([&](const Eigen::VectorXd& x) { return lotka_volterra_flow(x, params); },
                           x0, dt, n_steps, overflow_guard);
}

/// Coloured noise: per dimension, a Wiener path (cumulative N(0, dt)
/// increments) smoothed by a Gaussian kernel of width `kernel_sigma` (time
/// units, truncated at +-4 sigma, unit mass), then centred and rescaled to a
/// sample standard deviation of `amplitude`. Near the series ends the kernel
/// is renormalised over the samples that exist.
inline std::vector<Eigen::VectorXd> generate_colored_noise(std::size_t n, double dt,
                                                           double kernel_sigma,
                                                           double amplitude,
                                                           std::uint64_t seed,
                                                           Eigen::Index dim = 2) {
    if (n < 1) throw InvalidInput("generate_colored_noise: n must be >= 1");
    if (!(dt > 0.0)) throw InvalidInput("generate_colored_noise: dt must be positive");
    if (!(kernel_sigma >= 0.0)) throw InvalidInput("generate_colored_noise: kernel_sigma < 0");
    if (!(amplitude >= 0.0)) throw InvalidInput("generate_colored_noise: amplitude < 0");

    std::vector<Eigen::VectorXd> out(n, Eigen::VectorXd::Zero(dim));

    std::vector<double> kernel{1.0};
    if (kernel_sigma > 0.0) {
        const double width = kernel_sigma / dt;  // in samples
        const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * width));
        kernel.assign(static_cast<std::size_t>(2 * radius + 1), 0.0);
        double mass = 0.0;
        for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
            const double u = static_cast<double>(j) / width;
            kernel[static_cast<std::size_t>(j + radius)] = std::exp(-0.5 * u * u);
            mass += kernel[static_cast<std::size_t>(j + radius)];
        }
        for (double& w : kernel) w /= mass;
    }
    const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto len = static_cast<std::ptrdiff_t>(n);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> increment(0.0, std::sqrt(dt));
    std::vector<double> path(n);
    std::vector<double> smooth(n);

    for (Eigen::Index d = 0; d < dim; ++d) {
        double acc = 0.0;
        for (auto& p : path) {
            acc += increment(rng);
            p = acc;
        }
        for (std::ptrdiff_t i = 0; i < len; ++i) {
            double num = 0.0;
            double den = 0.0;
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(-radius, -i);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(radius, len - 1 - i);
            for (std::ptrdiff_t j = lo; j <= hi; ++j) {
                const double w = kernel[static_cast<std::size_t>(j + radius)];
                num += w * path[static_cast<std::size_t>(i + j)];
                den += w;
            }
            smooth[static_cast<std::size_t>(i)] = num / den;
        }

        double mean = 0.0;
        for (double v : smooth) mean += v;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double v : smooth) ss += (v - mean) * (v - mean);
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        const double scale = sd > 0.0 ? amplitude / sd : 0.0;
        for (std::size_t i = 0; i < n; ++i) out[i][d] = (smooth[i] - mean) * scale;
    }
    return out;
}

inline ObservationSeries synthesize_observations(const Trajectory& traj,
                                                 const std::vector<Eigen::VectorXd>& noise) {
    if (noise.size() != traj.size())
        throw InvalidInput("synthesize_observations: noise length " +
                           std::to_string(noise.size()) + " != trajectory length " +
                           std::to_string(traj.size()));
    ObservationSeries obs;
    obs.times = traj.times;
    obs.values.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (noise[k].size() != traj.states[k].size())
            throw InvalidInput("synthesize_observations: noise dimension mismatch at index " +
                               std::to_string(k));
        obs.values.push_back(traj.states[k] + noise[k]);
    }
    return obs;
}

}  // namespace pcfe
