// Hidden-state inference: for each observation the generalised belief
// follows d(mu~)/ds = D mu~ - grad F(mu~; y) for a fixed pseudo-time horizon.
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pcfe/error.hpp"
#include "pcfe/gp_sim.hpp"
#include "pcfe/model.hpp"
#include "pcfe/rk45.hpp"
#include "pcfe/vfe.hpp"

namespace pcfe {

/// Block derivative (shift) operator on generalised coordinates:
/// superdiagonal-block identity, so (x, x', x'', ...) -> (x', x'', ..., 0).
class ShiftOperator {
public:
    ShiftOperator(std::size_t orders, std::size_t state_dim) : orders_(orders), dim_(state_dim) {
        if (orders < 1 || state_dim < 1)
            throw InvalidInput("shift operator needs orders >= 1 and state_dim >= 1");
        const auto k = static_cast<Eigen::Index>(orders);
        const auto d = static_cast<Eigen::Index>(state_dim);
        Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(k, k);
        for (Eigen::Index i = 0; i + 1 < k; ++i) shift(i, i + 1) = 1.0;
        // Kronecker product shift (x) I_d
        m_ = Eigen::MatrixXd::Zero(k * d, k * d);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j)
                if (shift(i, j) != 0.0)
                    m_.block(i * d, j * d, d, d) = shift(i, j) * Eigen::MatrixXd::Identity(d, d);
    }

    const Eigen::MatrixXd& matrix() const noexcept { return m_; }
    std::size_t orders() const noexcept { return orders_; }
    std::size_t state_dim() const noexcept { return dim_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
        if (v.size() != m_.cols()) throw InvalidInput("shift operator: dimension mismatch");
        return m_ * v;
    }

private:
    std::size_t orders_;
    std::size_t dim_;
    Eigen::MatrixXd m_;
};

inline ShiftOperator shift_operator(std::size_t orders, std::size_t state_dim) {
    return ShiftOperator(orders, state_dim);
}

enum class BeliefInit { random_normal, zero };
enum class FreeActionWeighting { unweighted, dt_weighted };

struct InferenceConfig {
    double horizon = 0.5;  ///< pseudo-time integrated per observation
    double rtol = 1e-6;
    double atol = 1e-8;
    std::uint64_t init_seed = 0;
    std::size_t max_steps = 100000;
    BeliefInit init = BeliefInit::random_normal;
    FreeActionWeighting weighting = FreeActionWeighting::unweighted;

    void validate() const {
        if (!(horizon > 0.0)) throw InvalidInput("inference horizon must be positive");
        if (!(rtol > 0.0) || !(atol > 0.0))
            throw InvalidInput("inference tolerances must be positive");
        if (max_steps < 1) throw InvalidInput("inference max_steps must be >= 1");
    }
};

struct InferenceTrace {
    std::vector<GeneralizedState> beliefs;
    std::vector<double> vfe_values;
    std::vector<double> free_action_running;
    std::vector<Eigen::VectorXd> predicted_obs;

    std::size_t size() const noexcept { return beliefs.size(); }
    double free_action() const { return free_action_running.empty() ? 0.0 : free_action_running.back(); }
};

/// Right-hand side of the belief ODE for one observation.
inline Eigen::VectorXd belief_derivative(const ModelSpec& model, const Eigen::VectorXd& belief_flat,
                                         const Eigen::VectorXd& y, const ShiftOperator& D) {
    const auto belief = GeneralizedState::from_flat(belief_flat);
    return D.apply(belief_flat) - vfe_gradient(model, belief, y).flat();
}

namespace detail {

template <class E>
[[noreturn]] void rethrow_at_observation(const E& e, std::size_t index) {
    const std::string msg = "observation " + std::to_string(index) + ": " + e.what();
    if constexpr (std::is_same_v<E, DivergenceError>)
        throw DivergenceError(msg, e.step());
    else
        throw E(msg);
}

}  // namespace detail

inline GeneralizedState initial_belief(const InferenceConfig& config, Eigen::Index state_dim) {
    GeneralizedState b{Eigen::VectorXd::Zero(state_dim), Eigen::VectorXd::Zero(state_dim)};
    if (config.init == BeliefInit::random_normal) {
        std::mt19937_64 rng(config.init_seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < state_dim; ++i) b.mu[i] = normal(rng);
        for (Eigen::Index i = 0; i < state_dim; ++i) b.mu_dot[i] = normal(rng);
    }
    return b;
}

/// Runs belief updating over the whole observation series, starting from
/// `start` when given, otherwise from the configured initial belief.
inline InferenceTrace run_inference(const ModelSpec& model, const ObservationSeries& obs,
                                    const InferenceConfig& config,
                                    const GeneralizedState* start = nullptr) {
    config.validate();
    if (obs.empty()) throw InvalidInput("run_inference: observation series is empty");

    const Eigen::Index dx = model.state_dim();
    const ShiftOperator D(2, static_cast<std::size_t>(dx));
    Eigen::VectorXd belief = start ? start->flat() : initial_belief(config, dx).flat();
    if (belief.size() != 2 * dx) throw InvalidInput("run_inference: start belief has wrong size");

    double weight = 1.0;
    if (config.weighting == FreeActionWeighting::dt_weighted) {
        if (obs.times.size() < 2)
            throw InvalidInput("run_inference: dt weighting needs at least two timestamps");
        weight = obs.times[1] - obs.times[0];
    }

    const Rk45Options opt{.rtol = config.rtol, .atol = config.atol, .max_steps = config.max_steps};

    InferenceTrace trace;
    trace.beliefs.reserve(obs.size());
    trace.vfe_values.reserve(obs.size());
    trace.free_action_running.reserve(obs.size());
    trace.predicted_obs.reserve(obs.size());

    double free_action = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const Eigen::VectorXd& y = obs.values[i];
        if (y.size() != model.obs_dim())
            throw InvalidInput("run_inference: observation " + std::to_string(i) +
                               " has wrong dimension");
        try {
            belief = rk45_integrate(
                [&](const Eigen::VectorXd& b) { return belief_derivative(model, b, y, D); },
                belief, config.horizon, opt);
        } catch (const DivergenceError& e) {
            detail::rethrow_at_observation(e, i);
        } catch (const NonConvergenceError& e) {
            detail::rethrow_at_observation(e, i);
        }

        auto state = GeneralizedState::from_flat(belief);
        const double f = approx_vfe(model, state, y);
        free_action += weight * f;
        trace.predicted_obs.push_back(model.obs(state.mu));
        trace.vfe_values.push_back(f);
        trace.free_action_running.push_back(free_action);
        trace.beliefs.push_back(std::move(state));
    }
    return trace;
}

}  // namespace pcfe
