// Scoring of inference runs and free-action model comparison.
#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "pcfe/error.hpp"
#include "pcfe/gp_sim.hpp"
#include "pcfe/inference.hpp"

namespace pcfe {

enum class MseMode { position, generalized };

struct RunSummary {
    std::string model_name;
    double free_action = 0.0;
    double mse_position = 0.0;
    double mse_generalized = 0.0;
    std::size_t n_observations = 0;
};

/// Bayes factor BF_{1,2} taken, as a proxy, to be the ratio of free actions
/// FA(M1) / FA(M2). A ratio above one favours the second model.
struct ComparisonResult {
    std::string first_model;
    std::string second_model;
    double bayes_factor = 1.0;
    bool tie = false;
    std::optional<std::string> selected_model;  ///< empty on a tie
};

/// Sum over time of squared errors summed over components, divided by the
/// number of samples.
inline double mse(const Trajectory& truth, const InferenceTrace& trace, MseMode mode) {
    if (truth.size() != trace.size())
        throw InvalidInput("mse: trajectory length " + std::to_string(truth.size()) +
                           " != trace length " + std::to_string(trace.size()));
    if (truth.size() == 0) throw InvalidInput("mse: empty trajectory");
    double total = 0.0;
    for (std::size_t n = 0; n < truth.size(); ++n) {
        total += (truth.states[n] - trace.beliefs[n].mu).squaredNorm();
        if (mode == MseMode::generalized)
            total += (truth.velocities[n] - trace.beliefs[n].mu_dot).squaredNorm();
    }
    return total / static_cast<double>(truth.size());
}

inline ComparisonResult bayes_factor(double fa_first, double fa_second,
                                     std::string first = "M1", std::string second = "M2") {
    if (!(fa_first > 0.0) || !(fa_second > 0.0))
        throw InvalidInput("bayes_factor: free actions must be positive");
    ComparisonResult r;
    r.first_model = std::move(first);
    r.second_model = std::move(second);
    r.bayes_factor = fa_first / fa_second;
    if (r.bayes_factor > 1.0)
        r.selected_model = r.second_model;
    else if (r.bayes_factor < 1.0)
        r.selected_model = r.first_model;
    else
        r.tie = true;
    return r;
}

inline RunSummary summarize_run(const Trajectory& truth, const InferenceTrace& trace,
                                std::string model_name) {
    RunSummary s;
    s.model_name = std::move(model_name);
    s.mse_position = mse(truth, trace, MseMode::position);
    s.mse_generalized = mse(truth, trace, MseMode::generalized);
    s.free_action = trace.free_action();
    s.n_observations = trace.size();
    return s;
}

}  // namespace pcfe
