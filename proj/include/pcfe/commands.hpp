// End-to-end experiment commands. Each writes its artefacts to
// config.output_dir and returns the in-memory results.
//
// Files:
//   truth.csv            t,x0,x1,dx0,dx1
//   observations.csv     t,y0,y1
//   trace_<model>.csv    t,mu0,mu1,mudot0,mudot1,vfe,free_action,yhat0,yhat1
//   summary_<model>.json RunSummary
//   comparison.json      RunSummary rows + Bayes factor + selection
//   config.json          configuration with defaults resolved
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <locale>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pcfe/config.hpp"
#include "pcfe/error.hpp"
#include "pcfe/eval.hpp"
#include "pcfe/gp_sim.hpp"
#include "pcfe/inference.hpp"
#include "pcfe/model.hpp"
#include "pcfe/vfe.hpp"

namespace pcfe {

struct SimulationData {
    Trajectory truth;
    ObservationSeries observations;
};

struct ModelRun {
    RunSummary summary;
    InferenceTrace trace;
};

struct CompareReport {
    std::vector<ModelRun> runs;
    ComparisonResult comparison;                ///< first two models
    std::vector<ComparisonResult> pairwise;     ///< every pair i < j
};

struct GradientCheckReport {
    std::string model_name;
    std::size_t n_samples = 0;
    double max_abs_deviation = 0.0;
    double max_rel_deviation = 0.0;  ///< |a - n| / max(|n|, atol / rtol)
    bool passed = true;
};

// ---------------------------------------------------------------------------
// Serialisation helpers
// ---------------------------------------------------------------------------

namespace io {

class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header) {
        out_.imbue(std::locale::classic());
        out_ << std::setprecision(std::numeric_limits<double>::max_digits10);
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory '" + dir.string() + "'");
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::string truth_csv(const Trajectory& t) {
    CsvWriter w({"t", "x0", "x1", "dx0", "dx1"});
    for (std::size_t k = 0; k < t.size(); ++k)
        w.row({t.times[k], t.states[k][0], t.states[k][1], t.velocities[k][0], t.velocities[k][1]});
    return w.str();
}

inline std::string observations_csv(const ObservationSeries& o) {
    CsvWriter w({"t", "y0", "y1"});
    for (std::size_t k = 0; k < o.size(); ++k) w.row({o.times[k], o.values[k][0], o.values[k][1]});
    return w.str();
}

inline std::string trace_csv(const ObservationSeries& o, const InferenceTrace& tr) {
    CsvWriter w({"t", "mu0", "mu1", "mudot0", "mudot1", "vfe", "free_action", "yhat0", "yhat1"});
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const auto& b = tr.beliefs[k];
        w.row({o.times[k], b.mu[0], b.mu[1], b.mu_dot[0], b.mu_dot[1], tr.vfe_values[k],
               tr.free_action_running[k], tr.predicted_obs[k][0], tr.predicted_obs[k][1]});
    }
    return w.str();
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace io

inline nlohmann::json to_json(const RunSummary& s) {
    return {{"model", s.model_name},
            {"free_action", s.free_action},
            {"mse_position", s.mse_position},
            {"mse_generalized", s.mse_generalized},
            {"n_observations", s.n_observations}};
}

inline RunSummary run_summary_from_json(const nlohmann::json& j) {
    RunSummary s;
    s.model_name = j.at("model").get<std::string>();
    s.free_action = j.at("free_action").get<double>();
    s.mse_position = j.at("mse_position").get<double>();
    s.mse_generalized = j.at("mse_generalized").get<double>();
    s.n_observations = j.at("n_observations").get<std::size_t>();
    return s;
}

inline nlohmann::json to_json(const ComparisonResult& c) {
    nlohmann::json j = {{"first_model", c.first_model},
                        {"second_model", c.second_model},
                        {"bayes_factor", c.bayes_factor},
                        {"tie", c.tie}};
    j["selected_model"] = c.selected_model ? nlohmann::json(*c.selected_model) : nlohmann::json();
    return j;
}

inline nlohmann::json to_json(const CompareReport& r) {
    nlohmann::json j = to_json(r.comparison);
    auto rows = nlohmann::json::array();
    for (const auto& run : r.runs) rows.push_back(to_json(run.summary));
    j["models"] = std::move(rows);
    auto pairs = nlohmann::json::array();
    for (const auto& p : r.pairwise) pairs.push_back(to_json(p));
    j["pairwise"] = std::move(pairs);
    return j;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline SimulationData simulate(const ExperimentConfig& cfg) {
    SimulationData d;
    d.truth = simulate_lotka_volterra(cfg.gp.params, cfg.gp.x0, cfg.gp.dt, cfg.gp.n_steps,
                                      cfg.gp.overflow_guard);
    const auto noise = generate_colored_noise(cfg.gp.n_steps, cfg.gp.dt, cfg.noise.kernel_sigma,
                                              cfg.noise.amplitude, cfg.noise.seed);
    d.observations = synthesize_observations(d.truth, noise);
    return d;
}

inline ModelRun run_model(const ModelConfig& mc, const SimulationData& data,
                          const InferenceConfig& inference) {
    const ModelSpec model = build_model(mc);
    ModelRun run;
    run.trace = run_inference(model, data.observations, inference);
    run.summary = summarize_run(data.truth, run.trace, mc.name);
    return run;
}

namespace detail {

inline std::filesystem::path prepare_output(const ExperimentConfig& cfg) {
    const std::filesystem::path dir(cfg.output_dir);
    io::ensure_directory(dir);
    io::write_file(dir / "config.json", io::dump(to_json(cfg)));
    return dir;
}

}  // namespace detail

inline SimulationData cmd_simulate(const ExperimentConfig& cfg) {
    validate(cfg);
    const auto data = simulate(cfg);
    const auto dir = detail::prepare_output(cfg);
    io::write_file(dir / "truth.csv", io::truth_csv(data.truth));
    io::write_file(dir / "observations.csv", io::observations_csv(data.observations));
    return data;
}

inline ModelRun cmd_infer(const ExperimentConfig& cfg, const std::string& model_name) {
    validate(cfg);
    const ModelConfig* mc = cfg.find_model(model_name);
    if (!mc) throw ValidationError({"model '" + model_name + "' is not defined in the config"});
    const auto data = simulate(cfg);
    auto run = run_model(*mc, data, cfg.inference);
    const auto dir = detail::prepare_output(cfg);
    io::write_file(dir / ("trace_" + mc->name + ".csv"), io::trace_csv(data.observations, run.trace));
    io::write_file(dir / ("summary_" + mc->name + ".json"), io::dump(to_json(run.summary)));
    return run;
}

/// Runs every configured model on one shared observation realisation.
inline CompareReport cmd_compare(const ExperimentConfig& cfg, bool parallel_models = false) {
    validate(cfg);
    if (cfg.models.size() < 2)
        throw ValidationError({"models: compare needs at least two models"});
    const auto data = simulate(cfg);

    CompareReport report;
    if (parallel_models) {
        std::vector<std::future<ModelRun>> jobs;
        for (const auto& mc : cfg.models)
            jobs.push_back(std::async(std::launch::async, [&cfg, &data, &mc] {
                return run_model(mc, data, cfg.inference);
            }));
        for (auto& job : jobs) report.runs.push_back(job.get());
    } else {
        for (const auto& mc : cfg.models) report.runs.push_back(run_model(mc, data, cfg.inference));
    }

    for (std::size_t i = 0; i < report.runs.size(); ++i)
        for (std::size_t j = i + 1; j < report.runs.size(); ++j)
            report.pairwise.push_back(bayes_factor(report.runs[i].summary.free_action,
                                                   report.runs[j].summary.free_action,
                                                   report.runs[i].summary.model_name,
                                                   report.runs[j].summary.model_name));
    report.comparison = report.pairwise.front();

    const auto dir = detail::prepare_output(cfg);
    io::write_file(dir / "truth.csv", io::truth_csv(data.truth));
    io::write_file(dir / "observations.csv", io::observations_csv(data.observations));
    for (const auto& run : report.runs)
        io::write_file(dir / ("trace_" + run.summary.model_name + ".csv"),
                       io::trace_csv(data.observations, run.trace));
    io::write_file(dir / "comparison.json", io::dump(to_json(report)));
    return report;
}

/// Compares analytic and finite-difference VFE gradients at random beliefs and
/// observations drawn from N(0, 4 I).
inline GradientCheckReport check_gradients(const ModelSpec& model, std::size_t n_samples,
                                           std::uint64_t seed, double rtol = 1e-5,
                                           double atol = 1e-8, double h = 1e-6) {
    if (n_samples < 1) throw ValidationError({"n_samples: must be >= 1"});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 2.0);
    auto draw = [&](Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
        return v;
    };

    GradientCheckReport rep;
    rep.model_name = model.name();
    rep.n_samples = n_samples;
    const double floor = atol / rtol;
    for (std::size_t s = 0; s < n_samples; ++s) {
        GeneralizedState b{draw(model.state_dim()), draw(model.state_dim())};
        const Eigen::VectorXd y = draw(model.obs_dim());
        const Eigen::VectorXd a = vfe_gradient(model, b, y).flat();
        const Eigen::VectorXd n = finite_diff_gradient(model, b, y, h).flat();
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            const double dev = std::abs(a[i] - n[i]);
            rep.max_abs_deviation = std::max(rep.max_abs_deviation, dev);
            rep.max_rel_deviation = std::max(rep.max_rel_deviation, dev / std::max(std::abs(n[i]), floor));
            if (dev > atol + rtol * std::abs(n[i])) rep.passed = false;
        }
    }
    return rep;
}

/// Resolves `name` against the configured model names, then the built-in
/// types "pullback" and "trig" with default parameters.
inline ModelSpec resolve_model(const ExperimentConfig& cfg, const std::string& name) {
    if (const ModelConfig* mc = cfg.find_model(name)) return build_model(*mc);
    for (const auto& mc : cfg.models)
        if (name == to_string(mc.type)) return build_model(mc);
    if (name == "pullback") return build_model(ModelConfig::pullback("pullback"));
    if (name == "trig") return build_model(ModelConfig::trig("trig"));
    throw ValidationError({"unknown model '" + name + "'"});
}

}  // namespace pcfe
