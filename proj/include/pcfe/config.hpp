// Experiment configuration and its JSON form. Every field has a default so
// that an empty document reproduces the reference Lotka-Volterra experiment.
#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pcfe/error.hpp"
#include "pcfe/gp_sim.hpp"
#include "pcfe/inference.hpp"
#include "pcfe/model.hpp"

namespace pcfe {

struct GpConfig {
    LVParams params;
    Eigen::VectorXd x0 = (Eigen::VectorXd(2) << 1.0, 0.5).finished();
    double dt = 0.1;
    std::size_t n_steps = 1000;
    double overflow_guard = 1e6;
};

struct NoiseConfig {
    double kernel_sigma = 0.5;
    double amplitude = 0.1;
    std::uint64_t seed = 1;
};

enum class ModelType { pullback, trig };

struct ModelConfig {
    std::string name;
    ModelType type = ModelType::pullback;
    Eigen::MatrixXd A;   ///< pullback only
    Eigen::VectorXd phi; ///< pullback only
    Eigen::MatrixXd pi_x;
    Eigen::MatrixXd pi_y;

    static ModelConfig pullback(std::string name = "M1") {
        ModelConfig m;
        m.name = std::move(name);
        m.type = ModelType::pullback;
        m.A = 0.5 * Eigen::MatrixXd::Identity(2, 2);
        m.phi = Eigen::VectorXd::Ones(2);
        m.pi_x = Eigen::MatrixXd::Identity(2, 2);
        m.pi_y = Eigen::MatrixXd::Identity(2, 2);
        return m;
    }

    static ModelConfig trig(std::string name = "M2") {
        ModelConfig m;
        m.name = std::move(name);
        m.type = ModelType::trig;
        m.pi_x = Eigen::MatrixXd::Identity(2, 2);
        m.pi_y = Eigen::MatrixXd::Identity(2, 2);
        return m;
    }
};

struct ExperimentConfig {
    GpConfig gp;
    NoiseConfig noise;
    std::vector<ModelConfig> models{ModelConfig::pullback("M1"), ModelConfig::trig("M2")};
    InferenceConfig inference;
    std::string output_dir = "results";

    /// Replaces every seed in the configuration.
    void override_seed(std::uint64_t seed) {
        noise.seed = seed;
        inference.init_seed = seed;
    }

    const ModelConfig* find_model(const std::string& name) const {
        for (const auto& m : models)
            if (m.name == name) return &m;
        return nullptr;
    }
};

inline const char* to_string(ModelType t) { return t == ModelType::pullback ? "pullback" : "trig"; }

inline ModelSpec build_model(const ModelConfig& mc) {
    if (mc.type == ModelType::pullback)
        return make_pullback_model(mc.A, mc.phi, PrecisionMatrix(mc.pi_x), PrecisionMatrix(mc.pi_y),
                                   mc.name);
    return make_trig_model(PrecisionMatrix(mc.pi_x), PrecisionMatrix(mc.pi_y), mc.name);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

inline nlohmann::json to_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

// Collects validation problems instead of stopping at the first one.
class Reader {
public:
    std::vector<std::string> problems;

    void unknown_keys(const nlohmann::json& obj, const std::string& path,
                      std::initializer_list<const char*> known) {
        std::set<std::string> allowed(known.begin(), known.end());
        for (const auto& [key, _] : obj.items())
            if (!allowed.count(key)) problems.push_back(path + key + ": unknown field");
    }

    bool object(const nlohmann::json& j, const std::string& path) {
        if (j.is_object()) return true;
        problems.push_back(path + ": expected an object");
        return false;
    }

    void number(const nlohmann::json& obj, const char* key, const std::string& path, double& out) {
        if (!obj.contains(key)) return;
        const auto& v = obj.at(key);
        if (!v.is_number()) {
            problems.push_back(path + key + ": expected a number");
            return;
        }
        out = v.get<double>();
    }

    template <class U>
    void count(const nlohmann::json& obj, const char* key, const std::string& path, U& out) {
        if (!obj.contains(key)) return;
        const auto& v = obj.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            problems.push_back(path + key + ": expected a non-negative integer");
            return;
        }
        out = v.get<U>();
    }

    void string(const nlohmann::json& obj, const char* key, const std::string& path,
                std::string& out) {
        if (!obj.contains(key)) return;
        const auto& v = obj.at(key);
        if (!v.is_string()) {
            problems.push_back(path + key + ": expected a string");
            return;
        }
        out = v.get<std::string>();
    }

    void vector(const nlohmann::json& obj, const char* key, const std::string& path,
                Eigen::VectorXd& out) {
        if (!obj.contains(key)) return;
        const auto& v = obj.at(key);
        if (!v.is_array() || v.empty()) {
            problems.push_back(path + key + ": expected a non-empty array of numbers");
            return;
        }
        Eigen::VectorXd tmp(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) {
                problems.push_back(path + key + ": expected a non-empty array of numbers");
                return;
            }
            tmp[static_cast<Eigen::Index>(i)] = v[i].get<double>();
        }
        out = tmp;
    }

    void matrix(const nlohmann::json& obj, const char* key, const std::string& path,
                Eigen::MatrixXd& out) {
        if (!obj.contains(key)) return;
        const auto& v = obj.at(key);
        const std::string bad = path + key + ": expected a rectangular array of number rows";
        if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty()) {
            problems.push_back(bad);
            return;
        }
        const auto rows = v.size();
        const auto cols = v[0].size();
        Eigen::MatrixXd tmp(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < rows; ++i) {
            if (!v[i].is_array() || v[i].size() != cols) {
                problems.push_back(bad);
                return;
            }
            for (std::size_t j = 0; j < cols; ++j) {
                if (!v[i][j].is_number()) {
                    problems.push_back(bad);
                    return;
                }
                tmp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
            }
        }
        out = tmp;
    }
};

inline bool valid_model_name(const std::string& name) {
    if (name.empty()) return false;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
    using detail::to_json;
    nlohmann::json j;
    j["gp"] = {{"alpha", c.gp.params.alpha},
               {"beta", c.gp.params.beta},
               {"gamma", c.gp.params.gamma},
               {"delta", c.gp.params.delta},
               {"x0", to_json(c.gp.x0)},
               {"dt", c.gp.dt},
               {"n_steps", c.gp.n_steps},
               {"overflow_guard", c.gp.overflow_guard}};
    j["noise"] = {{"kernel_sigma", c.noise.kernel_sigma},
                  {"amplitude", c.noise.amplitude},
                  {"seed", c.noise.seed}};
    auto models = nlohmann::json::array();
    for (const auto& m : c.models) {
        nlohmann::json mj = {{"name", m.name}, {"type", to_string(m.type)}};
        if (m.type == ModelType::pullback) {
            mj["A"] = to_json(m.A);
            mj["phi"] = to_json(m.phi);
        }
        mj["pi_x"] = to_json(m.pi_x);
        mj["pi_y"] = to_json(m.pi_y);
        models.push_back(std::move(mj));
    }
    j["models"] = std::move(models);
    j["inference"] = {
        {"horizon", c.inference.horizon},
        {"rtol", c.inference.rtol},
        {"atol", c.inference.atol},
        {"init_seed", c.inference.init_seed},
        {"max_steps", c.inference.max_steps},
        {"init", c.inference.init == BeliefInit::zero ? "zero" : "random"},
        {"free_action", c.inference.weighting == FreeActionWeighting::dt_weighted ? "dt_weighted"
                                                                                  : "sum"}};
    j["output_dir"] = c.output_dir;
    return j;
}

/// Checks every invariant of a configuration, reporting all violations.
inline void validate(const ExperimentConfig& c) {
    std::vector<std::string> p;
    const auto& lv = c.gp.params;
    if (!(lv.alpha > 0.0)) p.push_back("gp.alpha: must be > 0");
    if (!(lv.beta > 0.0)) p.push_back("gp.beta: must be > 0");
    if (!(lv.gamma > 0.0)) p.push_back("gp.gamma: must be > 0");
    if (!(lv.delta > 0.0)) p.push_back("gp.delta: must be > 0");
    if (c.gp.x0.size() != 2 || !c.gp.x0.allFinite()) p.push_back("gp.x0: must be 2 finite numbers");
    if (!(c.gp.dt > 0.0)) p.push_back("gp.dt: must be > 0");
    if (c.gp.n_steps < 1) p.push_back("gp.n_steps: must be >= 1");
    if (!(c.gp.overflow_guard > 0.0)) p.push_back("gp.overflow_guard: must be > 0");
    if (!(c.noise.kernel_sigma >= 0.0)) p.push_back("noise.kernel_sigma: must be >= 0");
    if (!(c.noise.amplitude >= 0.0)) p.push_back("noise.amplitude: must be >= 0");
    if (!(c.inference.horizon > 0.0)) p.push_back("inference.horizon: must be > 0");
    if (!(c.inference.rtol > 0.0)) p.push_back("inference.rtol: must be > 0");
    if (!(c.inference.atol > 0.0)) p.push_back("inference.atol: must be > 0");
    if (c.inference.max_steps < 1) p.push_back("inference.max_steps: must be >= 1");
    if (c.output_dir.empty()) p.push_back("output_dir: must not be empty");
    if (c.models.empty()) p.push_back("models: at least one model is required");
    for (std::size_t i = 0; i < c.models.size(); ++i) {
        const auto& m = c.models[i];
        const std::string path = "models[" + std::to_string(i) + "]";
        if (!detail::valid_model_name(m.name))
            p.push_back(path + ".name: must be non-empty and use only [A-Za-z0-9_.-]");
        try {
            const auto spec = build_model(m);
            if (spec.state_dim() != 2)
                p.push_back(path + ": state dimension must be 2 to match the generative process");
        } catch (const InvalidInput& e) {
            p.push_back(path + ": " + e.what());
        }
    }
    if (!p.empty()) throw ValidationError(std::move(p));
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    detail::Reader r;
    if (!r.object(j, "<root>")) throw ValidationError(r.problems);
    r.unknown_keys(j, "", {"gp", "noise", "models", "inference", "output_dir"});

    if (j.contains("gp") && r.object(j["gp"], "gp")) {
        const auto& g = j["gp"];
        r.unknown_keys(g, "gp.", {"alpha", "beta", "gamma", "delta", "x0", "dt", "n_steps",
                                  "overflow_guard"});
        r.number(g, "alpha", "gp.", c.gp.params.alpha);
        r.number(g, "beta", "gp.", c.gp.params.beta);
        r.number(g, "gamma", "gp.", c.gp.params.gamma);
        r.number(g, "delta", "gp.", c.gp.params.delta);
        r.vector(g, "x0", "gp.", c.gp.x0);
        r.number(g, "dt", "gp.", c.gp.dt);
        r.count(g, "n_steps", "gp.", c.gp.n_steps);
        r.number(g, "overflow_guard", "gp.", c.gp.overflow_guard);
    }
    if (j.contains("noise") && r.object(j["noise"], "noise")) {
        const auto& n = j["noise"];
        r.unknown_keys(n, "noise.", {"kernel_sigma", "amplitude", "seed"});
        r.number(n, "kernel_sigma", "noise.", c.noise.kernel_sigma);
        r.number(n, "amplitude", "noise.", c.noise.amplitude);
        r.count(n, "seed", "noise.", c.noise.seed);
    }
    if (j.contains("inference") && r.object(j["inference"], "inference")) {
        const auto& n = j["inference"];
        r.unknown_keys(n, "inference.", {"horizon", "rtol", "atol", "init_seed", "max_steps", "init",
                                         "free_action"});
        r.number(n, "horizon", "inference.", c.inference.horizon);
        r.number(n, "rtol", "inference.", c.inference.rtol);
        r.number(n, "atol", "inference.", c.inference.atol);
        r.count(n, "init_seed", "inference.", c.inference.init_seed);
        r.count(n, "max_steps", "inference.", c.inference.max_steps);
        std::string init = "random";
        r.string(n, "init", "inference.", init);
        if (init == "random")
            c.inference.init = BeliefInit::random_normal;
        else if (init == "zero")
            c.inference.init = BeliefInit::zero;
        else
            r.problems.push_back("inference.init: expected \"random\" or \"zero\"");
        std::string fa = "sum";
        r.string(n, "free_action", "inference.", fa);
        if (fa == "sum")
            c.inference.weighting = FreeActionWeighting::unweighted;
        else if (fa == "dt_weighted")
            c.inference.weighting = FreeActionWeighting::dt_weighted;
        else
            r.problems.push_back("inference.free_action: expected \"sum\" or \"dt_weighted\"");
    }
    if (j.contains("models")) {
        const auto& ms = j["models"];
        if (!ms.is_array()) {
            r.problems.push_back("models: expected an array");
        } else {
            c.models.clear();
            for (std::size_t i = 0; i < ms.size(); ++i) {
                const std::string path = "models[" + std::to_string(i) + "].";
                if (!r.object(ms[i], path.substr(0, path.size() - 1))) continue;
                const auto& mj = ms[i];
                r.unknown_keys(mj, path, {"name", "type", "A", "phi", "pi_x", "pi_y"});
                std::string type;
                r.string(mj, "type", path, type);
                ModelConfig m;
                if (type == "pullback") {
                    m = ModelConfig::pullback();
                } else if (type == "trig") {
                    m = ModelConfig::trig();
                } else {
                    r.problems.push_back(path + "type: expected \"pullback\" or \"trig\"");
                    continue;
                }
                m.name = to_string(m.type);
                r.string(mj, "name", path, m.name);
                if (m.type == ModelType::pullback) {
                    r.matrix(mj, "A", path, m.A);
                    r.vector(mj, "phi", path, m.phi);
                } else if (mj.contains("A") || mj.contains("phi")) {
                    r.problems.push_back(path + "A/phi: only valid for pullback models");
                }
                r.matrix(mj, "pi_x", path, m.pi_x);
                r.matrix(mj, "pi_y", path, m.pi_y);
                c.models.push_back(std::move(m));
            }
        }
    }
    r.string(j, "output_dir", "", c.output_dir);

    if (!r.problems.empty()) throw ValidationError(r.problems);
    validate(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError({std::string("config: malformed JSON: ") + e.what()});
    }
    return config_from_json(j);
}

}  // namespace pcfe
