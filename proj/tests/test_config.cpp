#include <algorithm>
#include <string>

#include <gtest/gtest.h>

#include "pcfe/config.hpp"

using nlohmann::json;

namespace {

bool mentions(const pcfe::ValidationError& e, const std::string& field) {
    return std::any_of(e.fields().begin(), e.fields().end(),
                       [&](const std::string& f) { return f.rfind(field, 0) == 0; });
}

}  // namespace

TEST(Config, EmptyDocumentGivesReferenceExperiment) {
    const auto c = pcfe::config_from_json(json::object());
    EXPECT_EQ(c.gp.params.alpha, 0.7);
    EXPECT_EQ(c.gp.params.beta, 0.5);
    EXPECT_EQ(c.gp.params.gamma, 0.3);
    EXPECT_EQ(c.gp.params.delta, 0.2);
    EXPECT_EQ(c.gp.x0, (Eigen::VectorXd(2) << 1.0, 0.5).finished());
    EXPECT_EQ(c.gp.dt, 0.1);
    EXPECT_EQ(c.gp.n_steps, 1000u);
    ASSERT_EQ(c.models.size(), 2u);
    EXPECT_EQ(c.models[0].name, "M1");
    EXPECT_EQ(c.models[0].type, pcfe::ModelType::pullback);
    EXPECT_EQ(c.models[0].A, 0.5 * Eigen::MatrixXd::Identity(2, 2));
    EXPECT_EQ(c.models[1].name, "M2");
    EXPECT_EQ(c.models[1].type, pcfe::ModelType::trig);
}

TEST(Config, RoundTripsThroughJson) {
    json j = json::parse(R"({
        "gp": {"alpha": 0.8, "n_steps": 250, "x0": [2.0, 1.0]},
        "noise": {"kernel_sigma": 0.3, "amplitude": 0.05, "seed": 77},
        "models": [
            {"name": "pb", "type": "pullback", "A": [[0.4, 0.1], [0.0, 0.6]], "phi": [1.5, 0.5],
             "pi_x": [[2, 0], [0, 2]], "pi_y": [[1, 0.2], [0.2, 1]]},
            {"type": "trig"}
        ],
        "inference": {"horizon": 0.25, "init": "zero", "free_action": "dt_weighted", "max_steps": 5000},
        "output_dir": "out"
    })");
    const auto c = pcfe::config_from_json(j);
    EXPECT_EQ(c.gp.params.alpha, 0.8);
    EXPECT_EQ(c.gp.n_steps, 250u);
    EXPECT_EQ(c.noise.seed, 77u);
    EXPECT_EQ(c.models[0].A(0, 1), 0.1);
    EXPECT_EQ(c.models[1].name, "trig");
    EXPECT_EQ(c.inference.init, pcfe::BeliefInit::zero);
    EXPECT_EQ(c.inference.weighting, pcfe::FreeActionWeighting::dt_weighted);

    const json echoed = pcfe::to_json(c);
    const auto again = pcfe::config_from_json(echoed);
    EXPECT_EQ(pcfe::to_json(again), echoed);
}

TEST(Config, ReportsEveryOffendingField) {
    json j = json::parse(R"({
        "gp": {"alpha": -1, "dt": "fast"},
        "noise": {"amplitude": -0.1},
        "inference": {"horizon": 0, "init": "sometimes"},
        "colour": "blue"
    })");
    try {
        pcfe::config_from_json(j);
        FAIL() << "expected a validation error";
    } catch (const pcfe::ValidationError& e) {
        EXPECT_TRUE(mentions(e, "gp.dt"));
        EXPECT_TRUE(mentions(e, "inference.init"));
        EXPECT_TRUE(mentions(e, "colour"));
    }
    // Type errors aside, value errors are all reported together.
    j = json::parse(R"({"gp": {"alpha": -1}, "noise": {"amplitude": -0.1}, "inference": {"horizon": 0}})");
    try {
        pcfe::config_from_json(j);
        FAIL() << "expected a validation error";
    } catch (const pcfe::ValidationError& e) {
        EXPECT_TRUE(mentions(e, "gp.alpha"));
        EXPECT_TRUE(mentions(e, "noise.amplitude"));
        EXPECT_TRUE(mentions(e, "inference.horizon"));
    }
}

TEST(Config, RejectsBadModels) {
    EXPECT_THROW(pcfe::config_from_json(json::parse(R"({"models": []})")), pcfe::ValidationError);
    EXPECT_THROW(pcfe::config_from_json(json::parse(R"({"models": [{"type": "spline"}]})")),
                 pcfe::ValidationError);
    EXPECT_THROW(pcfe::config_from_json(json::parse(
                     R"({"models": [{"type": "trig", "pi_x": [[1, 2], [2, 1]]}]})")),
                 pcfe::ValidationError);
    EXPECT_THROW(pcfe::config_from_json(json::parse(
                     R"({"models": [{"type": "trig", "name": "../evil"}]})")),
                 pcfe::ValidationError);
    EXPECT_THROW(pcfe::config_from_json(json::parse(
                     R"({"models": [{"type": "pullback", "A": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
                         "phi": [0, 0, 0], "pi_x": [[1,0,0],[0,1,0],[0,0,1]],
                         "pi_y": [[1,0,0],[0,1,0],[0,0,1]]}]})")),
                 pcfe::ValidationError);
}

TEST(Config, SeedOverrideReplacesAllSeeds) {
    pcfe::ExperimentConfig c;
    c.override_seed(99);
    EXPECT_EQ(c.noise.seed, 99u);
    EXPECT_EQ(c.inference.init_seed, 99u);
}

TEST(Config, LoadMissingFileIsIoError) {
    EXPECT_THROW(pcfe::load_config("/nonexistent/config.json"), pcfe::IoError);
}
