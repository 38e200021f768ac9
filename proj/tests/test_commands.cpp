#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pcfe/commands.hpp"

namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("pcfe_test_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }
    std::string sub(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

pcfe::ExperimentConfig short_config(const std::string& out, std::size_t n = 120) {
    pcfe::ExperimentConfig c;
    c.gp.n_steps = n;
    c.output_dir = out;
    return c;
}

}  // namespace

TEST(Simulate, WritesTruthAndObservations) {
    TempDir tmp;
    auto cfg = short_config(tmp.sub("sim"), 1000);
    const auto data = pcfe::cmd_simulate(cfg);
    const auto truth = read_csv(tmp.path() / "sim" / "truth.csv");
    const auto obs = read_csv(tmp.path() / "sim" / "observations.csv");
    ASSERT_EQ(truth.size(), 1000u);
    ASSERT_EQ(obs.size(), 1000u);
    EXPECT_EQ(truth[0].size(), 5u);
    EXPECT_EQ(obs[0].size(), 3u);
    EXPECT_EQ(truth[0][1], data.truth.states[0][0]);
    EXPECT_EQ(obs[999][2], data.observations.values[999][1]);
    EXPECT_TRUE(fs::exists(tmp.path() / "sim" / "config.json"));
}

TEST(Simulate, ZeroAmplitudeObservesTruth) {
    TempDir tmp;
    auto cfg = short_config(tmp.sub("o"));
    cfg.noise.amplitude = 0.0;
    const auto data = pcfe::cmd_simulate(cfg);
    for (std::size_t k = 0; k < data.truth.size(); ++k)
        EXPECT_EQ(data.observations.values[k], data.truth.states[k]);
}

TEST(Simulate, RerunIsByteIdentical) {
    TempDir tmp;
    pcfe::cmd_simulate(short_config(tmp.sub("a")));
    pcfe::cmd_simulate(short_config(tmp.sub("b")));
    for (const char* f : {"truth.csv", "observations.csv"})
        EXPECT_EQ(slurp(tmp.path() / "a" / f), slurp(tmp.path() / "b" / f)) << f;
}

TEST(Infer, TraceColumnsAreConsistent) {
    TempDir tmp;
    const auto cfg = short_config(tmp.sub("i"));
    const auto run = pcfe::cmd_infer(cfg, "M2");
    const auto rows = read_csv(tmp.path() / "i" / "trace_M2.csv");
    ASSERT_EQ(rows.size(), cfg.gp.n_steps);
    double prev = 0.0;
    for (const auto& r : rows) {
        ASSERT_EQ(r.size(), 9u);
        EXPECT_GE(r[5], 0.0);
        EXPECT_GE(r[6], prev);
        prev = r[6];
        EXPECT_EQ(r[7], r[1]);  // identity observation map
        EXPECT_EQ(r[8], r[2]);
    }
    EXPECT_EQ(prev, run.summary.free_action);

    std::ifstream in(tmp.path() / "i" / "summary_M2.json");
    const auto s = pcfe::run_summary_from_json(nlohmann::json::parse(in));
    EXPECT_EQ(s.model_name, "M2");
    EXPECT_EQ(s.free_action, run.summary.free_action);
    EXPECT_EQ(s.mse_position, run.summary.mse_position);
}

TEST(Infer, UnknownModelIsValidationError) {
    TempDir tmp;
    EXPECT_THROW(pcfe::cmd_infer(short_config(tmp.sub("x")), "M9"), pcfe::ValidationError);
}

TEST(Compare, DuplicateModelsTie) {
    TempDir tmp;
    auto cfg = short_config(tmp.sub("d"), 60);
    cfg.models = {pcfe::ModelConfig::trig("T1"), pcfe::ModelConfig::trig("T2")};
    const auto rep = pcfe::cmd_compare(cfg);
    EXPECT_EQ(rep.comparison.bayes_factor, 1.0);
    EXPECT_TRUE(rep.comparison.tie);
    EXPECT_FALSE(rep.comparison.selected_model);
}

TEST(Compare, SwappingModelsInvertsBayesFactor) {
    TempDir tmp;
    auto cfg = short_config(tmp.sub("s1"));
    const auto ab = pcfe::cmd_compare(cfg);
    std::swap(cfg.models[0], cfg.models[1]);
    cfg.output_dir = tmp.sub("s2");
    const auto ba = pcfe::cmd_compare(cfg);
    EXPECT_NEAR(ab.comparison.bayes_factor * ba.comparison.bayes_factor, 1.0, 1e-12);
    EXPECT_EQ(ab.comparison.selected_model, ba.comparison.selected_model);
}

TEST(Compare, ParallelMatchesSequential) {
    TempDir tmp;
    auto cfg = short_config(tmp.sub("seq"));
    pcfe::cmd_compare(cfg, false);
    cfg.output_dir = tmp.sub("par");
    pcfe::cmd_compare(cfg, true);
    for (const char* f : {"comparison.json", "trace_M1.csv", "trace_M2.csv", "observations.csv"})
        EXPECT_EQ(slurp(tmp.path() / "seq" / f), slurp(tmp.path() / "par" / f)) << f;
}

TEST(Compare, ReportJsonMatchesRuns) {
    TempDir tmp;
    auto cfg = short_config(tmp.sub("c"));
    cfg.models.push_back(pcfe::ModelConfig::pullback("M3"));
    cfg.models.back().phi << 2.0, 1.0;
    const auto rep = pcfe::cmd_compare(cfg);
    EXPECT_EQ(rep.pairwise.size(), 3u);

    std::ifstream in(tmp.path() / "c" / "comparison.json");
    const auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j.at("first_model"), "M1");
    EXPECT_EQ(j.at("second_model"), "M2");
    EXPECT_EQ(j.at("bayes_factor").get<double>(), rep.comparison.bayes_factor);
    ASSERT_EQ(j.at("models").size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto s = pcfe::run_summary_from_json(j.at("models")[i]);
        EXPECT_EQ(s.free_action, rep.runs[i].summary.free_action);
        EXPECT_EQ(s.mse_generalized, rep.runs[i].summary.mse_generalized);
    }
    EXPECT_EQ(j.at("pairwise").size(), 3u);
}

TEST(Compare, NeedsTwoModels) {
    TempDir tmp;
    auto cfg = short_config(tmp.sub("one"));
    cfg.models.resize(1);
    EXPECT_THROW(pcfe::cmd_compare(cfg), pcfe::ValidationError);
}

TEST(Commands, UnwritableOutputIsIoError) {
    TempDir tmp;
    const fs::path blocker = tmp.path() / "file";
    std::ofstream(blocker) << "x";
    auto cfg = short_config((blocker / "sub").string(), 10);
    EXPECT_THROW(pcfe::cmd_simulate(cfg), pcfe::IoError);
}

TEST(CheckGradients, BuiltInModelsPass) {
    const pcfe::ExperimentConfig cfg;
    for (const char* name : {"M1", "M2", "pullback", "trig"}) {
        const auto rep = pcfe::check_gradients(pcfe::resolve_model(cfg, name), 100, 7);
        EXPECT_TRUE(rep.passed) << name << " max abs " << rep.max_abs_deviation;
        EXPECT_EQ(rep.n_samples, 100u);
        EXPECT_LT(rep.max_rel_deviation, 1e-5);
    }
}

TEST(CheckGradients, RejectsZeroSamplesAndUnknownModel) {
    const pcfe::ExperimentConfig cfg;
    EXPECT_THROW(pcfe::check_gradients(pcfe::resolve_model(cfg, "trig"), 0, 1),
                 pcfe::ValidationError);
    EXPECT_THROW(pcfe::resolve_model(cfg, "spline"), pcfe::ValidationError);
}
