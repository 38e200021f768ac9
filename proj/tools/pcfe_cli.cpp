// Command-line driver for the predictive-coding state-inference experiment.
//
// Exit codes: 0 success, 1 validation/usage error, 2 numerical failure,
// 3 I/O error.
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pcfe/pcfe.hpp"

namespace {

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2, kIo = 3 };

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string output;
    bool paper_defaults = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON experiment configuration");
    cmd->add_option("--seed", o.seed, "Override every seed in the configuration");
    cmd->add_option("--output", o.output, "Output directory (overrides output_dir)");
    cmd->add_flag("--paper-defaults", o.paper_defaults,
                  "Use the built-in reference configuration");
}

pcfe::ExperimentConfig resolve(const CommonOptions& o) {
    if (o.paper_defaults && !o.config_path.empty())
        throw pcfe::ValidationError({"--paper-defaults and --config are mutually exclusive"});
    pcfe::ExperimentConfig cfg =
        o.config_path.empty() ? pcfe::ExperimentConfig{} : pcfe::load_config(o.config_path);
    if (o.seed) cfg.override_seed(*o.seed);
    if (!o.output.empty()) cfg.output_dir = o.output;
    pcfe::validate(cfg);
    return cfg;
}

void print_summary(const pcfe::RunSummary& s) {
    std::cout << std::setw(10) << s.model_name << "  free_action=" << std::setprecision(6)
              << s.free_action << "  mse_position=" << s.mse_position
              << "  mse_generalized=" << s.mse_generalized << "  n=" << s.n_observations << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictive-coding hidden-state inference on a Lotka-Volterra process"};
    app.require_subcommand(1);

    CommonOptions sim_opts, infer_opts, cmp_opts, grad_opts;
    auto* sim = app.add_subcommand("simulate", "Write truth.csv and observations.csv");
    add_common(sim, sim_opts);

    std::string infer_model;
    auto* infer = app.add_subcommand("infer", "Run inference for one model");
    add_common(infer, infer_opts);
    infer->add_option("model", infer_model, "Model name from the config")->required();

    bool parallel = false;
    auto* cmp = app.add_subcommand("compare", "Run every model and compare by free action");
    add_common(cmp, cmp_opts);
    cmp->add_flag("--parallel-models", parallel, "Run models concurrently");

    std::string grad_model;
    std::size_t n_samples = 100;
    auto* grad = app.add_subcommand("check-gradients",
                                    "Compare analytic and finite-difference VFE gradients");
    add_common(grad, grad_opts);
    grad->add_option("model", grad_model, "Model name or type (pullback | trig)")->required();
    grad->add_option("--samples", n_samples, "Number of random draws");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    try {
        if (sim->parsed()) {
            const auto cfg = resolve(sim_opts);
            const auto data = pcfe::cmd_simulate(cfg);
            std::cout << "wrote " << data.truth.size() << " samples to " << cfg.output_dir << '\n';
        } else if (infer->parsed()) {
            const auto cfg = resolve(infer_opts);
            print_summary(pcfe::cmd_infer(cfg, infer_model).summary);
        } else if (cmp->parsed()) {
            const auto cfg = resolve(cmp_opts);
            const auto report = pcfe::cmd_compare(cfg, parallel);
            for (const auto& run : report.runs) print_summary(run.summary);
            const auto& c = report.comparison;
            std::cout << "BF(" << c.first_model << "," << c.second_model
                      << ") = " << std::setprecision(6) << c.bayes_factor << "  selected: "
                      << (c.selected_model ? *c.selected_model : std::string("tie")) << '\n';
        } else if (grad->parsed()) {
            auto cfg = resolve(grad_opts);
            const std::uint64_t seed = grad_opts.seed.value_or(cfg.inference.init_seed);
            const auto model = pcfe::resolve_model(cfg, grad_model);
            const auto rep = pcfe::check_gradients(model, n_samples, seed);
            std::cout << rep.model_name << ": " << rep.n_samples << " samples, max abs deviation "
                      << std::setprecision(3) << rep.max_abs_deviation
                      << ", max relative deviation " << rep.max_rel_deviation << " -> "
                      << (rep.passed ? "PASS" : "FAIL") << '\n';
            return rep.passed ? kOk : kNumerical;
        }
    } catch (const pcfe::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return kValidation;
    } catch (const pcfe::InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kValidation;
    } catch (const pcfe::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const pcfe::Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}
