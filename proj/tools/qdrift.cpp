// qdrift: figures, pricing, transforms, oracle comparisons and sweeps.
//
// Exit codes: 0 success, 2 validation or domain error, 3 numerical
// convergence failure, 1 I/O or anything else.

#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using qdrift::cli::RunConfig;

/// Copies one field from the flag holder into the resolved config.
struct Binding {
    CLI::Option* option;
    std::function<void(RunConfig&, const RunConfig&)> copy;
};

template <class T>
void bind_option(CLI::App& app, std::vector<Binding>& out, RunConfig& flags, const std::string& name,
                 T RunConfig::*field, const std::string& help) {
    auto* opt = app.add_option(name, flags.*field, help);
    out.push_back({opt, [field](RunConfig& dst, const RunConfig& src) { dst.*field = src.*field; }});
}

int fail(int code, const std::string& message) {
    std::cerr << "qdrift: " << message << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-drift pricing: return distributions, drifts and oracle checks"};
    app.require_subcommand(1);

    RunConfig flags;
    std::vector<Binding> bindings;
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)")->check(CLI::ExistingFile);

    bind_option(app, bindings, flags, "--state", &RunConfig::state, "'gaussian' or a JSON state file");
    bind_option(app, bindings, flags, "--x0", &RunConfig::x0, "Gaussian centre");
    bind_option(app, bindings, flags, "--sigma-s", &RunConfig::sigma_s, "Gaussian width");
    bind_option(app, bindings, flags, "--alpha", &RunConfig::alpha, "chirp");
    bind_option(app, bindings, flags, "--k0", &RunConfig::k0, "boost");
    bind_option(app, bindings, flags, "--payoff", &RunConfig::payoff,
                "forward|call|put|straddle|digital|smooth_call (sl also takes exponential)");
    bind_option(app, bindings, flags, "--strike", &RunConfig::strike, "strike");
    bind_option(app, bindings, flags, "--beta", &RunConfig::beta, "smooth_call sharpness");
    bind_option(app, bindings, flags, "--epsilon", &RunConfig::epsilon, "digital ramp width");
    bind_option(app, bindings, flags, "--sigma-h", &RunConfig::sigma_h, "Hamiltonian sigma_H");
    bind_option(app, bindings, flags, "--potential", &RunConfig::potential, "none | linear:<c> | quadratic:<c>");
    bind_option(app, bindings, flags, "--t", &RunConfig::t, "time");
    bind_option(app, bindings, flags, "--rate", &RunConfig::rate, "discount rate");
    bind_option(app, bindings, flags, "--lambda-min", &RunConfig::lambda_min, "transform window start");
    bind_option(app, bindings, flags, "--lambda-max", &RunConfig::lambda_max, "transform window end");
    bind_option(app, bindings, flags, "--n", &RunConfig::n, "sample count (transform, residual, sl)");
    bind_option(app, bindings, flags, "--grid-n", &RunConfig::grid_n, "evolution grid points");
    bind_option(app, bindings, flags, "--x-min", &RunConfig::x_min, "spatial window start");
    bind_option(app, bindings, flags, "--x-max", &RunConfig::x_max, "spatial window end");
    bind_option(app, bindings, flags, "--steps", &RunConfig::steps, "samples along the evolution curve");
    bind_option(app, bindings, flags, "--segment", &RunConfig::segment, "delta segment index for transform/residual");
    bind_option(app, bindings, flags, "--sigma-h-list", &RunConfig::sigma_h_list, "sweep values");
    bind_option(app, bindings, flags, "--out", &RunConfig::out, "output path (directory for figure, prefix for oracle)");
    bind_option(app, bindings, flags, "--format", &RunConfig::format, "csv|json|svg (transform, sweep)");
    {
        auto* opt = app.add_flag("--spectral", flags.spectral, "price: add the spectral drift");
        bindings.push_back({opt, [](RunConfig& d, const RunConfig& s) { d.spectral = s.spectral; }});
    }

    auto* figure = app.add_subcommand("figure", "reproduce figure 1, 2 or 3");
    figure->add_option("id", flags.figure, "figure id")->required();
    app.add_subcommand("price", "zeroth- and first-order price report (JSON)");
    app.add_subcommand("transform", "return distribution of one delta segment");
    app.add_subcommand("oracle", "spectral vs commutator vs finite-difference drift");
    app.add_subcommand("sweep", "drift and width over sigma_H values (CSV)");
    app.add_subcommand("residual", "Laplacian reduction residuals (JSON)");
    app.add_subcommand("sl", "second-order Sturm-Liouville spectrum (JSON)");
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig c;
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) return fail(1, "cannot read config '" + config_path + "'");
            nlohmann::json j;
            try {
                is >> j;
            } catch (const nlohmann::json::exception& e) {
                return fail(2, std::string("config is not valid JSON: ") + e.what());
            }
            qdrift::cli::apply_config_json(c, j);
        }
        for (const auto& b : bindings)
            if (b.option->count() > 0) b.copy(c, flags);
        c.command = app.get_subcommands().front()->get_name();
        if (c.command == "figure") c.figure = flags.figure;

        auto outputs = qdrift::cli::run(c);
        for (const auto& [path, content] : outputs.files) qdrift::io::write_atomic(path, content);
        std::cout << outputs.summary;
        return 0;
    } catch (const qdrift::ValidationError& e) {
        return fail(2, e.what());
    } catch (const qdrift::DomainError& e) {
        return fail(2, e.what());
    } catch (const qdrift::BoundaryMassError& e) {
        return fail(3, std::string(e.what()) + " (try --x-min " + std::to_string(e.suggested_x_min()) +
                           " --x-max " + std::to_string(e.suggested_x_max()) + ")");
    } catch (const qdrift::WidenGridError& e) {
        return fail(3, std::string(e.what()) + " (try --lambda-max " + std::to_string(e.suggested_lambda_max()) + ")");
    } catch (const qdrift::ConvergenceError& e) {
        return fail(3, e.what());
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
}
