// hypermp command-line tool: train / ablate-adjacency / expand / inspect.

#include <CLI11.hpp>

#include "hypermp/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hypergraph message passing toolkit"};
    app.require_subcommand(1);

    hypermp::cli::Options opt;
    std::uint64_t seed_flag = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config_path, "experiment config file");
        cmd->add_option("--data-dir", opt.data_dir, "directory holding cora.content / cora.cites");
        cmd->add_option("--out-dir", opt.out_dir, "artifact directory (default runs/<timestamp>)");
        cmd->add_option("--seed", seed_flag, "override train.seed")->each([&](const std::string&) {
            opt.seed = seed_flag;
        });
        cmd->add_option("--jobs", opt.jobs, "parallel runs for sweeps")->check(CLI::PositiveNumber);
    };

    CLI::App* train = app.add_subcommand("train", "train one model and report test accuracy");
    add_common(train);

    CLI::App* ablate =
        app.add_subcommand("ablate-adjacency", "sweep adjacency-dropout rates in two settings");
    add_common(ablate);
    ablate->add_option("--rates", opt.ablate_rates, "adjacency dropout rates to sweep");
    ablate->add_option("--seeds", opt.ablate_seeds, "seeds per cell")->check(CLI::PositiveNumber);

    std::string input_path, output_path, kind;
    CLI::App* expand = app.add_subcommand("expand", "convert a hypergraph to a graph edge list");
    expand->add_option("input", input_path, "hypergraph text file or corpus directory")->required();
    expand->add_option("--kind", kind, "clique | star | line")->required();
    expand->add_option("--output", output_path, "edge list destination ('-' = stdout)");

    CLI::App* inspect = app.add_subcommand("inspect", "report hypergraph structure statistics");
    inspect->add_option("input", input_path, "hypergraph text file or corpus directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return hypermp::cli::cmd_train(opt);
        if (ablate->parsed()) return hypermp::cli::cmd_ablate_adjacency(opt);
        if (expand->parsed()) return hypermp::cli::cmd_expand(input_path, kind, output_path);
        if (inspect->parsed()) return hypermp::cli::cmd_inspect(input_path);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
