#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "engage/config.hpp"
#include "engage/stages.hpp"

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int workers = 0;
    bool seed_set = false;
    bool workers_set = false;
};

engage::RunConfig resolve(const GlobalOpts& g) {
    engage::Config raw;
    if (!g.config_path.empty())
        raw = engage::Config::from_file(g.config_path);
    engage::RunConfig cfg = engage::run_config_from(raw);
    if (!g.out_dir.empty())
        cfg.out_dir = g.out_dir;
    if (g.seed_set)
        cfg.seed = g.seed;
    if (g.workers_set)
        cfg.workers = g.workers;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"engagement pipeline: cluster, prepare, train, evaluate, optimize,"
                 " simulate, sweep"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "config file (key = value with [sections])");
    app.add_option("--out", g.out_dir, "run directory for artifacts");
    auto* seed_opt = app.add_option("--seed", g.seed, "master seed");
    auto* workers_opt = app.add_option("--workers", g.workers, "worker threads");

    struct Cmd {
        const char* name;
        const char* help;
        void (*fn)(const engage::RunConfig&);
    };
    const Cmd cmds[] = {
        {"simulate", "generate a synthetic interaction log with ground truth",
         engage::run_simulate},
        {"cluster", "cluster a tokenized corpus into topics", engage::run_cluster},
        {"prepare", "turn an interaction log into train/valid/test datasets",
         engage::run_prepare},
        {"train", "train the choice-aware net and the per-topic logit baseline",
         engage::run_train},
        {"evaluate", "report BCE/AUC for the trained models on the test split",
         engage::run_evaluate},
        {"optimize", "pick greedy slates for every test user", engage::run_optimize},
        {"sweep", "grid-search filters, batch size and learning rate", engage::run_sweep},
    };
    for (const auto& c : cmds)
        app.add_subcommand(c.name, c.help);

    CLI11_PARSE(app, argc, argv);
    g.seed_set = seed_opt->count() > 0;
    g.workers_set = workers_opt->count() > 0;

    try {
        engage::RunConfig cfg = resolve(g);
        for (const auto& c : cmds)
            if (app.got_subcommand(c.name))
                c.fn(cfg);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
