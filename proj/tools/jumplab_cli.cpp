// jumplab command-line front end; links the C API only.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jumplab/jumplab.h"

namespace {

int run(const std::string& stage, const std::string& config, bool has_seed, uint64_t seed,
        int threads, const std::string& out_dir) {
    jl_experiment* exp = nullptr;
    jl_status s = jl_experiment_open(config.c_str(), &exp);
    if (s != JL_OK) {
        std::fprintf(stderr, "error code=%d kind=%s stage=%s msg=%s\n", int(s), jl_status_name(s),
                     stage.c_str(), jl_last_error());
        return int(s);
    }
    if (has_seed) jl_experiment_set_seed(exp, seed);
    if (threads >= 0) jl_experiment_set_threads(exp, threads);
    if (!out_dir.empty()) jl_experiment_set_output_dir(exp, out_dir.c_str());

    s = jl_experiment_run_stage(exp, stage.c_str());
    if (s != JL_OK)
        std::fprintf(stderr, "error code=%d kind=%s stage=%s msg=%s\n", int(s), jl_status_name(s),
                     stage.c_str(), jl_last_error());
    else
        std::printf("%s: ok\n", stage.c_str());
    jl_experiment_destroy(exp);
    return int(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jumplab: symmetric jump process laboratory"};
    app.set_version_flag("--version", std::string(jl_version()));
    app.require_subcommand(1);

    std::string config, out_dir;
    uint64_t seed = 0;
    int threads = -1;
    app.add_option("--config", config, "experiment config file")->required();
    auto* seed_opt = app.add_option("--seed", seed, "override the master seed");
    app.add_option("--threads", threads, "worker threads (0 = hardware)");
    app.add_option("--out", out_dir, "output directory (must exist)");

    const std::vector<std::string> stages = {"check-kernel", "sample-paths", "density",
                                             "bounds",       "lil",          "report"};
    for (const auto& st : stages) app.add_subcommand(st);

    CLI11_PARSE(app, argc, argv);

    if (threads < 0) {
        if (const char* env = std::getenv("JUMPLAB_THREADS")) threads = std::atoi(env);
    }

    for (const auto& st : stages)
        if (app.got_subcommand(st))
            return run(st, config, seed_opt->count() > 0, seed, threads, out_dir);
    return JL_E_UNKNOWN;
}
