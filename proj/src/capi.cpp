#include "jumplab/jumplab.h"

#include <cstring>
#include <string>

#include "config.hpp"
#include "kernel.hpp"
#include "runner.hpp"
#include "sampler.hpp"

using namespace jumplab;

struct jl_kernel {
    JumpKernel k;
};

struct jl_experiment {
    RunContext ctx;
};

namespace {

thread_local std::string t_last_error;

jl_status set_error(const JlError& e) {
    t_last_error = e.what();
    return jl_status(int(e.code()));
}

jl_status set_error(const std::exception& e) {
    t_last_error = e.what();
    return JL_E_UNKNOWN;
}

template <class Fn>
jl_status guarded(Fn&& fn) {
    try {
        fn();
        t_last_error.clear();
        return JL_OK;
    } catch (const JlError& e) {
        return set_error(e);
    } catch (const std::exception& e) {
        return set_error(e);
    } catch (...) {
        t_last_error = "unknown failure";
        return JL_E_UNKNOWN;
    }
}

jl_status require_arg(bool ok, const char* msg) {
    if (ok) return JL_OK;
    t_last_error = msg;
    return JL_E_DOMAIN;
}

}  // namespace

extern "C" {

const char* jl_version(void) { return kVersion; }

const char* jl_status_name(jl_status s) {
    switch (s) {
        case JL_OK: return "ok";
        case JL_E_UNKNOWN: return "unknown";
        case JL_E_PARSE: return "parse";
        case JL_E_CONFIG: return "config";
        case JL_E_MISSING_INPUT: return "missing_input";
        case JL_E_DOMAIN: return "domain";
        case JL_E_NUMERIC: return "numeric";
        case JL_E_IO: return "io";
        case JL_E_CHECK_FAILED: return "check_failed";
    }
    return "?";
}

const char* jl_last_error(void) { return t_last_error.c_str(); }

jl_status jl_kernel_create(const char* config_text, jl_kernel** out) {
    if (jl_status s = require_arg(config_text && out, "null argument")) return s;
    return guarded([&] {
        Config c = Config::parse_text(config_text);
        auto* h = new jl_kernel{kernel_from_config(c)};
        *out = h;
    });
}

jl_status jl_kernel_create_from_file(const char* path, jl_kernel** out) {
    if (jl_status s = require_arg(path && out, "null argument")) return s;
    return guarded([&] {
        Config c = Config::parse_file(path);
        auto* h = new jl_kernel{kernel_from_config(c)};
        *out = h;
    });
}

void jl_kernel_destroy(jl_kernel* k) { delete k; }

jl_status jl_kernel_eval_j(const jl_kernel* k, double r, double* out) {
    if (jl_status s = require_arg(k && out, "null argument")) return s;
    return guarded([&] { *out = eval_j(k->k, r); });
}

jl_status jl_kernel_capital_phi(const jl_kernel* k, double s, double* out, int* divergent) {
    if (jl_status st = require_arg(k && out, "null argument")) return st;
    return guarded([&] {
        PhiValue pv = capital_phi(k->k.profile, s);
        *out = pv.value;
        if (divergent) *divergent = pv.divergent ? 1 : 0;
    });
}

jl_status jl_kernel_second_moment(const jl_kernel* k, double* out) {
    if (jl_status s = require_arg(k && out, "null argument")) return s;
    return guarded([&] { *out = second_moment(k->k); });
}

jl_status jl_kernel_tail_mass(const jl_kernel* k, double K, double* out) {
    if (jl_status s = require_arg(k && out, "null argument")) return s;
    return guarded([&] { *out = tail_mass(k->k, K); });
}

jl_status jl_kernel_levy_rates(const jl_kernel* k, double delta, double rates[3]) {
    if (jl_status s = require_arg(k && rates, "null argument")) return s;
    return guarded([&] {
        LevyRates r = levy_rates(k->k, delta);
        rates[0] = r.lambda_small;
        rates[1] = r.sigma2_small;
        rates[2] = r.lambda_big;
    });
}

jl_status jl_kernel_sample_big_jump_radius(const jl_kernel* k, double u, double* out) {
    if (jl_status s = require_arg(k && out, "null argument")) return s;
    return guarded([&] { *out = sample_big_jump_radius(k->k, u); });
}

jl_status jl_kernel_check_report_json(const jl_kernel* k, double grid_min, double grid_max,
                                      int grid_points, double gamma, char** out_json) {
    if (jl_status s = require_arg(k && out_json, "null argument")) return s;
    return guarded([&] {
        require(grid_points >= 8 && grid_max > grid_min && grid_min >= 1.0, Err::domain,
                "bad assumption-A audit grid");
        std::vector<double> grid;
        for (int i = 0; i < grid_points; ++i)
            grid.push_back(grid_min *
                           std::pow(grid_max / grid_min, double(i) / double(grid_points - 1)));
        KernelReport rep = check_assumption_A(k->k, grid, gamma);
        const std::string json = rep.to_json(k->k.hash());
        char* buf = new char[json.size() + 1];
        std::memcpy(buf, json.c_str(), json.size() + 1);
        *out_json = buf;
    });
}

void jl_string_free(char* s) { delete[] s; }

jl_status jl_experiment_open(const char* config_path, jl_experiment** out) {
    if (jl_status s = require_arg(config_path && out, "null argument")) return s;
    return guarded([&] { *out = new jl_experiment{RunContext::open_file(config_path)}; });
}

jl_status jl_experiment_open_text(const char* config_text, jl_experiment** out) {
    if (jl_status s = require_arg(config_text && out, "null argument")) return s;
    return guarded([&] { *out = new jl_experiment{RunContext::open_text(config_text)}; });
}

void jl_experiment_destroy(jl_experiment* e) { delete e; }

jl_status jl_experiment_set_seed(jl_experiment* e, uint64_t seed) {
    if (jl_status s = require_arg(e != nullptr, "null experiment")) return s;
    return guarded([&] { e->ctx.override_seed(seed); });
}

jl_status jl_experiment_set_threads(jl_experiment* e, int threads) {
    if (jl_status s = require_arg(e != nullptr, "null experiment")) return s;
    return guarded([&] { e->ctx.override_threads(threads); });
}

jl_status jl_experiment_set_output_dir(jl_experiment* e, const char* dir) {
    if (jl_status s = require_arg(e && dir, "null argument")) return s;
    return guarded([&] { e->ctx.override_out_dir(dir); });
}

jl_status jl_experiment_digest(const jl_experiment* e, char out[17]) {
    if (jl_status s = require_arg(e && out, "null argument")) return s;
    return guarded([&] {
        const std::string hex = digest_hex(e->ctx.digest);
        std::memcpy(out, hex.c_str(), 17);
    });
}

jl_status jl_experiment_run_stage(jl_experiment* e, const char* stage) {
    if (jl_status s = require_arg(e && stage, "null argument")) return s;
    const Err r = run_stage(e->ctx, stage);
    if (r != Err::ok) {
        t_last_error = e->ctx.last_error;
        return jl_status(int(r));
    }
    t_last_error.clear();
    return JL_OK;
}

}  // extern "C"
