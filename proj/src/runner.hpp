#pragma once

#include <cstdint>
#include <string>

#include "config.hpp"

namespace jumplab {

inline constexpr const char* kVersion = "1.0.0";

// One loaded experiment: parsed config plus run overrides. Stages write their
// outputs (CSV/JSON/SVG, all embedding the config digest) under out_dir.
struct RunContext {
    Config cfg;
    std::string out_dir = ".";
    int threads = 0;  // 0 = hardware default
    std::uint64_t digest = 0;
    std::string last_error;

    static RunContext open_file(const std::string& config_path);
    static RunContext open_text(const std::string& config_text);

    void override_seed(std::uint64_t seed);
    void override_threads(int t);
    void override_out_dir(const std::string& dir);
    std::string path(const std::string& file) const;
};

// stage in {check-kernel, sample-paths, density, bounds, lil, report}.
// Returns Err::ok when the stage ran and its executed checks passed; on any
// other outcome last_error carries a one-line machine-readable reason.
Err run_stage(RunContext& ctx, const std::string& stage);

}  // namespace jumplab
