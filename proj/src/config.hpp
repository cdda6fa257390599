#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "common.hpp"
#include "kernel.hpp"
#include "sampler.hpp"

namespace jumplab {

// Flat "key = value" configuration; '#' starts a comment, keys are sectioned
// with dots (kernel.alpha, sampler.n_paths, ...). No nesting by design.
class Config {
public:
    static Config parse_text(const std::string& text);
    static Config parse_file(const std::string& path);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& dflt) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double dflt) const;
    std::int64_t get_int(const std::string& key, std::int64_t dflt) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;
    std::vector<double> get_list(const std::string& key) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& dflt) const;

    // Digest over the canonical sorted key=value text; scheduling knobs
    // (threads, output.dir) are excluded so they cannot change results.
    std::uint64_t digest() const;
    std::string canonical_text() const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

JumpKernel kernel_from_config(const Config& c);
SamplerConfig sampler_from_config(const Config& c);

std::string digest_hex(std::uint64_t digest);

}  // namespace jumplab
