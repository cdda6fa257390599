#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace jumplab {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        require(pos == v.size(), Err::parse, "trailing characters in numeric value for " + key);
        return x;
    } catch (const JlError&) {
        throw;
    } catch (...) {
        fail(Err::parse, "cannot parse numeric value '" + v + "' for " + key);
    }
}

}  // namespace

std::string digest_hex(std::uint64_t digest) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

Config Config::parse_text(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        require(eq != std::string::npos, Err::parse,
                "line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        require(!key.empty(), Err::parse, "line " + std::to_string(lineno) + ": empty key");
        c.kv_[key] = value;
    }
    return c;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    require(bool(in), Err::io, "cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

std::string Config::get_string(const std::string& key) const {
    auto it = kv_.find(key);
    require(it != kv_.end(), Err::config, "missing required config key " + key);
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
}

double Config::get_double(const std::string& key) const {
    return parse_double(key, get_string(key));
}

double Config::get_double(const std::string& key, double dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : parse_double(key, it->second);
}

std::int64_t Config::get_int(const std::string& key, std::int64_t dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    const double v = parse_double(key, it->second);
    require(v == std::int64_t(v), Err::parse, "expected integer for " + key);
    return std::int64_t(v);
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    std::uint64_t out = 0;
    const std::string& v = it->second;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    require(res.ec == std::errc() && res.ptr == v.data() + v.size(), Err::parse,
            "expected unsigned integer for " + key);
    return out;
}

bool Config::get_bool(const std::string& key, bool dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(Err::parse, "expected boolean for " + key);
}

std::vector<double> Config::get_list(const std::string& key) const {
    const std::string v = get_string(key);
    std::vector<double> out;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) continue;
        out.push_back(parse_double(key, t));
    }
    require(!out.empty(), Err::parse, "empty list for " + key);
    return out;
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& dflt) const {
    return has(key) ? get_list(key) : dflt;
}

std::string Config::canonical_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) {
        if (k == "threads" || k == "output.dir") continue;
        os << k << "=" << v << "\n";
    }
    return os.str();
}

std::uint64_t Config::digest() const { return fnv1a(canonical_text()); }

JumpKernel kernel_from_config(const Config& c) {
    JumpKernel k;
    k.d = int(c.get_int("kernel.dimension", 1));
    k.alpha = c.get_double("kernel.alpha", 0.5);
    k.kappa = c.get_double("kernel.kappa", 1.0);
    k.c_tail = c.get_double("kernel.c_tail", 1.0);
    const std::string fam = c.get_string("kernel.profile.family", "power_law");
    auto f = family_from_name(fam);
    require(f.has_value(), Err::parse, "unknown profile family '" + fam + "'");
    k.profile.family = *f;
    k.profile.param = c.get_double("kernel.profile.param", 1.0);
    k.profile.param2 = c.get_double("kernel.profile.param2", 0.5);
    k.profile.r_max = c.get_double("kernel.profile.truncation_radius", 0.0);
    if (c.has("kernel.modulation.lo") || c.has("kernel.modulation.hi")) {
        k.modulation.enabled = true;
        k.modulation.lo = c.get_double("kernel.modulation.lo", 1.0);
        k.modulation.hi = c.get_double("kernel.modulation.hi", 1.0);
    }
    k.validate();
    return k;
}

SamplerConfig sampler_from_config(const Config& c) {
    SamplerConfig s;
    s.delta = c.get_double("sampler.delta", 0.1);
    s.t_grid = c.get_list("sampler.t_grid", {});
    s.n_paths = c.get_uint("sampler.n_paths", 1000);
    s.master_seed = c.get_uint("seed", 1);
    s.modulation_enabled = c.get_bool("sampler.modulation_enabled", false);
    s.inverse_cdf_resolution = int(c.get_int("sampler.inverse_cdf_resolution", 4096));
    s.validate();
    return s;
}

}  // namespace jumplab
