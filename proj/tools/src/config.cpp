#include "shapebo/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace shapebo {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

[[noreturn]] void fail(const std::string& key, const YAML::Node& n, const std::string& msg) {
    const int line = line_of(n);
    throw ConfigError(key, line, "config key '" + key + "'" + (line > 0 ? " (line " + std::to_string(line) + ")" : "") +
                                     ": " + msg);
}

template <class T>
T scalar(const std::string& key, const YAML::Node& n, const char* what) {
    if (!n.IsScalar()) fail(key, n, std::string("expected ") + what);
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        fail(key, n, std::string("expected ") + what + ", got '" + n.Scalar() + "'");
    }
}

std::size_t count(const std::string& key, const YAML::Node& n, long long min) {
    const auto v = scalar<long long>(key, n, "an integer");
    if (v < min) fail(key, n, "must be at least " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

const std::set<std::string> kKnownKeys{"objective", "box",       "constraints", "seeds",      "init_count",
                                       "iterations", "mc_samples", "chain_len",   "burn_in",    "grid_size",
                                       "refit_every", "max_tries", "noise_sd",    "n_sims",     "output_dir"};

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    std::vector<std::uint64_t> out;
    auto number = [&](std::string_view s) {
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
            throw std::invalid_argument("bad seed '" + std::string(s) + "'");
        }
        return v;
    };
    while (!text.empty()) {
        const auto comma = text.find(',');
        std::string_view item = text.substr(0, comma);
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        const auto dash = item.find('-');
        if (dash == std::string_view::npos) {
            out.push_back(number(item));
            continue;
        }
        const std::uint64_t lo = number(item.substr(0, dash));
        const std::uint64_t hi = number(item.substr(dash + 1));
        if (hi < lo || hi - lo >= 1'000'000) {
            throw std::invalid_argument("bad seed range '" + std::string(item) + "'");
        }
        for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    }
    if (out.empty()) {
        throw std::invalid_argument("empty seed list");
    }
    return out;
}

void ExperimentConfig::validate() const {
    try {
        lookup_objective(objective);
    } catch (const ArgumentError& e) {
        throw ConfigError("objective", 0, std::string("config key 'objective': ") + e.what());
    }
    if (box.dim() == 0) throw ConfigError("box", 0, "config key 'box': no dimensions");
    for (Index i = 0; i < box.dim(); ++i) {
        if (!(box.lower(i) < box.upper(i))) {
            throw ConfigError("box", 0, "config key 'box': lower bound must be below upper bound in dimension " +
                                            std::to_string(i));
        }
    }
    if (lookup_objective(objective).box.dim() != box.dim()) {
        throw ConfigError("box", 0, "config key 'box': objective '" + objective + "' takes " +
                                        std::to_string(lookup_objective(objective).box.dim()) + " dimensions");
    }
    if (lookup_objective(objective).integer_domain) {
        for (Index i = 0; i < box.dim(); ++i) {
            if (std::ceil(box.lower(i)) > std::floor(box.upper(i))) {
                throw ConfigError("box", 0, "config key 'box': integer objective needs an integer in dimension " +
                                                std::to_string(i));
            }
        }
    }
    if (static_cast<Index>(constraints.size()) != box.dim()) {
        throw ConfigError("constraints", 0,
                          "config key 'constraints': expected " + std::to_string(box.dim()) + " entries, got " +
                              std::to_string(constraints.size()));
    }
    if (seeds.empty()) throw ConfigError("seeds", 0, "config key 'seeds': empty seed list");
    if (init_count < 2) throw ConfigError("init_count", 0, "config key 'init_count': must be at least 2");
    if (iterations < 1) throw ConfigError("iterations", 0, "config key 'iterations': must be at least 1");
    if (burn_in >= chain_len) throw ConfigError("burn_in", 0, "config key 'burn_in': must be below chain_len");
    if (grid_size < 1) throw ConfigError("grid_size", 0, "config key 'grid_size': must be at least 1");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
        throw ConfigError("noise_sd", 0, "config key 'noise_sd': must be a finite nonnegative number");
    }
}

ExperimentConfig parse_config_string(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", e.mark.line + 1, "malformed config (line " + std::to_string(e.mark.line + 1) +
                                                   "): " + e.msg);
    }
    if (!root.IsMap()) throw ConfigError("", line_of(root), "config must be a mapping of keys to values");

    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (!kKnownKeys.count(key)) fail(key, kv.first, "unknown key");
    }
    for (const char* key : {"objective", "box", "constraints", "seeds"}) {
        if (!root[key]) throw ConfigError(key, 0, std::string("config key '") + key + "': required");
    }

    ExperimentConfig cfg;
    cfg.objective = scalar<std::string>("objective", root["objective"], "a name");
    try {
        lookup_objective(cfg.objective);
    } catch (const ArgumentError&) {
        fail("objective", root["objective"], "unknown objective '" + cfg.objective + "'");
    }

    const YAML::Node box = root["box"];
    if (!box.IsSequence() || box.size() == 0) fail("box", box, "expected a list of [lower, upper] pairs");
    const auto d = static_cast<Index>(box.size());
    cfg.box.lower.resize(d);
    cfg.box.upper.resize(d);
    for (Index i = 0; i < d; ++i) {
        const YAML::Node pair = box[static_cast<std::size_t>(i)];
        if (!pair.IsSequence() || pair.size() != 2) fail("box", pair, "expected a [lower, upper] pair");
        cfg.box.lower(i) = scalar<double>("box", pair[0], "a number");
        cfg.box.upper(i) = scalar<double>("box", pair[1], "a number");
        if (!(cfg.box.lower(i) < cfg.box.upper(i))) fail("box", pair, "lower bound must be below upper bound");
    }

    const YAML::Node cons = root["constraints"];
    if (!cons.IsSequence()) fail("constraints", cons, "expected a list of shape names");
    for (const auto& c : cons) {
        const auto name = scalar<std::string>("constraints", c, "a shape name");
        const auto shape = parse_shape(name);
        if (!shape) fail("constraints", c, "unknown shape '" + name + "'");
        cfg.constraints.push_back(*shape);
    }
    if (static_cast<Index>(cfg.constraints.size()) != d) {
        fail("constraints", cons, "expected " + std::to_string(d) + " entries (one per box dimension), got " +
                                      std::to_string(cfg.constraints.size()));
    }

    const YAML::Node seeds = root["seeds"];
    if (seeds.IsSequence()) {
        for (const auto& s : seeds) cfg.seeds.push_back(static_cast<std::uint64_t>(count("seeds", s, 0)));
    } else if (seeds.IsScalar()) {
        try {
            cfg.seeds = parse_seed_list(seeds.Scalar());
        } catch (const std::invalid_argument& e) {
            fail("seeds", seeds, e.what());
        }
    } else {
        fail("seeds", seeds, "expected a list of integers or a range string");
    }
    if (cfg.seeds.empty()) fail("seeds", seeds, "empty seed list");

    if (root["init_count"]) cfg.init_count = count("init_count", root["init_count"], 2);
    if (root["iterations"]) cfg.iterations = count("iterations", root["iterations"], 1);
    if (root["mc_samples"]) cfg.mc_samples = count("mc_samples", root["mc_samples"], 1);
    if (root["chain_len"]) cfg.chain_len = count("chain_len", root["chain_len"], 2);
    if (root["burn_in"]) cfg.burn_in = count("burn_in", root["burn_in"], 0);
    if (root["grid_size"]) cfg.grid_size = static_cast<Index>(count("grid_size", root["grid_size"], 1));
    if (root["refit_every"]) cfg.refit_every = count("refit_every", root["refit_every"], 1);
    if (root["max_tries"]) cfg.max_tries = count("max_tries", root["max_tries"], 1);
    if (root["n_sims"]) cfg.n_sims = count("n_sims", root["n_sims"], 1);
    if (root["noise_sd"]) {
        cfg.noise_sd = scalar<double>("noise_sd", root["noise_sd"], "a number");
        if (!(cfg.noise_sd >= 0.0) || !std::isfinite(cfg.noise_sd)) fail("noise_sd", root["noise_sd"], "must be >= 0");
    }
    if (root["output_dir"]) cfg.output_dir = scalar<std::string>("output_dir", root["output_dir"], "a path");
    if (cfg.burn_in >= cfg.chain_len) fail("burn_in", root["burn_in"] ? root["burn_in"] : root, "must be below chain_len");

    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_string(text.str());
}

}  // namespace shapebo
