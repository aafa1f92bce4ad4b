#pragma once

// Run configuration: a flat text file of `key = value` lines.
//
//   # comment
//   experiment = pipeline_theorem11
//   output_dir = runs/t11
//   d = 3
//   c = 0.1
//
// Blank lines and `#` comments are ignored; keys may appear once. Every
// experiment has a fixed set of accepted keys with defaults (see
// `known_keys`); unknown keys are rejected so typos cannot go unnoticed.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hnls {

enum class Experiment {
    ground_state,
    evolve,
    concentrate,
    profiles,
    verify_functionals,
    pipeline_theorem11,
    pipeline_lemma22,
};

std::string to_string(Experiment e);
Experiment experiment_from_string(std::string_view name);

struct KeySpec {
    std::string name;
    std::string default_value;
    std::string help;
    bool required = false;
};

/// Keys accepted by an experiment, in documentation order.
std::vector<KeySpec> known_keys(Experiment e);

class RunConfig {
public:
    Experiment experiment = Experiment::ground_state;
    std::filesystem::path output_dir;
    std::uint64_t rng_seed = 0;

    /// Raw values; defaults are filled in by `validate`.
    std::map<std::string, std::string> parameters;

    bool has(const std::string& key) const { return parameters.count(key) != 0; }
    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_list(const std::string& key) const; // comma separated

    void set(const std::string& key, std::string value) { parameters[key] = std::move(value); }

    /// Fills defaults, rejects unknown or missing keys and checks ranges
    /// (d >= 3, 0 < c < (d-2)^2/4, ...). Throws before any computation.
    void validate();

    /// Canonical `key = value` text with keys sorted; parse(text()) round-trips.
    std::string text() const;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

} // namespace hnls
