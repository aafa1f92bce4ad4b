// Command-line front end. Every subcommand is one experiment; its flags are
// the experiment's configuration keys with '_' spelled '-'.

#include "hnls/config.hpp"
#include "hnls/errors.hpp"
#include "hnls/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <string>

namespace {

constexpr hnls::Experiment kAll[] = {
    hnls::Experiment::ground_state,       hnls::Experiment::evolve,
    hnls::Experiment::concentrate,        hnls::Experiment::profiles,
    hnls::Experiment::verify_functionals, hnls::Experiment::pipeline_theorem11,
    hnls::Experiment::pipeline_lemma22,
};

std::string flag_name(std::string key) {
    for (auto& ch : key)
        if (ch == '_') ch = '-';
    return key;
}

int execute(hnls::RunConfig cfg) {
    try {
        const auto res = hnls::run(std::move(cfg));
        std::fputs(hnls::format_stages(res.stages).c_str(), stdout);
        std::printf("%s: %s\n", res.passed ? "PASSED" : "FAILED", (res.dir / hnls::kManifestName).c_str());
        return res.passed ? 0 : 1;
    } catch (const hnls::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mass-critical NLS with inverse-square potential: experiments and pipelines"};
    app.require_subcommand(1);

    std::map<hnls::Experiment, std::map<std::string, std::string>> values;
    std::map<hnls::Experiment, CLI::App*> subs;
    for (const auto e : kAll) {
        auto* sub = app.add_subcommand(flag_name(hnls::to_string(e)), "run the " + hnls::to_string(e) + " experiment");
        auto& vals = values[e];
        for (const auto& k : hnls::known_keys(e)) {
            if (k.name == "experiment") continue;
            auto* opt = sub->add_option("--" + flag_name(k.name), vals[k.name], k.help);
            if (!k.default_value.empty()) opt->default_str(k.default_value);
            if (k.required) opt->required();
        }
        subs[e] = sub;
    }
    std::string config_path;
    std::map<std::string, std::string> overrides;
    auto* run_sub = app.add_subcommand("run", "run the experiment described by a config file");
    run_sub->add_option("--config", config_path, "key = value configuration file")->required()->check(CLI::ExistingFile);
    std::vector<std::string> sets;
    run_sub->add_option("--set", sets, "override a key, as key=value");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_sub->parsed()) {
            auto cfg = hnls::load_config(config_path);
            for (const auto& s : sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos) throw hnls::Error(hnls::ErrorKind::Format, "--set expects key=value");
                cfg.set(s.substr(0, eq), s.substr(eq + 1));
                if (s.substr(0, eq) == "output_dir") cfg.output_dir = s.substr(eq + 1);
            }
            return execute(std::move(cfg));
        }
        for (const auto e : kAll) {
            if (!subs[e]->parsed()) continue;
            hnls::RunConfig cfg;
            cfg.experiment = e;
            for (const auto& [key, value] : values[e])
                if (subs[e]->count("--" + flag_name(key)) > 0) cfg.set(key, value);
            if (cfg.has("output_dir")) cfg.output_dir = cfg.get_string("output_dir");
            return execute(std::move(cfg));
        }
    } catch (const hnls::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
