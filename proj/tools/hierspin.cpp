#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hierspin/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hierspin: hierarchical spin-field dynamics experiments"};
    std::string kind;
    std::string configPath;
    std::uint64_t seed = 0;
    std::string outDir;
    std::string budget = "desk";
    app.add_option("kind", kind, "simulate | limits | zerotemp | converge | accept")->required();
    app.add_option("--config", configPath, "JSON config file");
    auto* seedOpt = app.add_option("--seed", seed, "master seed override");
    app.add_option("--out", outDir, "output directory (default $HIERSPIN_OUT or ./out)");
    app.add_option("--budget", budget, "desk | full")->check(CLI::IsMember({"desk", "full"}));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (outDir.empty()) {
        const char* env = std::getenv("HIERSPIN_OUT");
        outDir = env && *env ? env : "out";
    }

    try {
        nlohmann::json doc = nlohmann::json::object();
        if (!configPath.empty()) {
            std::ifstream in(configPath);
            if (!in) throw std::runtime_error("cannot read config " + configPath);
            std::stringstream ss;
            ss << in.rdbuf();
            try {
                doc = nlohmann::json::parse(ss.str());
            } catch (const nlohmann::json::parse_error& e) {
                throw hierspin::ConfigError(std::string("config: invalid JSON: ") + e.what());
            }
        }
        if (!doc.is_object()) throw hierspin::ConfigError("config: top level must be an object");
        if (doc.contains("kind") && doc["kind"] != kind)
            throw hierspin::ConfigError("kind: config says " + doc["kind"].dump() + " but command is " + kind);
        doc["kind"] = kind;
        if (seedOpt->count()) doc["masterSeed"] = seed;

        const hierspin::ExperimentConfig cfg = hierspin::parse_config(doc);
        const auto outcome = hierspin::run_experiment(
            cfg, outDir, budget == "full" ? hierspin::Budget::full : hierspin::Budget::desk, std::cout);
        for (const auto& f : outcome.files) std::cerr << "wrote " << f << '\n';
        return outcome.exitCode;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
