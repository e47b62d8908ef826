// Experiment configuration and orchestration.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hierspin/model.hpp"

namespace hierspin {

enum class Budget { desk, full };

struct ExperimentConfig {
    std::string kind;  // simulate | limits | zerotemp | converge | accept
    std::string op;
    nlohmann::json values;             // every key with defaults filled
    std::vector<std::string> defaulted;  // keys filled from defaults

    std::uint64_t masterSeed() const;
    ModelParams modelParams() const;
    std::string canonical() const;  // sorted compact dump of values
    bool operator==(const ExperimentConfig& o) const { return canonical() == o.canonical(); }
};

// throws ConfigError with the offending key path
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config(const nlohmann::json& doc);
inline ExperimentConfig parse_config(const char* text) { return parse_config(std::string(text)); }

// FNV-1a of the canonical serialization, 16 hex digits
std::string config_hash(const ExperimentConfig& cfg);

struct RunOutcome {
    int exitCode = 0;  // 0 success, 2 acceptance failure
    std::vector<std::string> files;
};

RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& outDir, Budget budget, std::ostream& log);

}  // namespace hierspin
