// Finite-N simulation of the coupled spin and field system by uniformization.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hierspin/fields.hpp"
#include "hierspin/model.hpp"
#include "hierspin/rng.hpp"

namespace hierspin {

// Stream tags used for a replica
enum StreamTag : std::uint32_t {
    kTagInitSpins = 0,
    kTagInitFields = 1,
    kTagEvents = 2,
    kTagFields = 3,
    kTagEuler = 4,
    kTagHarness = 16,
};

struct TimescaleSpec {
    int exponent = 0;  // macroscopic t is microscopic N^exponent * t
    double horizon = 1.0;
    std::vector<double> outputGrid;

    double factor(int N) const;
    void validate() const;
    static TimescaleSpec uniform(int exponent, double horizon, int points);
};

struct ObservablePath {
    std::vector<double> times;
    std::vector<BlockObservables> observables;
    std::vector<double> snapshotTimes;
    std::vector<SystemState> snapshots;
};

struct Candidate {
    double time;  // microscopic
    std::int64_t site;
    int spin;     // spin before the candidate is resolved
    double fieldArg;
    double tanhArg;  // tanh(fieldArg), 0 at zero temperature
    bool accepted;
};

class EventObserver {
public:
    virtual ~EventObserver() = default;
    virtual void onCandidate(const Candidate& c) = 0;
};

class Engine {
public:
    Engine(const ModelParams& params, const SystemState& state0, const SeedSpec& seed);

    double time() const { return t_; }
    const ModelParams& params() const { return params_; }
    // advance to microscopic time tEnd; the state at tEnd is right-continuous
    void runUntil(double tEnd, EventObserver* observer = nullptr);

    std::int64_t spinSum(int d, std::int64_t block) const { return sums_[d - 1][block]; }
    double magnetization(int d, std::int64_t block) const {
        return static_cast<double>(sums_[d - 1][block]) / vol_[d - 1];
    }
    double topMagnetization() const { return magnetization(params_.k(), 0); }
    // field block averages at the current time for the blocks containing the site
    void levelAverages(std::int64_t site, double* out) { fields_.levelAverages(site, t_, out); }
    double topField() { return fields_.top(t_); }
    double fieldArgument(std::int64_t site);

    BlockObservables observables();
    SystemState snapshot();
    const std::vector<std::int8_t>& spins() const { return spins_; }
    FieldProcess& fields() { return fields_; }

    std::uint64_t candidates() const { return candidates_; }
    std::uint64_t accepted() const { return accepted_; }

private:
    ModelParams params_;
    std::vector<std::int8_t> spins_;
    std::vector<std::vector<std::int64_t>> sums_;
    std::vector<double> vol_;
    std::vector<double> weight_;
    FieldProcess fields_;
    Stream rng_;
    double t_;
    std::uint64_t candidates_ = 0;
    std::uint64_t accepted_ = 0;
    std::vector<double> xbuf_;
};

SystemState sample_initial_state(const ModelParams& params, const SeedSpec& seed);

ObservablePath simulate_system(const ModelParams& params, const SystemState& state0, const TimescaleSpec& ts,
                               const SeedSpec& seed, const std::vector<double>& snapshotTimes = {});

// CSV `t,level,block_index,m,x`
void write_path_csv(std::ostream& os, const ObservablePath& path);
// CSV `site,spin,x`
void write_snapshot_csv(std::ostream& os, const SystemState& state);

}  // namespace hierspin
