// Parameters, hierarchical indexing, system state, flip rates and block observables.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hierspin {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HierarchyShape {
    int levels = 1;
    int blockSize = 1;

    std::int64_t totalSites() const;
    // number of blocks at level d (d = 0 are sites, d = levels is the whole system)
    std::int64_t blocksAt(int d) const;
    std::int64_t blockVolume(int d) const;  // N^d
    std::int64_t blockOf(std::int64_t site, int d) const { return site / blockVolume(d); }
    std::vector<int> tuple(std::int64_t site) const;  // (i_1, ..., i_k), 1-based
    std::int64_t flatten(const std::vector<int>& tuple) const;
    // smallest d with equal indices above level d, as in the hierarchical distance
    int distance(std::int64_t a, std::int64_t b) const;
    void validate() const;
};

struct ModelParams {
    HierarchyShape shape;
    std::vector<double> beta;   // beta_1..beta_k; ignored when zeroTemperature
    std::vector<double> alpha;  // alpha_1..alpha_k
    double sigma = 1.0;
    bool zeroTemperature = false;
    double spinUpProb = 0.5;
    double fieldInitMean = 0.0;
    double fieldInitStd = 1.0;

    int k() const { return shape.levels; }
    int N() const { return shape.blockSize; }
    double betaSum() const;
    bool subcritical() const { return !zeroTemperature && betaSum() < 1.0; }
    void validate() const;

    static ModelParams meanField(int N, double beta, double sigma, double alpha = 1.0);
    static ModelParams hierarchical(int N, std::vector<double> beta, std::vector<double> alpha, double sigma);
};

struct SystemState {
    double time = 0.0;
    std::vector<std::int8_t> spins;
    std::vector<double> fields;
};

// level d entries, d = 1..k, stored at index d-1
struct BlockObservables {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> x;
    std::vector<std::vector<std::int64_t>> spinSums;

    double magnetization(int d, std::int64_t block) const { return m[d - 1][block]; }
    double fieldAverage(int d, std::int64_t block) const { return x[d - 1][block]; }
    double topM() const { return m.back().front(); }
    double topX() const { return x.back().front(); }
};

BlockObservables block_observables(const SystemState& state, const HierarchyShape& shape);

double local_flip_argument(const SystemState& state, const ModelParams& params, std::int64_t site);
double local_flip_argument(const BlockObservables& obs, const ModelParams& params, std::int64_t site);

double flip_rate(int spin, double fieldArg, const ModelParams& params);
double flip_rate(int spin, double fieldArg, bool zeroTemperature);

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace hierspin
