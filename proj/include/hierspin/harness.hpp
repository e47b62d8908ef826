// Monte Carlo experiments relating finite-N simulations to the limit objects.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hierspin/limits.hpp"
#include "hierspin/model.hpp"
#include "hierspin/sim.hpp"

namespace hierspin {

struct SweepSpec {
    std::vector<int> Ns;
    int replicas = 1;
    TimescaleSpec timescale;
    std::uint64_t masterSeed = 0;
    std::string statistic;
    void validate() const;
};

struct StatRow {
    int N;
    std::string statistic;
    double estimate;
    double stderror;
    std::int64_t replicas;
};

struct StatTable {
    std::vector<StatRow> rows;
    void add(int N, const std::string& statistic, double estimate, double stderror, std::int64_t replicas);
    // throws std::out_of_range when absent
    const StatRow& at(int N, const std::string& statistic) const;
};

// CSV `N,statistic,estimate,stderr,replicas`
void write_stat_csv(std::ostream& os, const StatTable& table);

struct Summary {
    double mean = 0.0;
    double stderror = 0.0;  // sample std / sqrt(n)
    std::int64_t n = 0;
};
Summary summarize(const std::vector<double>& v);

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);
// asymptotic Kolmogorov tail probability with the Stephens small-sample correction
double ks_pvalue(double d, double effectiveN);
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// seed of an independent family of replica streams
std::uint64_t derive_seed(std::uint64_t masterSeed, std::uint64_t a, std::uint64_t b = 0);

// body(i) for i in [0, n) on worker threads; callers write only to slot i
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body, int threads = 0);

// E[sup |y|^k] with y the distance of the tagged level-1 block from its curve argument
StatTable contraction_stat(const ModelParams& params, const SweepSpec& sweep, double k);

// E[sup_t |m_0^N(t) - m~_0(t)|] against the coupled limit at order 1 (exponent 0) or order N (exponent 1)
StatTable chaos_error(const ModelParams& params, const SweepSpec& sweep, int timescaleExponent);

// sup over [0, T] (order-1 time) of |M^N(t) - Curie-Weiss ODE(sum beta, M^N(0))|, event resolved
Summary curie_weiss_error(const ModelParams& params, double T, int replicas, std::uint64_t masterSeed,
                          std::vector<double>* perReplica = nullptr);

struct CovarianceOptions {
    int replicas = 10000;
    std::uint64_t masterSeed = 0;
};
// estimates of A(t), B(t), A_N(s,t), B_N(s,t) with theory values in statistic names suffixed _theory and _z
StatTable covariance_check(double sigma, double alpha2, int N, const std::vector<double>& sGrid,
                           const std::vector<double>& tGrid, const CovarianceOptions& opt = {});
double covariance_A(double sigma, double alpha2, double t);
double covariance_B(double sigma, double alpha2, double t);
double covariance_AN(double sigma, double alpha2, int N, double s, double t);
double covariance_BN(double sigma, double alpha2, int N, double s, double t);

struct ConditionalLawOptions {
    double windowConst = 1.0;
    int targetSelected = 200;
    std::int64_t maxAttempts = 1000000;
    double burnIn = 20.0;  // microscopic relaxation window before t
    std::uint64_t masterSeed = 0;
};

struct ConditionalLawResult {
    int N = 0;
    double X = 0.0;
    double t = 0.0;
    double epsilon = 0.0;
    std::int64_t attempts = 0;
    std::int64_t selected = 0;
    bool insufficient = false;
    double meanM = 0.0;
    double stderrM = 0.0;
    double oracle = 0.0;
    double meanAbsDeviation = 0.0;
    double correlation = 0.0;
    double correlationZ = 0.0;
    std::int64_t pairs = 0;
};
ConditionalLawResult conditional_law_test(const ModelParams& params, int N, double t, double X,
                                          double windowFraction = 0.25, const ConditionalLawOptions& opt = {});

struct HittingTimeResult {
    double ks = 0.0;
    double ksCritical = 0.0;  // 1% level
    double pHit = 0.0;        // empirical P(T <= horizon)
    double pHitStderr = 0.0;
    double pTheory = 0.0;
    std::vector<double> hits;
};
HittingTimeResult hitting_time_test(double sigma, int N, double level, double x0, int replicas,
                                    double horizon = 1.0, std::uint64_t masterSeed = 0, double dt = 1e-4);

enum class GeneratorTest { constant, topMagnetization, blockFieldSquare };

struct GeneratorResult {
    double empirical = 0.0;
    double analytic = 0.0;
    double stderror = 0.0;
    double z = 0.0;
    double diffusionFiniteDifference = 0.0;  // diffusion term by central differences
};
GeneratorResult generator_consistency(const ModelParams& params, const SystemState& state, GeneratorTest f,
                                      double dt, int replicas, std::uint64_t masterSeed = 0);

struct JumpTestOptions {
    double dwellFraction = 0.01;  // of the inter-jump scale (2 |x_a|)^2 / sigma^2
    int samplesPerDwell = 20;
    std::uint64_t masterSeed = 0;
};

struct JumpStats {
    double mA = 0.0;
    double mB = 0.0;
    double foldX = 0.0;
    double dwell = 0.0;
    std::int64_t jumps = 0;
    std::vector<double> jumpTimes;
    std::vector<int> directions;  // -1 downward, +1 upward
    std::vector<double> departures;        // m when the field average first reaches the fold
    std::vector<double> departuresWindow;  // mean m over the dwell window before leaving the branch
    std::vector<double> arrivals;
    std::vector<double> interJumpTimes;
    double maxDepartureError = 0.0;
    double maxArrivalError = 0.0;
    bool arrivalsOpposite = true;
    double ks = 0.0;
    double ksPValue = 1.0;
    std::uint64_t candidates = 0;
};
// accelerated mean-field paths started on the upper branch; T in accelerated units
JumpStats supercritical_jump_test(double beta, double sigma, int N, double T, int replicas,
                                  const JumpTestOptions& opt = {});

struct OrderNLawResult {
    double ks = 0.0;
    std::vector<double> finite;
    std::vector<double> limit;
};
// replica law of m_0^N(T) (order-N time) against limit SDE samples
OrderNLawResult orderN_law_test(const ModelParams& params, double T, int replicas, std::uint64_t masterSeed,
                                int limitPaths, double limitDt = 1e-3);

}  // namespace hierspin
