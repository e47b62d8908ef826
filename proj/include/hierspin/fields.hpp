// Exact propagation of the linear Gaussian field subsystem.
//
// Block averages are split into level components c_e = x^(e) - x^(e+1). Inside each
// parent block the N child components form a centered Ornstein-Uhlenbeck vector, which
// is expanded in an unbalanced Haar basis whose coefficients are independent scalar OU
// processes. Coefficients are advanced lazily with the exact transition kernel, so a
// query touches O(k log N) scalars.
#pragma once

#include <cstdint>
#include <vector>

#include "hierspin/model.hpp"
#include "hierspin/rng.hpp"

namespace hierspin {

class FieldProcess {
public:
    FieldProcess(const ModelParams& params, const std::vector<double>& fields0, double t0, Stream rng);

    double time() const { return tNow_; }
    // top-level average X at time t >= every previous query time
    double top(double t);
    // out[d-1] = x^(d) of the level-d block containing the site, d = 1..k
    void levelAverages(std::int64_t site, double t, double* out);
    double siteField(std::int64_t site, double t);
    std::vector<double> siteFields(double t);
    // averages for every block of every level d = 1..k
    std::vector<std::vector<double>> blockAverages(double t);
    // condition the top average on the value xPin at time tPin (Brownian bridge until then)
    void pinTop(double tPin, double xPin);

    // decay rate and noise variance of the level-e components
    double kappa(int e) const { return kappa_[e]; }
    double noiseVar(int e) const { return noise2_[e]; }

private:
    struct TreeNode {
        int lo, mid, hi;
        int left, right;  // -1 when the side is a single child
        double wL, wR;    // basis entries on the left and right child ranges
    };
    struct Coef {
        double value;
        double time;
    };

    double advance(Coef& c, int e, double t);
    double component(int e, std::int64_t block, double t);
    void checkTime(double t);

    HierarchyShape shape_;
    int k_;
    int N_;
    std::vector<TreeNode> tree_;
    std::vector<double> kappa_;
    std::vector<double> noise2_;
    double topNoise2_;
    std::vector<std::vector<Coef>> coef_;  // per level e, (parent * (N-1) + node)
    Coef top_;
    bool pinned_ = false;
    double pinT_ = 0.0;
    double pinX_ = 0.0;
    double tNow_;
    Stream rng_;
};

// Exact field samples at sorted query times; result[q][site].
std::vector<std::vector<double>> simulate_diffusions_exact(const ModelParams& params,
                                                           const std::vector<double>& fields0,
                                                           const std::vector<double>& queryTimes,
                                                           const SeedSpec& seed);

// Euler-Maruyama reference integration of the full site system with step dt.
std::vector<std::vector<double>> simulate_diffusions_euler(const ModelParams& params,
                                                           const std::vector<double>& fields0,
                                                           const std::vector<double>& queryTimes,
                                                           const SeedSpec& seed, double dt);

}  // namespace hierspin
