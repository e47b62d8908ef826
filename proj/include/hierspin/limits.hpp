// Limit objects: invariant curves, critical geometry, ODE and SDE limits, fixed-point laws.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hierspin/model.hpp"
#include "hierspin/rng.hpp"

namespace hierspin {

enum class Branch { upper, lower, middle };
const char* branch_name(Branch b);

struct NoSuchBranch : DomainError {
    using DomainError::DomainError;
};

struct GaussianMeasure {
    double mean = 0.0;
    double variance = 1.0;
    double sd() const;
    // mass of (a, b)
    double mass(double a, double b) const;
    double cdf(double x) const;
};

struct GridProfile {
    std::vector<double> xGrid;
    std::vector<double> values;
    GaussianMeasure measure;

    static GridProfile uniform(const GaussianMeasure& mu, double lo, double hi, int nodes, double value = 0.0);
    double interpolate(double x) const;
};

struct CriticalData {
    double beta = 0.0;
    double lambdaA = 0.0;
    double mA = 0.0;
    double mB = 0.0;
    double foldX() const { return lambdaA - mA; }
};

struct JumpTarget {
    double mB;
    double log1pMB;   // log(1 + m_b), accurate when m_b rounds to -1
    double residual;  // |g| at the root, evaluated in log coordinates
};

// Gauss-Hermite rule for the standard normal, weights summing to one
struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const HermiteRule& hermite_rule(int order);
// E f(X) for X ~ mu with a fixed rule
double gauss_expect(const GaussianMeasure& mu, const std::function<double(double)>& f, int order = 64);
// doubles the order from 16 until two successive values agree to tol (at most 256)
double gauss_expect_adaptive(const GaussianMeasure& mu, const std::function<double(double)>& f, double tol = 1e-12);

double invariant_curve(double beta1, double x, double offset = 0.0, Branch branch = Branch::upper);
bool branch_exists(double beta1, double x, double offset, Branch branch);

struct CriticalPoints {
    double lambdaA;
    double mA;
};
CriticalPoints critical_points(double beta);
double jump_function_g(double beta, double y);
JumpTarget jump_target_detail(double beta);
double jump_target(double beta);
CriticalData critical_data(double beta);

struct OdePath {
    std::vector<double> t;
    std::vector<double> lambda;
    std::vector<double> m;
    double at(double time) const;  // m(time), linear interpolation
};
OdePath meanfield_ode(double beta, double lambda0, double m0, double T, double h = 1e-3);
OdePath curie_weiss_ode(double beta, double m0, double T, double h = 1e-3);

struct ProfilePath {
    std::vector<double> t;
    std::vector<double> M;
    std::vector<GridProfile> profiles;  // at t[0], t[recordEvery], ...
    std::vector<double> profileTimes;
    std::vector<double> l2Distance;     // filled when a second initial profile is given
};
ProfilePath order1_profile_ode(double beta1, double beta2, const GaussianMeasure& measure, double Xbar,
                               const GridProfile& profile0, double T, double h = 1e-3, int recordEvery = 100,
                               const GridProfile* companion0 = nullptr, int quadOrder = 64);

struct EquilibriumProfile {
    GridProfile profile;
    double M;
    int iterations;
};
EquilibriumProfile equilibrium_profile(double beta1, double beta2, const GaussianMeasure& measure, double Xbar,
                                       bool allowDamped = false, int gridNodes = 513);

enum class SdeRegime { subcritical, supercritical };
enum class ArrivalConvention { gRoot, literalIncrement };

struct LimitPath {
    std::vector<double> t;
    std::vector<double> m;
    std::vector<double> x;
    std::vector<Branch> branch;
    std::vector<int> jump;  // sign of the jump increment, 0 when no jump
    std::vector<double> jumpTimes;
    std::vector<double> departures;
    std::vector<double> arrivals;
};

struct LimitSdeOptions {
    double dt = 1e-4;
    ArrivalConvention arrival = ArrivalConvention::gRoot;
    std::uint32_t tag = 32;
};

LimitPath limit_sde_meanfield(double beta, double sigma, double m0, double T, const SeedSpec& seed,
                              SdeRegime regime, const LimitSdeOptions& opt = {});
// subcritical SDE integrated directly in m by Euler-Maruyama with the given increments
std::vector<double> meanfield_sde_euler(double beta, double sigma, double m0, const std::vector<double>& dW, double dt);
double meanfield_sde_drift(double beta, double sigma, double m);
double meanfield_sde_diffusion(double beta, double sigma, double m);

struct HierLimitPaths {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> mCurve;  // curve-mapped Ornstein-Uhlenbeck path
    std::vector<double> mEuler;  // Euler-Maruyama on the explicit SDE, same increments
};
HierLimitPaths limit_sde_hier_orderN(double beta1, double sigma, double alpha2, double T, const SeedSpec& seed,
                                     double dt = 1e-3, double x0 = 0.0, std::uint32_t tag = 33);
double hier_sde_drift(double beta1, double sigma, double alpha2, double m);
double hier_sde_diffusion(double beta1, double sigma, double m);

enum class LawMode { conditional, unconditional };
double orderN2_law(double beta1, double beta2, double sigma, double alpha2, double X, double t, LawMode mode);
// fixed point of M against the mixture measure N(0, sigma^2 (1 + 2 alpha2 t) / (2 alpha2)) with Xbar = 0
double orderN2_mixture_fixed_point(double beta1, double beta2, double sigma, double alpha2, double t);

using AveragingFunction = std::function<double(double xi, double xiBar, double U, double M)>;
double averaging_fixed_point(const AveragingFunction& f, const std::vector<double>& samples, double xiBar, double U);
double averaging_fixed_point(const AveragingFunction& f, const GaussianMeasure& measure, double U);

struct RenormResult {
    double value;
    std::vector<double> ledger;  // L_0 .. L_d
};
std::vector<double> renormalization_ledger(const std::vector<double>& beta, int d);
GaussianMeasure renormalization_measure(const ModelParams& params, int d, double t);
RenormResult renormalization_map(int d, const ModelParams& params, double x, double y, double t, int quadOrder = 24);

double hitting_time_cdf(double x0, double level, double sigma, double t);
double hitting_time_density(double x0, double level, double sigma, double t);

double normal_cdf(double z);

// CSV `x,m,branch`
void write_curve_csv(std::ostream& os, double beta1, double offset, const std::vector<double>& xs);
// CSV `t,m,x,branch,jump_flag`
void write_limit_path_csv(std::ostream& os, const LimitPath& path);

}  // namespace hierspin
