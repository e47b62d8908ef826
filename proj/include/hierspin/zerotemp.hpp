// Zero-temperature geometry: staircase equilibria, fixed-points region, attractors, borders, sign dynamics.
#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hierspin/limits.hpp"

namespace hierspin {

struct StaircaseProfile {
    double x0 = 0.0;
    double value(double x) const { return x > x0 ? 1.0 : (x < x0 ? -1.0 : 0.0); }
    // grid profile with the node nearest to x0 set to 0 when it falls within half a spacing
    GridProfile onGrid(const GridProfile& grid) const;
};

struct RegionCheck {
    double x0;
    double X;
    GaussianMeasure measure;
    bool isEquilibrium;
    std::pair<double, double> slack;  // (left, right)
};

enum class Side { left, right };

RegionCheck is_equilibrium(double x0, double X, const GaussianMeasure& measure);
double attractor_threshold(const GaussianMeasure& measure, Side side);

struct SignDynamicsResult {
    std::vector<double> t;
    std::vector<double> M;
    std::vector<GridProfile> profiles;
    std::vector<double> profileTimes;
    GridProfile final;
    std::vector<double> finalRate;  // dm/dt at the final state, per grid node
};
// explicit Euler with step h; M by cell masses of the profile measure
SignDynamicsResult sign_dynamics(const GridProfile& profile0, double X, double T, double h = 1e-3, int recordEvery = 0);
// dm/dt for every node of a profile
std::vector<double> sign_vector_field(const GridProfile& p, double X);
double profile_mass(const GridProfile& p);
// threshold of a monotone profile: first node where the value becomes positive
double profile_threshold(const GridProfile& p);

enum class Regime { graph, folded };
const char* regime_name(Regime r);

struct RegionBorders {
    std::vector<double> X;
    std::vector<std::vector<double>> left;   // all roots per X
    std::vector<std::vector<double>> right;
    Regime regime;
    std::vector<double> boundaryOfExistence;  // X values where a border has no root
};
RegionBorders region_borders(double sigma, double alpha2, const std::vector<double>& XGrid);

// CSV `X,M_left,M_right,regime`
void write_region_csv(std::ostream& os, const RegionBorders& rb);
// CSV `t,x,m`
void write_profile_path_csv(std::ostream& os, const SignDynamicsResult& r);

}  // namespace hierspin
