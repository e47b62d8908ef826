#include "hierspin/zerotemp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

namespace hierspin {

namespace {

double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    if (flo == 0.0) return lo;
    const double fhi = f(hi);
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw NumericalError("bisection: root not bracketed");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> cell_weights(const GridProfile& p) {
    const auto& x = p.xGrid;
    const std::size_t n = x.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = i == 0 ? -INFINITY : 0.5 * (x[i - 1] + x[i]);
        const double b = i + 1 == n ? INFINITY : 0.5 * (x[i] + x[i + 1]);
        w[i] = p.measure.mass(a, b);
    }
    return w;
}

}  // namespace

GridProfile StaircaseProfile::onGrid(const GridProfile& grid) const {
    GridProfile p = grid;
    for (std::size_t i = 0; i < p.xGrid.size(); ++i) p.values[i] = value(p.xGrid[i]);
    const auto it = std::lower_bound(p.xGrid.begin(), p.xGrid.end(), x0);
    std::size_t best = 0;
    double bestDist = INFINITY;
    for (auto j : {it - p.xGrid.begin() - 1, it - p.xGrid.begin()}) {
        if (j < 0 || j >= static_cast<long>(p.xGrid.size())) continue;
        const double d = std::abs(p.xGrid[j] - x0);
        if (d < bestDist) {
            bestDist = d;
            best = static_cast<std::size_t>(j);
        }
    }
    if (p.xGrid.size() > 1) {
        const double spacing = p.xGrid[1] - p.xGrid[0];
        if (bestDist <= 0.5 * spacing * (1.0 + 1e-9)) p.values[best] = 0.0;
    }
    return p;
}

RegionCheck is_equilibrium(double x0, double X, const GaussianMeasure& measure) {
    const double s = x0 + X;
    const double left = s + 2.0 * measure.mass(x0 - X, INFINITY);
    const double right = 2.0 * measure.mass(-INFINITY, x0 - X) - s;
    return {x0, X, measure, left >= 0.0 && right >= 0.0, {left, right}};
}

double attractor_threshold(const GaussianMeasure& measure, Side side) {
    if (side == Side::right) {
        auto h = [&](double x) { return 2.0 * measure.mass(-INFINITY, x) - x; };
        const double lo = h(0.0) >= 0.0 ? 0.0 : -2.0;
        return bisect(h, lo, 2.0);
    }
    auto h = [&](double x) { return -2.0 * measure.mass(x, INFINITY) - x; };
    const double hi = h(0.0) <= 0.0 ? 0.0 : 2.0;
    return bisect(h, -2.0, hi);
}

double profile_mass(const GridProfile& p) {
    const auto w = cell_weights(p);
    double M = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) M += w[i] * p.values[i];
    return M;
}

double profile_threshold(const GridProfile& p) {
    for (std::size_t i = 0; i < p.values.size(); ++i)
        if (p.values[i] > 0.0) {
            if (i > 0 && p.values[i - 1] == 0.0) return p.xGrid[i - 1];
            return i == 0 ? p.xGrid[0] : 0.5 * (p.xGrid[i - 1] + p.xGrid[i]);
        }
    return p.xGrid.back();
}

std::vector<double> sign_vector_field(const GridProfile& p, double X) {
    const double M = profile_mass(p);
    std::vector<double> r(p.values.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = 2.0 * sign0(p.xGrid[i] + p.values[i] + M + X) - 2.0 * p.values[i];
    return r;
}

SignDynamicsResult sign_dynamics(const GridProfile& profile0, double X, double T, double h, int recordEvery) {
    const auto& x = profile0.xGrid;
    if (x.size() < 2) throw ConfigError("sign_dynamics: grid needs at least two nodes");
    const double s = profile0.measure.sd(), mu = profile0.measure.mean;
    const double lo = std::min(mu - 6.0 * s, -2.0 - std::abs(X)), hi = std::max(mu + 6.0 * s, 2.0 + std::abs(X));
    if (x.front() > lo || x.back() < hi) throw ConfigError("sign_dynamics: grid does not cover the required range");
    if (!(h > 0.0) || !(h <= 0.5)) throw ConfigError("sign_dynamics: step must lie in (0, 0.5]");
    const auto w = cell_weights(profile0);
    GridProfile p = profile0;
    const long steps = std::max(1L, static_cast<long>(std::ceil(T / h - 1e-9)));
    const double dt = T / steps;
    SignDynamicsResult r;
    auto mass = [&]() {
        double M = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) M += w[i] * p.values[i];
        return M;
    };
    std::vector<double> rate(x.size());
    for (long k = 0; k <= steps; ++k) {
        const double M = mass();
        r.t.push_back(dt * k);
        r.M.push_back(M);
        if (recordEvery > 0 && (k % recordEvery == 0 || k == steps)) {
            r.profiles.push_back(p);
            r.profileTimes.push_back(dt * k);
        }
        for (std::size_t i = 0; i < x.size(); ++i) rate[i] = 2.0 * sign0(x[i] + p.values[i] + M + X) - 2.0 * p.values[i];
        if (k == steps) break;
        for (std::size_t i = 0; i < x.size(); ++i) {
            p.values[i] += dt * rate[i];
            if (p.values[i] > 1.0 || p.values[i] < -1.0) throw NumericalError("sign_dynamics left [-1,1]");
        }
    }
    r.final = p;
    r.finalRate = rate;
    return r;
}

const char* regime_name(Regime r) { return r == Regime::graph ? "graph" : "folded"; }

RegionBorders region_borders(double sigma, double alpha2, const std::vector<double>& XGrid) {
    if (!(sigma > 0.0) || !(alpha2 > 0.0)) throw DomainError("region_borders: sigma and alpha2 must be positive");
    const double sd = std::sqrt(sigma * sigma / (2.0 * alpha2));
    RegionBorders rb;
    rb.X = XGrid;
    bool graph = true;
    constexpr int kScan = 2001;
    for (double X : XGrid) {
        auto roots = [&](double shift) {
            // M = 1 - 2 mu_X(-inf, shift - X - M), mu_X = N(X, sd^2)
            auto F = [&](double M) { return M - 1.0 + 2.0 * normal_cdf((shift - X - M - X) / sd); };
            std::vector<double> out;
            double prevM = -1.0, prevF = F(prevM);
            if (prevF == 0.0) out.push_back(prevM);
            for (int i = 1; i < kScan; ++i) {
                const double M = -1.0 + 2.0 * i / (kScan - 1);
                const double f = F(M);
                if (f == 0.0)
                    out.push_back(M);
                else if (prevF != 0.0 && (f > 0.0) != (prevF > 0.0))
                    out.push_back(bisect(F, prevM, M));
                prevM = M;
                prevF = f;
            }
            return out;
        };
        rb.left.push_back(roots(-1.0));
        rb.right.push_back(roots(1.0));
        if (rb.left.back().empty() || rb.right.back().empty()) rb.boundaryOfExistence.push_back(X);
        if (rb.left.back().size() != 1 || rb.right.back().size() != 1) graph = false;
    }
    rb.regime = graph ? Regime::graph : Regime::folded;
    return rb;
}

void write_region_csv(std::ostream& os, const RegionBorders& rb) {
    os << "# schema region/1\n";
    os << "X,M_left,M_right,regime\n";
    os.precision(17);
    for (std::size_t i = 0; i < rb.X.size(); ++i) {
        const std::size_t rows = std::max<std::size_t>(1, std::max(rb.left[i].size(), rb.right[i].size()));
        for (std::size_t r = 0; r < rows; ++r) {
            os << rb.X[i] << ',';
            if (r < rb.left[i].size()) os << rb.left[i][r];
            os << ',';
            if (r < rb.right[i].size()) os << rb.right[i][r];
            os << ',' << regime_name(rb.regime) << '\n';
        }
    }
}

void write_profile_path_csv(std::ostream& os, const SignDynamicsResult& r) {
    os << "# schema profile_path/1\n";
    os << "t,x,m\n";
    os.precision(17);
    for (std::size_t k = 0; k < r.profiles.size(); ++k)
        for (std::size_t i = 0; i < r.profiles[k].xGrid.size(); ++i)
            os << r.profileTimes[k] << ',' << r.profiles[k].xGrid[i] << ',' << r.profiles[k].values[i] << '\n';
}

}  // namespace hierspin
