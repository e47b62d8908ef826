#include "hierspin/limits.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>

#include <boost/math/tools/roots.hpp>
#include <gsl/gsl_integration.h>

namespace hierspin {

namespace {

// root of a function with f(lo) and f(hi) of opposite sign (or zero), Newton steps kept inside the bracket
template <class F, class D>
double safe_newton(F f, D df, double lo, double hi, double tol = 1e-15, int maxIter = 300) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw NumericalError("root not bracketed");
    if (flo > 0.0) {
        std::swap(lo, hi);
        std::swap(flo, fhi);
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < maxIter; ++it) {
        const double fx = f(x);
        if (fx == 0.0) return x;
        if (fx < 0.0)
            lo = x;
        else
            hi = x;
        const double d = df(x);
        double nx = d != 0.0 ? x - fx / d : 0.5 * (lo + hi);
        if (!(nx > std::min(lo, hi) && nx < std::max(lo, hi))) nx = 0.5 * (lo + hi);
        if (std::abs(nx - x) <= tol * std::max(1.0, std::abs(x)) || std::abs(hi - lo) <= tol) return nx;
        x = nx;
    }
    return x;
}

double toms748(const std::function<double(double)>& f, double lo, double hi) {
    const double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw NumericalError("root not bracketed");
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
}

double curve_residual(double b, double x, double off, double m) { return m - std::tanh(b * (x + m) + off); }

}  // namespace

const char* branch_name(Branch b) {
    switch (b) {
        case Branch::upper: return "upper";
        case Branch::lower: return "lower";
        case Branch::middle: return "middle";
    }
    return "?";
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double GaussianMeasure::sd() const { return std::sqrt(variance); }

double GaussianMeasure::cdf(double x) const {
    if (variance <= 0.0) return x < mean ? 0.0 : 1.0;
    if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
    return normal_cdf((x - mean) / sd());
}

double GaussianMeasure::mass(double a, double b) const {
    if (variance <= 0.0) return (a < mean && mean < b) ? 1.0 : 0.0;
    const double s = sd();
    const double za = (a - mean) / s, zb = (b - mean) / s;
    // upper tail form keeps precision on the right
    if (za > 0.0) return 0.5 * (std::erfc(za / std::sqrt(2.0)) - std::erfc(zb / std::sqrt(2.0)));
    return cdf(b) - cdf(a);
}

GridProfile GridProfile::uniform(const GaussianMeasure& mu, double lo, double hi, int nodes, double value) {
    GridProfile p;
    p.measure = mu;
    p.xGrid.resize(nodes);
    for (int i = 0; i < nodes; ++i) p.xGrid[i] = lo + (hi - lo) * i / (nodes - 1);
    p.values.assign(nodes, value);
    return p;
}

double GridProfile::interpolate(double x) const {
    if (x <= xGrid.front()) return values.front();
    if (x >= xGrid.back()) return values.back();
    const auto it = std::upper_bound(xGrid.begin(), xGrid.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xGrid.begin());
    const double w = (x - xGrid[i - 1]) / (xGrid[i] - xGrid[i - 1]);
    return (1.0 - w) * values[i - 1] + w * values[i];
}

const HermiteRule& hermite_rule(int order) {
    static std::mutex mu;
    static std::map<int, HermiteRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;
    gsl_integration_fixed_workspace* w =
        gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, order, 0.0, 0.5, 0.0, 0.0);
    if (!w) throw NumericalError("cannot build Gauss-Hermite rule");
    HermiteRule r;
    const double* xs = gsl_integration_fixed_nodes(w);
    const double* ws = gsl_integration_fixed_weights(w);
    double total = 0.0;
    for (int i = 0; i < order; ++i) total += ws[i];
    for (int i = 0; i < order; ++i) {
        r.nodes.push_back(xs[i]);
        r.weights.push_back(ws[i] / total);
    }
    gsl_integration_fixed_free(w);
    return cache.emplace(order, std::move(r)).first->second;
}

double gauss_expect(const GaussianMeasure& mu, const std::function<double(double)>& f, int order) {
    if (mu.variance <= 0.0) return f(mu.mean);
    const HermiteRule& r = hermite_rule(order);
    const double s = mu.sd();
    double acc = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * f(mu.mean + s * r.nodes[i]);
    return acc;
}

double gauss_expect_adaptive(const GaussianMeasure& mu, const std::function<double(double)>& f, double tol) {
    double prev = gauss_expect(mu, f, 16);
    for (int order = 32; order <= 256; order *= 2) {
        const double cur = gauss_expect(mu, f, order);
        if (std::abs(cur - prev) <= tol) return cur;
        prev = cur;
    }
    return prev;
}

bool branch_exists(double b, double x, double off, Branch branch) {
    if (b <= 1.0) return true;
    const double ma = std::sqrt(1.0 - 1.0 / b);
    const double hLo = curve_residual(b, x, off, -ma), hHi = curve_residual(b, x, off, ma);
    switch (branch) {
        case Branch::upper: return hHi <= 1e-14;
        case Branch::lower: return hLo >= -1e-14;
        case Branch::middle: return hLo >= -1e-14 && hHi <= 1e-14;
    }
    return false;
}

double invariant_curve(double b, double x, double off, Branch branch) {
    if (!(b >= 0.0) || !std::isfinite(x) || !std::isfinite(off)) throw DomainError("invariant_curve: invalid arguments");
    auto h = [&](double m) { return curve_residual(b, x, off, m); };
    auto dh = [&](double m) {
        const double t = std::tanh(b * (x + m) + off);
        return 1.0 - b * (1.0 - t * t);
    };
    double m;
    if (b <= 1.0) {
        m = std::tanh(b * x + off);
        bool done = false;
        if (b < 1.0) {
            for (int it = 0; it < 60; ++it) {
                const double nm = std::tanh(b * (x + m) + off);
                const bool small = std::abs(nm - m) <= 1e-16;
                m = nm;
                if (small) {
                    done = true;
                    break;
                }
            }
        }
        if (!done || std::abs(h(m)) > 1e-13) m = safe_newton(h, dh, -1.0, 1.0);
    } else {
        const double ma = std::sqrt(1.0 - 1.0 / b);
        const double hLo = h(-ma), hHi = h(ma);
        double lo, hi;
        switch (branch) {
            case Branch::upper:
                if (std::abs(hHi) <= 1e-14) return ma;
                if (hHi > 0.0) throw NoSuchBranch("upper branch does not exist at this x");
                lo = ma;
                hi = 1.0;
                break;
            case Branch::lower:
                if (std::abs(hLo) <= 1e-14) return -ma;
                if (hLo < 0.0) throw NoSuchBranch("lower branch does not exist at this x");
                lo = -1.0;
                hi = -ma;
                break;
            default:
                if (std::abs(hLo) <= 1e-14) return -ma;
                if (std::abs(hHi) <= 1e-14) return ma;
                if (hLo < 0.0 || hHi > 0.0) throw NoSuchBranch("middle branch does not exist at this x");
                lo = -ma;
                hi = ma;
                break;
        }
        m = safe_newton(h, dh, lo, hi);
    }
    if (std::abs(h(m)) > 1e-12) throw NumericalError("invariant_curve: residual above tolerance");
    return m;
}

CriticalPoints critical_points(double beta) {
    if (!(beta > 1.0)) throw DomainError("critical points exist only for beta > 1");
    const double ma = std::sqrt(1.0 - 1.0 / beta);
    return {std::atanh(ma) / beta, ma};
}

double jump_function_g(double beta, double y) {
    const CriticalPoints c = critical_points(beta);
    return 2.0 * beta * y - 2.0 * beta * (c.mA - c.lambdaA) - std::log1p(y) + std::log1p(-y);
}

JumpTarget jump_target_detail(double beta) {
    const CriticalPoints c = critical_points(beta);
    const double shift = 2.0 * beta * (c.mA - c.lambdaA);
    // g in the coordinate L = log(1 + y)
    auto G = [&](double L) {
        const double y = std::expm1(L);
        return 2.0 * beta * y - shift - L + std::log1p(-y);
    };
    const double hi = std::log1p(-c.mA);
    double lo = -(2.0 * beta + shift + 1.0);
    if (!(G(hi) < 0.0)) throw NumericalError("jump_target: g does not change sign on the bracket");
    while (!(G(lo) > 0.0)) {
        lo *= 2.0;
        if (lo < -1e6) throw NumericalError("jump_target: bracket failure");
    }
    const double L = toms748(G, lo, hi);
    return {std::expm1(L), L, std::abs(G(L))};
}

double jump_target(double beta) {
    const JumpTarget j = jump_target_detail(beta);
    if (j.residual > 1e-10) throw NumericalError("jump_target: residual above tolerance");
    return j.mB;
}

CriticalData critical_data(double beta) {
    const CriticalPoints c = critical_points(beta);
    return {beta, c.lambdaA, c.mA, jump_target(beta)};
}

double OdePath::at(double time) const {
    if (time <= t.front()) return m.front();
    if (time >= t.back()) return m.back();
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    const std::size_t i = static_cast<std::size_t>(it - t.begin());
    const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
    return (1.0 - w) * m[i - 1] + w * m[i];
}

OdePath meanfield_ode(double beta, double lambda0, double m0, double T, double h) {
    if (!(m0 >= -1.0 && m0 <= 1.0)) throw DomainError("meanfield_ode: m0 must lie in [-1,1]");
    if (!(T >= 0.0) || !(h > 0.0)) throw DomainError("meanfield_ode: invalid horizon or step");
    const double c = lambda0 - m0;
    auto f = [&](double m) { return 2.0 * std::tanh(beta * (m + c)) - 2.0 * m; };
    const long n = std::max(1L, static_cast<long>(std::ceil(T / h - 1e-9)));
    const double dt = T / n;
    OdePath p;
    p.t.reserve(n + 1);
    double m = m0;
    for (long i = 0; i <= n; ++i) {
        p.t.push_back(dt * i);
        p.m.push_back(m);
        p.lambda.push_back(m + c);
        if (i == n) break;
        const double k1 = f(m), k2 = f(m + 0.5 * dt * k1), k3 = f(m + 0.5 * dt * k2), k4 = f(m + dt * k3);
        m += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return p;
}

OdePath curie_weiss_ode(double beta, double m0, double T, double h) { return meanfield_ode(beta, m0, m0, T, h); }

ProfilePath order1_profile_ode(double beta1, double beta2, const GaussianMeasure& measure, double Xbar,
                               const GridProfile& profile0, double T, double h, int recordEvery,
                               const GridProfile* companion0, int quadOrder) {
    if (profile0.xGrid.size() < 2) throw ConfigError("profile grid needs at least two nodes");
    const double outside = measure.cdf(profile0.xGrid.front()) + (1.0 - measure.cdf(profile0.xGrid.back()));
    if (outside > 1e-6) throw ConfigError("profile grid too narrow for the measure");
    const HermiteRule& rule = hermite_rule(quadOrder);
    const std::size_t ng = profile0.xGrid.size(), nq = rule.nodes.size();
    std::vector<double> xs(profile0.xGrid);
    for (double z : rule.nodes) xs.push_back(measure.mean + measure.sd() * z);
    const std::size_t n = xs.size();

    auto lift = [&](const GridProfile& p) {
        std::vector<double> v(p.values);
        for (std::size_t q = 0; q < nq; ++q) v.push_back(p.interpolate(xs[ng + q]));
        return v;
    };
    auto meanOf = [&](const std::vector<double>& v) {
        double M = 0.0;
        for (std::size_t q = 0; q < nq; ++q) M += rule.weights[q] * v[ng + q];
        return M;
    };
    auto field = [&](const std::vector<double>& v, std::vector<double>& out) {
        const double off = beta2 * (Xbar + meanOf(v));
        for (std::size_t i = 0; i < n; ++i) out[i] = 2.0 * std::tanh(beta1 * (xs[i] + v[i]) + off) - 2.0 * v[i];
    };
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    auto rk4 = [&](std::vector<double>& v, double dt) {
        field(v, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = v[i] + 0.5 * dt * k1[i];
        field(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = v[i] + 0.5 * dt * k2[i];
        field(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = v[i] + dt * k3[i];
        field(tmp, k4);
        for (std::size_t i = 0; i < n; ++i) v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    };

    std::vector<double> v = lift(profile0), w;
    if (companion0) w = lift(*companion0);
    auto l2 = [&]() {
        double s = 0.0;
        for (std::size_t q = 0; q < nq; ++q) s += rule.weights[q] * (v[ng + q] - w[ng + q]) * (v[ng + q] - w[ng + q]);
        return std::sqrt(s);
    };
    const long steps = std::max(1L, static_cast<long>(std::ceil(T / h - 1e-9)));
    const double dt = T / steps;
    ProfilePath out;
    auto record = [&](long i) {
        out.t.push_back(dt * i);
        out.M.push_back(meanOf(v));
        if (companion0) out.l2Distance.push_back(l2());
        if (recordEvery > 0 && (i % recordEvery == 0 || i == steps)) {
            GridProfile g = profile0;
            g.measure = measure;
            std::copy(v.begin(), v.begin() + ng, g.values.begin());
            out.profiles.push_back(std::move(g));
            out.profileTimes.push_back(dt * i);
        }
    };
    record(0);
    for (long i = 1; i <= steps; ++i) {
        rk4(v, dt);
        if (companion0) {
            std::swap(v, w);
            rk4(v, dt);
            std::swap(v, w);
        }
        record(i);
    }
    return out;
}

namespace {

double fixed_point_M(double beta1, double beta2, const GaussianMeasure& mu, double Xbar, int order, bool damped,
                     int* iterations) {
    double M = 0.0;
    const double damp = damped ? 0.5 : 1.0;
    for (int it = 1; it <= 10000; ++it) {
        const double off = beta2 * (Xbar + M);
        const double next = gauss_expect(mu, [&](double x) { return invariant_curve(beta1, x, off); }, order);
        const double nm = (1.0 - damp) * M + damp * next;
        const bool done = std::abs(nm - M) <= 1e-13;
        M = nm;
        if (done) {
            if (iterations) *iterations = it;
            return M;
        }
    }
    throw NumericalError("fixed point iteration did not converge");
}

double adaptive_fixed_point_M(double beta1, double beta2, const GaussianMeasure& mu, double Xbar, bool damped,
                              double tol, int* iterations) {
    double prev = fixed_point_M(beta1, beta2, mu, Xbar, 16, damped, iterations);
    for (int order = 32; order <= 256; order *= 2) {
        const double cur = fixed_point_M(beta1, beta2, mu, Xbar, order, damped, iterations);
        if (std::abs(cur - prev) <= tol) return cur;
        prev = cur;
    }
    return prev;
}

}  // namespace

EquilibriumProfile equilibrium_profile(double beta1, double beta2, const GaussianMeasure& measure, double Xbar,
                                       bool allowDamped, int gridNodes) {
    if (!(beta1 < 1.0) || !(beta2 / (1.0 - beta1) < 1.0)) {
        if (!allowDamped || !(beta1 < 1.0)) throw DomainError("equilibrium_profile: beta2/(1-beta1) < 1 required");
    }
    EquilibriumProfile r;
    r.M = adaptive_fixed_point_M(beta1, beta2, measure, Xbar, allowDamped, 1e-12, &r.iterations);
    const double s = measure.sd();
    r.profile = GridProfile::uniform(measure, measure.mean - 6.0 * s, measure.mean + 6.0 * s, gridNodes);
    const double off = beta2 * (Xbar + r.M);
    for (std::size_t i = 0; i < r.profile.xGrid.size(); ++i)
        r.profile.values[i] = invariant_curve(beta1, r.profile.xGrid[i], off);
    return r;
}

namespace {

double mf_coef_den(double beta, double m) { return 1.0 - beta * (1.0 - m * m); }

std::vector<double> brownian_increments(std::size_t n, double dt, Stream& rng) {
    std::vector<double> dW(n);
    const double s = std::sqrt(dt);
    for (auto& v : dW) v = s * rng.normal();
    return dW;
}

}  // namespace

double meanfield_sde_drift(double beta, double sigma, double m) {
    const double d = mf_coef_den(beta, m);
    return -beta * beta * sigma * sigma * m * (1.0 - m * m) / (d * d * d);
}

double meanfield_sde_diffusion(double beta, double sigma, double m) {
    return sigma * beta * (1.0 - m * m) / mf_coef_den(beta, m);
}

std::vector<double> meanfield_sde_euler(double beta, double sigma, double m0, const std::vector<double>& dW, double dt) {
    std::vector<double> m{m0};
    m.reserve(dW.size() + 1);
    double v = m0;
    for (double w : dW) {
        v += meanfield_sde_drift(beta, sigma, v) * dt + meanfield_sde_diffusion(beta, sigma, v) * w;
        m.push_back(v);
    }
    return m;
}

LimitPath limit_sde_meanfield(double beta, double sigma, double m0, double T, const SeedSpec& seed, SdeRegime regime,
                              const LimitSdeOptions& opt) {
    if (!(std::abs(m0) < 1.0)) throw DomainError("limit_sde_meanfield: |m0| < 1 required");
    if (!(sigma >= 0.0) || !(T >= 0.0) || !(opt.dt > 0.0)) throw DomainError("limit_sde_meanfield: invalid arguments");
    Stream rng(seed, opt.tag);
    const long n = std::max(1L, static_cast<long>(std::llround(T / opt.dt)));
    const double dt = T / n;
    const double sq = sigma * std::sqrt(dt);
    LimitPath p;
    double x = std::atanh(m0) / beta - m0;
    if (regime == SdeRegime::subcritical) {
        if (!(beta < 1.0)) throw DomainError("subcritical limit requires beta < 1");
        for (long i = 0; i <= n; ++i) {
            if (i > 0) x += sq * rng.normal();
            p.t.push_back(dt * i);
            p.x.push_back(x);
            p.m.push_back(invariant_curve(beta, x));
            p.branch.push_back(Branch::upper);
            p.jump.push_back(0);
        }
        return p;
    }
    if (!(beta > 1.0)) throw DomainError("supercritical limit requires beta > 1");
    const CriticalData cd = critical_data(beta);
    if (!(std::abs(m0) > cd.mA)) throw DomainError("supercritical limit requires |m0| > m_a");
    const double xa = cd.foldX();  // negative
    Branch br = m0 > 0.0 ? Branch::upper : Branch::lower;
    double m = m0;
    for (long i = 0; i <= n; ++i) {
        int jumped = 0;
        if (i > 0) {
            const double xPrev = x;
            x += sq * rng.normal();
            // crossing of the fold abscissa, including excursions between grid points (Brownian bridge)
            const double level = br == Branch::upper ? xa : -xa;
            const bool beyond = br == Branch::upper ? x <= level : x >= level;
            bool crossed = beyond;
            if (!crossed && sigma > 0.0) {
                const double pr = std::exp(-2.0 * (xPrev - level) * (x - level) / (sigma * sigma * dt));
                crossed = rng.uniform() < pr;
            }
            if (crossed) {
                const double dep = br == Branch::upper ? cd.mA : -cd.mA;
                double arr;
                if (opt.arrival == ArrivalConvention::gRoot) {
                    arr = br == Branch::upper ? cd.mB : -cd.mB;
                    br = br == Branch::upper ? Branch::lower : Branch::upper;
                } else {
                    arr = br == Branch::upper ? dep - (cd.mB + cd.mA) : dep + (cd.mB + cd.mA);
                    x = std::atanh(arr) / beta - arr;
                }
                jumped = arr > dep ? 1 : -1;
                p.jumpTimes.push_back(dt * i);
                p.departures.push_back(dep);
                p.arrivals.push_back(arr);
            }
        }
        if (i > 0) m = invariant_curve(beta, x, 0.0, br);
        p.t.push_back(dt * i);
        p.x.push_back(x);
        p.m.push_back(m);
        p.branch.push_back(br);
        p.jump.push_back(jumped);
    }
    return p;
}

double hier_sde_drift(double beta1, double sigma, double alpha2, double m) {
    const double d = mf_coef_den(beta1, m);
    return -alpha2 * beta1 * (1.0 - m * m) * (std::atanh(m) / beta1 - m) / d + meanfield_sde_drift(beta1, sigma, m);
}

double hier_sde_diffusion(double beta1, double sigma, double m) { return meanfield_sde_diffusion(beta1, sigma, m); }

HierLimitPaths limit_sde_hier_orderN(double beta1, double sigma, double alpha2, double T, const SeedSpec& seed,
                                     double dt, double x0, std::uint32_t tag) {
    if (!(beta1 < 1.0)) throw DomainError("order-N hierarchical limit requires beta1 < 1");
    if (!(dt > 0.0) || !(T >= 0.0)) throw DomainError("limit_sde_hier_orderN: invalid step or horizon");
    Stream rng(seed, tag);
    const long n = std::max(1L, static_cast<long>(std::llround(T / dt)));
    const double h = T / n;
    const std::vector<double> dW = brownian_increments(static_cast<std::size_t>(n), h, rng);
    const double e = std::exp(-alpha2 * h);
    const double var = alpha2 > 0.0 ? sigma * sigma * (-std::expm1(-2.0 * alpha2 * h)) / (2.0 * alpha2) : sigma * sigma * h;
    const double scale = std::sqrt(var / h);
    HierLimitPaths p;
    double x = x0;
    double mE = invariant_curve(beta1, x0);
    for (long i = 0; i <= n; ++i) {
        if (i > 0) {
            x = e * x + scale * dW[i - 1];
            mE += hier_sde_drift(beta1, sigma, alpha2, mE) * h + hier_sde_diffusion(beta1, sigma, mE) * dW[i - 1];
        }
        p.t.push_back(h * i);
        p.x.push_back(x);
        p.mCurve.push_back(invariant_curve(beta1, x));
        p.mEuler.push_back(mE);
    }
    return p;
}

double orderN2_law(double beta1, double beta2, double sigma, double alpha2, double X, double t, LawMode mode) {
    if (!(beta1 + beta2 < 1.0)) throw DomainError("orderN2_law requires beta1 + beta2 < 1");
    if (!(alpha2 > 0.0)) throw DomainError("orderN2_law requires alpha2 > 0");
    const double v = sigma * sigma / (2.0 * alpha2);
    auto cond = [&](double Xc) { return adaptive_fixed_point_M(beta1, beta2, {Xc, v}, Xc, false, 1e-10, nullptr); };
    if (mode == LawMode::conditional) return cond(X);
    if (!(t >= 0.0)) throw DomainError("orderN2_law requires t >= 0");
    return gauss_expect_adaptive({0.0, sigma * sigma * t}, cond, 1e-10);
}

double orderN2_mixture_fixed_point(double beta1, double beta2, double sigma, double alpha2, double t) {
    if (!(beta1 + beta2 < 1.0)) throw DomainError("orderN2 mixture requires beta1 + beta2 < 1");
    const GaussianMeasure mu{0.0, sigma * sigma * (1.0 + 2.0 * alpha2 * t) / (2.0 * alpha2)};
    return adaptive_fixed_point_M(beta1, beta2, mu, 0.0, false, 1e-10, nullptr);
}

double averaging_fixed_point(const AveragingFunction& f, const std::vector<double>& samples, double xiBar, double U) {
    if (samples.empty()) throw DomainError("averaging_fixed_point: no samples");
    auto map = [&](double M) {
        double s = 0.0;
        for (double xi : samples) s += f(xi, xiBar, U, M);
        return s / static_cast<double>(samples.size());
    };
    double M = 0.0;
    for (int it = 0; it < 10000; ++it) {
        const double nm = map(M);
        if (std::abs(nm - M) <= 1e-14) {
            if (std::abs(map(nm) - nm) <= 1e-12) return nm;
        }
        M = nm;
    }
    throw NumericalError("averaging_fixed_point did not converge; Lipschitz constant likely >= 1");
}

double averaging_fixed_point(const AveragingFunction& f, const GaussianMeasure& measure, double U) {
    auto map = [&](double M) { return gauss_expect(measure, [&](double u) { return f(u, 0.0, U, M); }, 64); };
    double M = 0.0;
    for (int it = 0; it < 10000; ++it) {
        const double nm = map(M);
        if (std::abs(nm - M) <= 1e-14) return nm;
        M = nm;
    }
    throw NumericalError("averaging_fixed_point did not converge; Lipschitz constant likely >= 1");
}

std::vector<double> renormalization_ledger(const std::vector<double>& beta, int d) {
    if (d < 1 || d > static_cast<int>(beta.size())) throw DomainError("renormalization level out of range");
    std::vector<double> L{1.0};
    for (int i = 1; i <= d; ++i) {
        const double prod = L.back() * beta[i - 1];
        if (!(prod < 1.0)) throw DomainError("renormalization ledger: L_{d-1} beta_d >= 1");
        L.push_back(L.back() / (1.0 - prod));
    }
    return L;
}

GaussianMeasure renormalization_measure(const ModelParams& params, int d, double t) {
    const int k = params.k();
    if (d < 1 || d > k) throw DomainError("renormalization level out of range");
    const double s2 = params.sigma * params.sigma;
    const double ad = params.alpha[d - 1];
    if (!(ad > 0.0)) throw DomainError("renormalization measure needs alpha_d > 0");
    double varQ;
    if (d < k) {
        const double an = params.alpha[d];
        varQ = an > 0.0 ? s2 * (-std::expm1(-2.0 * an * t)) / (2.0 * an) : s2 * t;
    } else {
        varQ = s2 * t;
    }
    return {0.0, s2 / (2.0 * ad) + varQ};
}

RenormResult renormalization_map(int d, const ModelParams& params, double x, double y, double t, int quadOrder) {
    if (params.zeroTemperature || !(params.betaSum() < 1.0))
        throw DomainError("renormalization_map requires beta_1 + ... + beta_k < 1");
    RenormResult r;
    r.ledger = renormalization_ledger(params.beta, d);
    std::vector<GaussianMeasure> mus(d + 1);
    for (int l = 2; l <= d; ++l) mus[l] = renormalization_measure(params, l, t);
    const HermiteRule& rule = hermite_rule(quadOrder);
    std::function<double(int, double, double)> phi = [&](int level, double xx, double yy) -> double {
        if (level == 1) return invariant_curve(params.beta[0], xx, yy);
        const double bd = params.beta[level - 1];
        const double s = mus[level].sd();
        auto F = [&](double p) {
            double acc = 0.0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q)
                acc += rule.weights[q] * phi(level - 1, s * rule.nodes[q], bd * (p + xx) + yy);
            return p - acc;
        };
        return toms748(F, -1.0, 1.0);
    };
    r.value = phi(d, x, y);
    return r;
}

double hitting_time_cdf(double x0, double level, double sigma, double t) {
    if (!(t >= 0.0) || !(sigma > 0.0)) throw DomainError("hitting_time_cdf: t >= 0 and sigma > 0 required");
    const double a = std::abs(x0 - level);
    if (a == 0.0) return 1.0;
    if (t == 0.0) return 0.0;
    if (std::isinf(t)) return 1.0;
    return std::erfc(a / (sigma * std::sqrt(2.0 * t)));
}

double hitting_time_density(double x0, double level, double sigma, double t) {
    if (!(t > 0.0) || !(sigma > 0.0)) return 0.0;
    const double a = std::abs(x0 - level);
    return a / (sigma * std::sqrt(2.0 * M_PI * t * t * t)) * std::exp(-a * a / (2.0 * sigma * sigma * t));
}

void write_curve_csv(std::ostream& os, double beta1, double offset, const std::vector<double>& xs) {
    os << "# schema curve/1\n";
    os << "x,m,branch\n";
    os.precision(17);
    for (double x : xs) {
        for (Branch b : {Branch::lower, Branch::middle, Branch::upper}) {
            if (beta1 <= 1.0 && b != Branch::upper) continue;
            if (!branch_exists(beta1, x, offset, b)) continue;
            os << x << ',' << invariant_curve(beta1, x, offset, b) << ',' << (beta1 <= 1.0 ? "unique" : branch_name(b))
               << '\n';
        }
    }
}

void write_limit_path_csv(std::ostream& os, const LimitPath& p) {
    os << "# schema limit_path/1\n";
    os << "t,m,x,branch,jump_flag\n";
    os.precision(17);
    for (std::size_t i = 0; i < p.t.size(); ++i)
        os << p.t[i] << ',' << p.m[i] << ',' << p.x[i] << ',' << branch_name(p.branch[i]) << ',' << p.jump[i] << '\n';
}

}  // namespace hierspin
