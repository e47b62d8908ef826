#include "hierspin/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>

#include "hierspin/harness.hpp"
#include "hierspin/limits.hpp"
#include "hierspin/zerotemp.hpp"

namespace hierspin {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Detail {
    std::ostringstream os;
    bool ok = true;
    template <class T>
    Detail& operator<<(const T& v) {
        os << v;
        return *this;
    }
    void check(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            os << " [fail: " << what << "]";
        }
    }
};

// independent bisection on the direct form of g over (-1, -m_a)
double bisect_jump_target(double beta) {
    const double ma = std::sqrt(1.0 - 1.0 / beta);
    const double la = std::atanh(ma) / beta;
    auto g = [&](double y) { return 2.0 * beta * y - 2.0 * beta * (ma - la) - std::log((1.0 + y) / (1.0 - y)); };
    double lo = -1.0 + 1e-15, hi = -ma;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

void c1(Detail& d) {
    double worstId = 0.0, worstG = 0.0;
    for (double beta : {1.01, 1.1, 2.0, 5.0, 10.0}) {
        const CriticalPoints c = critical_points(beta);
        const JumpTarget j = jump_target_detail(beta);
        worstId = std::max({worstId, std::abs(c.mA - std::tanh(beta * c.lambdaA)), std::abs(beta * (1.0 - c.mA * c.mA) - 1.0)});
        const double gA = std::abs(jump_function_g(beta, c.mA));
        worstG = std::max({worstG, gA, j.residual});
        d.check(j.mB < -c.mA, "m_b < -m_a at beta " + fmt("%g", beta));
    }
    d << "max identity error " << fmt("%.2e", worstId) << ", max |g| " << fmt("%.2e", worstG);
    d.check(worstId <= 1e-12, "identities within 1e-12");
    d.check(worstG <= 1e-10, "g within 1e-10");
}

void c2(Detail& d) {
    const double mb = jump_target(2.0);
    const double oracle = bisect_jump_target(2.0);
    d << "m_b " << fmt("%.10f", mb) << ", bisection " << fmt("%.10f", oracle);
    d.check(std::abs(mb - (-0.9868)) <= 1e-3, "m_b = -0.9868 +- 1e-3");
    d.check(std::abs(mb - oracle) <= 1e-10, "agreement with the bisection oracle");
}

void c3(Detail& d, std::uint64_t seed) {
    CovarianceOptions opt;
    opt.replicas = 10000;
    opt.masterSeed = seed;
    const StatTable t = covariance_check(1.0, 1.0, 100, {}, {1.0}, opt);
    const std::string tag = "(" + std::to_string(1.0) + ")";
    const StatRow& A = t.at(100, "A" + tag);
    const StatRow& B = t.at(100, "B" + tag);
    const double zA = t.at(100, "A" + tag + "_z").estimate, zB = t.at(100, "B" + tag + "_z").estimate;
    d << "A(1) " << fmt("%.4f", A.estimate) << " +- " << fmt("%.4f", A.stderror) << " (z " << fmt("%.2f", zA)
      << "), B(1) " << fmt("%.4f", B.estimate) << " +- " << fmt("%.4f", B.stderror) << " (z " << fmt("%.2f", zB) << ")";
    d.check(std::abs(zA) <= 3.0, "A(1) within 3 stderr of 1.5");
    d.check(std::abs(zB) <= 3.0, "B(1) within 3 stderr of 1.0");
}

void c4(Detail& d, std::uint64_t seed) {
    ModelParams p = ModelParams::meanField(1000, 0.0, 1.0);
    p.spinUpProb = 0.9;
    const int R = 1000;
    std::vector<double> m(R);
    parallel_for(R, [&](std::int64_t r) {
        const SeedSpec s{seed, static_cast<std::uint64_t>(r)};
        Engine e(p, sample_initial_state(p, s), s);
        e.runUntil(1.0);
        m[r] = e.topMagnetization();
    });
    const Summary sm = summarize(m);
    const double oracle = 0.8 * std::exp(-2.0);
    const double z = (sm.mean - oracle) / sm.stderror;
    d << "E[m(1)] " << fmt("%.5f", sm.mean) << " +- " << fmt("%.5f", sm.stderror) << " vs " << fmt("%.5f", oracle)
      << " (z " << fmt("%.2f", z) << ")";
    d.check(std::abs(z) <= 3.0, "within 3 stderr");
}

void c5(Detail& d, std::uint64_t seed) {
    ModelParams mf = ModelParams::meanField(1000, 0.5, 0.0);
    mf.fieldInitMean = 0.0;
    mf.fieldInitStd = 0.0;
    mf.spinUpProb = 1.0;
    const Summary a = curie_weiss_error(mf, 3.0, 1, seed);
    ModelParams h = ModelParams::hierarchical(200, {0.3, 0.3}, {1.0, 1.0}, 1.0);
    h.spinUpProb = 1.0;
    const Summary b = curie_weiss_error(h, 3.0, 1, seed);
    d << "mean-field sup " << fmt("%.4f", a.mean) << ", hierarchical sup " << fmt("%.4f", b.mean);
    d.check(a.mean <= 0.05, "mean-field sup <= 0.05");
    d.check(b.mean <= 0.05, "hierarchical sup <= 0.05");
}

void c6(Detail& d, std::uint64_t seed) {
    SweepSpec mf;
    mf.Ns = {100, 400, 1600};
    mf.replicas = 200;
    mf.timescale = TimescaleSpec::uniform(1, 1.0, 2);
    mf.masterSeed = seed;
    const StatTable a = contraction_stat(ModelParams::meanField(100, 0.5, 1.0), mf, 1.0);
    SweepSpec hs = mf;
    hs.Ns = {50, 100, 200};
    hs.timescale = TimescaleSpec::uniform(1, 0.25, 2);
    const StatTable b = contraction_stat(ModelParams::hierarchical(50, {0.3, 0.3}, {1.0, 1.0}, 1.0), hs, 1.0);
    auto decreasing = [](const StatTable& t) {
        for (std::size_t i = 1; i < t.rows.size(); ++i)
            if (!(t.rows[i].estimate < t.rows[i - 1].estimate)) return false;
        return true;
    };
    d << "mean-field";
    for (const auto& r : a.rows) d << " " << r.N << ":" << fmt("%.4f", r.estimate);
    d << "; hierarchical";
    for (const auto& r : b.rows) d << " " << r.N << ":" << fmt("%.4f", r.estimate);
    d.check(decreasing(a), "mean-field strictly decreasing");
    d.check(decreasing(b), "hierarchical strictly decreasing");
    d.check(a.rows.back().estimate < 0.1, "mean-field N=1600 below 0.1");
}

void c7(Detail& d, std::uint64_t seed) {
    const OrderNLawResult a = orderN_law_test(ModelParams::meanField(1000, 0.5, 1.0), 1.0, 1000, seed, 1000);
    ModelParams h = ModelParams::hierarchical(80, {0.3, 0.3}, {1.0, 1.0}, 1.0);
    h.fieldInitStd = std::sqrt(80.0 / 2.0);
    const OrderNLawResult b = orderN_law_test(h, 1.0, 1000, seed, 1000);
    d << "KS mean-field " << fmt("%.4f", a.ks) << ", hierarchical (N=80) " << fmt("%.4f", b.ks);
    d.check(a.ks <= 0.1, "mean-field KS <= 0.1");
    d.check(b.ks <= 0.1, "hierarchical KS <= 0.1");
}

void c8(Detail& d, std::uint64_t seed) {
    JumpTestOptions opt;
    opt.masterSeed = seed;
    const JumpStats s = supercritical_jump_test(2.0, 2.0, 2000, 170.0, 1, opt);
    double worstWindow = 0.0;
    for (std::size_t i = 0; i < s.departuresWindow.size(); ++i)
        worstWindow = std::max(worstWindow, std::abs(std::abs(s.departuresWindow[i]) - s.mA));
    d << s.jumps << " jumps, max departure error " << fmt("%.4f", s.maxDepartureError) << " (pre-exit window "
      << fmt("%.4f", worstWindow) << "), max arrival error " << fmt("%.4f", s.maxArrivalError) << ", inter-jump KS "
      << fmt("%.3f", s.ks) << " p " << fmt("%.3f", s.ksPValue);
    d.check(s.jumps >= 5, "at least 5 jumps");
    d.check(s.maxDepartureError <= 0.05, "departures within 0.05 of m_a");
    d.check(s.maxArrivalError <= 0.05 && s.arrivalsOpposite, "arrivals within 0.05 of the g-root target");
    d.check(s.ksPValue >= 0.01, "inter-jump KS at the 1% level");
}

void c9(Detail& d, std::uint64_t seed) {
    ConditionalLawOptions opt;
    opt.masterSeed = seed;
    std::vector<ConditionalLawResult> res;
    for (int N : {50, 100, 200}) {
        ModelParams p = ModelParams::hierarchical(N, {0.3, 0.3}, {1.0, 1.0}, 1.0);
        p.fieldInitStd = std::sqrt(N / 2.0);
        res.push_back(conditional_law_test(p, N, 1.0, 2.0, 0.25, opt));
    }
    d << "oracle " << fmt("%.4f", res.back().oracle) << ";";
    for (const auto& r : res)
        d << " N=" << r.N << ": mean " << fmt("%.4f", r.meanM) << " (" << r.selected << " selected), corr "
          << fmt("%.3f", r.correlation);
    const auto& last = res.back();
    d.check(!last.insufficient, "enough replicas in the window");
    d.check(std::abs(last.meanM - last.oracle) <= 0.05, "conditional mean within 0.05 at N=200");
    d.check(std::abs(last.correlation) < 0.1, "|corr| < 0.1 at N=200");
}

void c10(Detail& d) {
    const double r0 = attractor_threshold({0.0, 1e-30}, Side::right), l0 = attractor_threshold({0.0, 1e-30}, Side::left);
    const double rInf = attractor_threshold({0.0, 1e14}, Side::right), lInf = attractor_threshold({0.0, 1e14}, Side::left);
    const double att = attractor_threshold({0.0, 1.0}, Side::right);
    std::vector<double> Xs;
    for (int i = 0; i <= 600; ++i) Xs.push_back(-3.0 + 0.01 * i);
    const Regime g = region_borders(3.0, 1.0, Xs).regime;
    const Regime f = region_borders(1.0, 3.0, Xs).regime;
    d << "limits [" << fmt("%.7f", l0) << "," << fmt("%.7f", r0) << "] and [" << fmt("%.7f", lInf) << ","
      << fmt("%.7f", rInf) << "], attractor " << fmt("%.6f", att) << ", regimes " << regime_name(g) << "/"
      << regime_name(f);
    d.check(std::abs(r0 - 2.0) <= 1e-6 && std::abs(l0 + 2.0) <= 1e-6, "small-variance limits");
    d.check(std::abs(rInf - 1.0) <= 1e-6 && std::abs(lInf + 1.0) <= 1e-6, "large-variance limits");
    d.check(std::abs(att - 1.9487) <= 1e-3, "attractor 1.9487");
    d.check(g == Regime::graph && f == Regime::folded, "regime flags");
}

void c11(Detail& d) {
    const GaussianMeasure mu{0.0, 1.0};
    const GridProfile grid = GridProfile::uniform(mu, -6.0, 6.0, 1201, 0.0);
    const double dx = grid.xGrid[1] - grid.xGrid[0];
    // stationary staircase inside the region
    const GridProfile stair = StaircaseProfile{0.5}.onGrid(grid);
    const std::vector<double> v = sign_vector_field(stair, 0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (std::abs(grid.xGrid[i] - 0.5) > 0.5 * dx) worst = std::max(worst, std::abs(v[i]));
    // constant initial profile
    GridProfile flat = grid;
    std::fill(flat.values.begin(), flat.values.end(), 0.25);
    const SignDynamicsResult r = sign_dynamics(flat, 0.0, 20.0, 1e-2);
    const double thr = profile_threshold(r.final);
    const double Minf = r.M.back(), Mexp = mu.mass(-0.5, 0.5);
    const double cellMass = mu.mass(-0.5 - dx, -0.5 + dx);
    // staircase outside the region
    const SignDynamicsResult o = sign_dynamics(StaircaseProfile{2.5}.onGrid(grid), 0.0, 40.0, 1e-2);
    const double thrOut = profile_threshold(o.final), att = attractor_threshold(mu, Side::right);
    d << "stationary max |rate| " << fmt("%.1e", worst) << "; constant 0.25 -> threshold " << fmt("%.4f", thr)
      << ", M " << fmt("%.5f", Minf) << " vs " << fmt("%.5f", Mexp) << "; out-of-region -> " << fmt("%.4f", thrOut)
      << " vs attractor " << fmt("%.4f", att);
    d.check(worst == 0.0, "stationary staircase");
    d.check(std::abs(thr + 0.5) <= dx, "threshold -0.5 within one grid spacing");
    d.check(std::abs(Minf - Mexp) <= cellMass, "M(inf) within one cell mass");
    d.check(std::abs(thrOut - att) <= dx, "attractor within one grid spacing");
}

void c12(Detail& d) {
    const ModelParams p = ModelParams::hierarchical(2, {0.3, 0.3, 0.3}, {1.0, 1.0, 1.0}, 1.0);
    double worstCurve = 0.0;
    for (double x : {-1.5, -0.3, 0.0, 0.7, 2.0})
        for (double y : {-0.4, 0.0, 0.25})
            worstCurve = std::max(worstCurve, std::abs(renormalization_map(1, p, x, y, 1.0).value - invariant_curve(0.3, x, y)));
    double worstZero = 0.0;
    for (int lvl = 1; lvl <= 3; ++lvl) worstZero = std::max(worstZero, std::abs(renormalization_map(lvl, p, 0.0, 0.0, 1.0).value));
    const std::vector<double> L = renormalization_ledger(p.beta, 3);
    std::vector<double> ref{1.0};
    for (int lvl = 1; lvl <= 3; ++lvl) ref.push_back(ref.back() / (1.0 - ref.back() * 0.3));
    d << "phi_1 deviation " << fmt("%.1e", worstCurve) << ", max |phi_d(0,0)| " << fmt("%.1e", worstZero) << ", ledger";
    for (std::size_t i = 1; i < L.size(); ++i) d << " " << fmt("%.6g", L[i]);
    d.check(worstCurve == 0.0, "phi_1 equals the invariant curve");
    d.check(worstZero <= 1e-12, "phi_d(0,0) = 0");
    d.check(L == ref, "ledger recursion");
}

struct CriterionDef {
    int id;
    const char* title;
    double budget;
    std::function<void(Detail&, std::uint64_t)> run;
};

}  // namespace

std::string format_result(const CriterionResult& r) {
    std::ostringstream os;
    os << (r.pass ? "PASS" : "FAIL") << "  C" << r.id << (r.id < 10 ? "  " : " ") << r.title << "  ["
       << fmt("%.2f", r.seconds) << " s of " << fmt("%g", r.budgetSeconds) << " s]  " << r.detail;
    return os.str();
}

std::vector<CriterionResult> run_acceptance(const std::vector<int>& which, std::uint64_t seed, std::ostream* log) {
    const std::vector<CriterionDef> defs{
        {1, "critical geometry", 1.0, [](Detail& d, std::uint64_t) { c1(d); }},
        {2, "jump target", 1.0, [](Detail& d, std::uint64_t) { c2(d); }},
        {3, "diffusion covariance", 60.0, c3},
        {4, "decoupled spins", 60.0, c4},
        {5, "order-1 deterministic limit", 120.0, c5},
        {6, "contraction sweep", 600.0, c6},
        {7, "order-N subcritical law", 900.0, c7},
        {8, "supercritical jumps", 900.0, c8},
        {9, "order-N^2 conditional law", 1200.0, c9},
        {10, "zero-temperature geometry", 10.0, [](Detail& d, std::uint64_t) { c10(d); }},
        {11, "zero-temperature dynamics", 60.0, [](Detail& d, std::uint64_t) { c11(d); }},
        {12, "renormalization recursion", 10.0, [](Detail& d, std::uint64_t) { c12(d); }},
    };
    std::vector<CriterionResult> out;
    for (const auto& s : defs) {
        if (!which.empty() && std::find(which.begin(), which.end(), s.id) == which.end()) continue;
        CriterionResult r;
        r.id = s.id;
        r.title = s.title;
        r.budgetSeconds = s.budget;
        Detail d;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            s.run(d, derive_seed(seed, static_cast<std::uint64_t>(s.id), 99));
        } catch (const std::exception& e) {
            d.ok = false;
            d << " error: " << e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        d.check(r.seconds <= s.budget, "runtime budget");
        r.pass = d.ok;
        r.detail = d.os.str();
        if (log) *log << format_result(r) << std::endl;
        out.push_back(r);
    }
    return out;
}

}  // namespace hierspin
