#include "hierspin/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace hierspin {

namespace {

constexpr std::uint32_t kTagSelect = kTagHarness;
constexpr std::uint32_t kTagAux = kTagHarness + 1;

ModelParams withN(const ModelParams& params, int N) {
    ModelParams p = params;
    p.shape.blockSize = N;
    p.validate();
    return p;
}

double interpolate(const std::vector<double>& ts, const std::vector<double>& vs, double t) {
    if (t <= ts.front()) return vs.front();
    if (t >= ts.back()) return vs.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - ts.begin());
    const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    return vs[i - 1] + w * (vs[i] - vs[i - 1]);
}

// sum over levels of the weight beta_d / N^d, the change of a field argument per unit spin
double spinWeight(const ModelParams& p) {
    double w = 0.0;
    for (int d = 1; d <= p.k(); ++d) w += p.beta[d - 1] / static_cast<double>(p.shape.blockVolume(d));
    return w;
}

}  // namespace

void SweepSpec::validate() const {
    if (Ns.empty()) throw ConfigError("sweep needs at least one N");
    for (std::size_t i = 0; i < Ns.size(); ++i) {
        if (Ns[i] < 1) throw ConfigError("sweep N must be positive");
        if (i > 0 && Ns[i] <= Ns[i - 1]) throw ConfigError("sweep Ns must be strictly increasing");
    }
    if (replicas < 1) throw ConfigError("sweep needs at least one replica");
    timescale.validate();
}

void StatTable::add(int N, const std::string& statistic, double estimate, double stderror, std::int64_t replicas) {
    rows.push_back({N, statistic, estimate, stderror, replicas});
}

const StatRow& StatTable::at(int N, const std::string& statistic) const {
    for (const auto& r : rows)
        if (r.N == N && r.statistic == statistic) return r;
    throw std::out_of_range("no row for N=" + std::to_string(N) + " statistic " + statistic);
}

void write_stat_csv(std::ostream& os, const StatTable& table) {
    os << "# schema stat/1\n";
    os << "N,statistic,estimate,stderr,replicas\n";
    os.precision(17);
    for (const auto& r : table.rows)
        os << r.N << ',' << r.statistic << ',' << r.estimate << ',' << r.stderror << ',' << r.replicas << '\n';
}

Summary summarize(const std::vector<double>& v) {
    Summary s;
    s.n = static_cast<std::int64_t>(v.size());
    if (v.empty()) return s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stderror = std::sqrt(ss / (v.size() - 1) / v.size());
    }
    return s;
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) return 0.0;
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) return 0.0;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

double ks_pvalue(double d, double effectiveN) {
    const double sn = std::sqrt(effectiveN);
    const double lam = (sn + 0.12 + 0.11 / sn) * d;
    if (lam < 0.2) return 1.0;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lam * lam);
        p += (j % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n < 2) return 0.0;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

std::uint64_t derive_seed(std::uint64_t masterSeed, std::uint64_t a, std::uint64_t b) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(masterSeed) ^ a) ^ b);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body, int threads) {
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = static_cast<int>(std::min<std::int64_t>(threads, n));
    if (threads <= 1) {
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// contraction

namespace {

class ContractionObserver : public EventObserver {
public:
    ContractionObserver(Engine& e, double kmom) : e_(e), k_(kmom), N_(e.params().N()), w_(spinWeight(e.params())) {
        const double z = e_.fieldArgument(0);
        update(e_.magnetization(1, 0) - std::tanh(z));
    }
    void onCandidate(const Candidate& c) override {
        if (c.site >= N_) return;
        const double m = e_.magnetization(1, 0);
        update(m - c.tanhArg);
        if (c.accepted) update(m - 2.0 * c.spin / N_ - std::tanh(c.fieldArg - 2.0 * c.spin * w_));
    }
    double sup() const { return std::pow(sup_, k_); }

private:
    void update(double y) { sup_ = std::max(sup_, std::abs(y)); }
    Engine& e_;
    double k_;
    int N_;
    double w_;
    double sup_ = 0.0;
};

}  // namespace

StatTable contraction_stat(const ModelParams& params, const SweepSpec& sweep, double k) {
    sweep.validate();
    if (!(k > 0.0)) throw DomainError("contraction_stat: moment must be positive");
    StatTable table;
    for (int N : sweep.Ns) {
        const ModelParams p = withN(params, N);
        const std::uint64_t seed = derive_seed(sweep.masterSeed, static_cast<std::uint64_t>(N));
        const double tEnd = sweep.timescale.horizon * sweep.timescale.factor(N);
        std::vector<double> sups(sweep.replicas);
        parallel_for(sweep.replicas, [&](std::int64_t r) {
            const SeedSpec s{seed, static_cast<std::uint64_t>(r)};
            Engine e(p, sample_initial_state(p, s), s);
            ContractionObserver obs(e, k);
            e.runUntil(tEnd, &obs);
            sups[r] = obs.sup();
        });
        const Summary sm = summarize(sups);
        table.add(N, sweep.statistic.empty() ? "sup_y_k" : sweep.statistic, sm.mean, sm.stderror, sm.n);
    }
    return table;
}

// chaos

namespace {

class SupDistanceObserver : public EventObserver {
public:
    using Limit = std::function<double(double tMicro, const Candidate* c)>;
    SupDistanceObserver(Engine& e, int level, Limit limit) : e_(e), level_(level), limit_(std::move(limit)) {
        vol_ = static_cast<std::int64_t>(e.params().shape.blockVolume(level));
        sup_ = std::abs(e_.magnetization(level_, 0) - limit_(e_.time(), nullptr));
    }
    void onCandidate(const Candidate& c) override {
        if (c.site >= vol_) return;
        const double lim = limit_(c.time, &c);
        const double m = e_.magnetization(level_, 0);
        sup_ = std::max(sup_, std::abs(m - lim));
        if (c.accepted) sup_ = std::max(sup_, std::abs(m - 2.0 * c.spin / static_cast<double>(vol_) - lim));
    }
    void finish() { sup_ = std::max(sup_, std::abs(e_.magnetization(level_, 0) - limit_(e_.time(), nullptr))); }
    double sup() const { return sup_; }

private:
    Engine& e_;
    int level_;
    Limit limit_;
    std::int64_t vol_;
    double sup_;
};

}  // namespace

StatTable chaos_error(const ModelParams& params, const SweepSpec& sweep, int timescaleExponent) {
    sweep.validate();
    if (params.zeroTemperature || params.betaSum() >= 1.0)
        throw DomainError("chaos_error: subcriticality violated (sum of beta must be < 1)");
    if (timescaleExponent != 0 && timescaleExponent != 1)
        throw DomainError("chaos_error: timescale exponent must be 0 or 1");
    if (params.k() > 2) throw DomainError("chaos_error: implemented for k <= 2");
    StatTable table;
    const double T = sweep.timescale.horizon;
    const double m0 = 2.0 * params.spinUpProb - 1.0;
    for (int N : sweep.Ns) {
        const ModelParams p = withN(params, N);
        const int k = p.k();
        const std::uint64_t seed = derive_seed(sweep.masterSeed, static_cast<std::uint64_t>(N), 1);
        const double f = std::pow(static_cast<double>(N), timescaleExponent);

        // order-1 hierarchical limit: profile ODE against the law of the level-1 field averages
        ProfilePath profile;
        if (timescaleExponent == 0 && k == 2) {
            const GaussianMeasure mu{p.fieldInitMean, p.fieldInitStd * p.fieldInitStd / N};
            const double sd = std::max(mu.sd(), 1e-12);
            const GridProfile g0 = GridProfile::uniform(mu, mu.mean - 8.0 * sd, mu.mean + 8.0 * sd, 257, m0);
            profile = order1_profile_ode(p.beta[0], p.beta[1], mu, mu.mean, g0, T, 1e-3, 10);
        }

        std::vector<double> sups(sweep.replicas);
        parallel_for(sweep.replicas, [&](std::int64_t r) {
            const SeedSpec s{seed, static_cast<std::uint64_t>(r)};
            const SystemState s0 = sample_initial_state(p, s);
            Engine e(p, s0, s);
            double xbuf[2];
            e.levelAverages(0, xbuf);
            const double x0 = xbuf[0];
            SupDistanceObserver::Limit limit;
            // coupled order-N correction D = x~ - x driven by the top average
            double D = 0.0, tLast = 0.0;
            std::vector<double> yb(2);
            if (timescaleExponent == 0) {
                if (k == 1) {
                    const OdePath ode = meanfield_ode(p.beta[0], x0 + e.magnetization(1, 0),
                                                      e.magnetization(1, 0), T, 1e-3);
                    limit = [ode](double t, const Candidate*) { return ode.at(t); };
                } else {
                    std::vector<double> vals;
                    for (const auto& g : profile.profiles) vals.push_back(g.interpolate(x0));
                    const auto times = profile.profileTimes;
                    limit = [times, vals](double t, const Candidate*) { return interpolate(times, vals, t); };
                }
            } else {
                const double beta1 = p.beta[0];
                const double a2 = k == 2 ? p.alpha[1] : 0.0;
                limit = [&, beta1, a2](double t, const Candidate*) {
                    e.levelAverages(0, yb.data());
                    if (k == 1) return invariant_curve(beta1, yb[0]);
                    const double dtm = (t - tLast) / f;
                    const double decay = std::exp(-a2 * dtm);
                    D = decay * D - yb[1] * (1.0 - decay);
                    tLast = t;
                    return invariant_curve(beta1, yb[0] + D);
                };
            }
            SupDistanceObserver obs(e, 1, limit);
            e.runUntil(T * f, &obs);
            obs.finish();
            sups[r] = obs.sup();
        });
        const Summary sm = summarize(sups);
        table.add(N, sweep.statistic.empty() ? "sup_chaos" : sweep.statistic, sm.mean, sm.stderror, sm.n);
    }
    return table;
}

Summary curie_weiss_error(const ModelParams& params, double T, int replicas, std::uint64_t masterSeed,
                          std::vector<double>* perReplica) {
    params.validate();
    if (params.zeroTemperature) throw DomainError("curie_weiss_error: positive temperature required");
    const double betaSum = params.betaSum();
    const int k = params.k();
    std::vector<double> sups(replicas);
    parallel_for(replicas, [&](std::int64_t r) {
        const SeedSpec s{masterSeed, static_cast<std::uint64_t>(r)};
        Engine e(params, sample_initial_state(params, s), s);
        const OdePath ode = curie_weiss_ode(betaSum, e.topMagnetization(), T, 1e-3);
        struct Obs : EventObserver {
            Engine& e;
            const OdePath& ode;
            double vol;
            int k;
            double sup = 0.0;
            Obs(Engine& e_, const OdePath& o, double v, int k_) : e(e_), ode(o), vol(v), k(k_) {}
            void onCandidate(const Candidate& c) override {
                if (!c.accepted) return;
                const double lim = ode.at(c.time);
                const double m = e.topMagnetization();
                sup = std::max({sup, std::abs(m - lim), std::abs(m - 2.0 * c.spin / vol - lim)});
            }
        } obs(e, ode, static_cast<double>(params.shape.totalSites()), k);
        e.runUntil(T, &obs);
        sups[r] = std::max(obs.sup, std::abs(e.topMagnetization() - ode.at(T)));
    });
    if (perReplica) *perReplica = sups;
    return summarize(sups);
}

// covariance

double covariance_A(double sigma, double alpha2, double t) { return sigma * sigma * (1.0 + 2.0 * alpha2 * t) / (2.0 * alpha2); }

double covariance_B(double sigma, double, double t) { return sigma * sigma * t; }

double covariance_AN(double sigma, double alpha2, int N, double s, double t) {
    const double s2 = sigma * sigma, e = std::exp(-alpha2 * N * std::abs(t - s));
    return s2 / (2.0 * alpha2 * N) * (1.0 - e) + s2 / (2.0 * alpha2) * e + s2 * std::min(s, t);
}

double covariance_BN(double sigma, double alpha2, int N, double s, double t) {
    return covariance_AN(sigma, alpha2, N, s, t) -
           sigma * sigma / (2.0 * alpha2) * std::exp(-alpha2 * N * std::abs(t - s));
}

StatTable covariance_check(double sigma, double alpha2, int N, const std::vector<double>& sGrid,
                           const std::vector<double>& tGrid, const CovarianceOptions& opt) {
    if (N < 2) throw DomainError("covariance_check: N >= 2 required");
    ModelParams p = ModelParams::hierarchical(N, {0.0, 0.0}, {1.0, alpha2}, sigma);
    p.fieldInitStd = std::sqrt(N * sigma * sigma / (2.0 * alpha2));
    p.validate();
    std::vector<double> times(sGrid);
    times.insert(times.end(), tGrid.begin(), tGrid.end());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    auto idx = [&](double v) { return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), v) - times.begin()); };
    const double f = static_cast<double>(N) * N;
    const std::size_t nt = times.size();
    // per replica: x_0 and x_1 at every time
    std::vector<std::vector<double>> x0(opt.replicas, std::vector<double>(nt)), x1 = x0;
    parallel_for(opt.replicas, [&](std::int64_t r) {
        const SeedSpec s{opt.masterSeed, static_cast<std::uint64_t>(r)};
        Stream fr(s, kTagInitFields);
        std::vector<double> fields(static_cast<std::size_t>(N) * N);
        for (auto& v : fields) v = p.fieldInitStd * fr.normal();
        FieldProcess fp(p, fields, 0.0, Stream(s, kTagFields));
        double buf[2];
        for (std::size_t q = 0; q < nt; ++q) {
            fp.levelAverages(0, times[q] * f, buf);
            x0[r][q] = buf[0];
            fp.levelAverages(N, times[q] * f, buf);
            x1[r][q] = buf[0];
        }
    });
    StatTable table;
    auto report = [&](const std::string& name, double theory, std::vector<double> samples) {
        const Summary sm = summarize(samples);
        table.add(N, name, sm.mean, sm.stderror, sm.n);
        table.add(N, name + "_theory", theory, 0.0, sm.n);
        table.add(N, name + "_z", sm.stderror > 0.0 ? (sm.mean - theory) / sm.stderror : 0.0, 0.0, sm.n);
    };
    for (double t : tGrid) {
        const std::size_t q = idx(t);
        std::vector<double> a(opt.replicas), b(opt.replicas);
        for (int r = 0; r < opt.replicas; ++r) {
            a[r] = x0[r][q] * x0[r][q];
            b[r] = x0[r][q] * x1[r][q];
        }
        const std::string tag = "(" + std::to_string(t) + ")";
        report("A" + tag, covariance_A(sigma, alpha2, t), a);
        report("B" + tag, covariance_B(sigma, alpha2, t), b);
    }
    for (double s : sGrid)
        for (double t : tGrid) {
            if (t < s) continue;
            const std::size_t qs = idx(s), qt = idx(t);
            std::vector<double> a(opt.replicas), b(opt.replicas);
            for (int r = 0; r < opt.replicas; ++r) {
                a[r] = x0[r][qs] * x0[r][qt];
                b[r] = x0[r][qs] * x1[r][qt];
            }
            const std::string tag = "(" + std::to_string(s) + ";" + std::to_string(t) + ")";
            report("A_N" + tag, covariance_AN(sigma, alpha2, N, s, t), a);
            report("B_N" + tag, covariance_BN(sigma, alpha2, N, s, t), b);
        }
    return table;
}

// conditional law

ConditionalLawResult conditional_law_test(const ModelParams& params, int N, double t, double X, double windowFraction,
                                          const ConditionalLawOptions& opt) {
    const ModelParams p = withN(params, N);
    if (p.k() != 2) throw DomainError("conditional_law_test: two-level hierarchy required");
    if (p.zeroTemperature || p.betaSum() >= 1.0)
        throw DomainError("conditional_law_test: subcriticality violated (sum of beta must be < 1)");
    ConditionalLawResult res;
    res.N = N;
    res.X = X;
    res.t = t;
    res.epsilon = opt.windowConst * std::pow(static_cast<double>(N), -windowFraction);
    res.oracle = orderN2_law(p.beta[0], p.beta[1], p.sigma, p.alpha[1], X, t, LawMode::conditional);

    const std::int64_t n = p.shape.totalSites();
    const double tMicro = t * static_cast<double>(N) * N;
    const double tStart = std::max(0.0, tMicro - opt.burnIn);
    const double topSd0 = p.fieldInitStd / std::sqrt(static_cast<double>(n));
    const double topSdT = p.sigma * std::sqrt(t);
    const std::uint64_t seed = derive_seed(opt.masterSeed, static_cast<std::uint64_t>(N), 2);

    std::vector<std::int64_t> chosen;
    std::vector<std::pair<double, double>> ends;
    for (std::int64_t r = 0; r < opt.maxAttempts && static_cast<int>(chosen.size()) < opt.targetSelected; ++r) {
        Stream sel(seed, static_cast<std::uint64_t>(r), kTagSelect);
        const double X0 = p.fieldInitMean + topSd0 * sel.normal();
        const double XT = X0 + topSdT * sel.normal();
        ++res.attempts;
        if (std::abs(XT - X) <= res.epsilon) {
            chosen.push_back(r);
            ends.emplace_back(X0, XT);
        }
    }
    res.selected = static_cast<std::int64_t>(chosen.size());
    if (res.selected < 50) {
        res.insufficient = true;
        return res;
    }

    std::vector<double> Ms(chosen.size());
    std::vector<std::vector<double>> blockM(chosen.size());
    parallel_for(static_cast<std::int64_t>(chosen.size()), [&](std::int64_t i) {
        const SeedSpec s{seed, static_cast<std::uint64_t>(chosen[i])};
        const auto [X0, XT] = ends[i];
        // iid site fields conditioned on their mean X0
        Stream fr(s, kTagInitFields);
        std::vector<double> fields(n);
        double mean = 0.0;
        for (auto& v : fields) {
            v = p.fieldInitStd * fr.normal();
            mean += v;
        }
        mean /= static_cast<double>(n);
        for (auto& v : fields) v += X0 - mean;

        SystemState st;
        st.time = tStart;
        {
            FieldProcess fp(p, fields, 0.0, Stream(s, kTagAux));
            fp.pinTop(tMicro, XT);
            if (tStart > 0.0) fields = fp.siteFields(tStart);
        }
        st.fields = fields;
        st.spins.resize(n);
        SystemState probe{tStart, std::vector<std::int8_t>(n, 1), fields};
        const BlockObservables ob = block_observables(probe, p.shape);
        const std::vector<double>& xj = ob.x[0];
        const double Xs = ob.topX();
        const double b1 = p.beta[0], b2 = p.beta[1];
        AveragingFunction fcurve = [b1, b2](double xi, double xiBar, double, double M) {
            return invariant_curve(b1, xi, b2 * (xiBar + M));
        };
        const double Mbar = averaging_fixed_point(fcurve, xj, Xs, 0.0);
        Stream sr(s, kTagInitSpins);
        for (std::int64_t site = 0; site < n; ++site) {
            const double mj = invariant_curve(b1, xj[site / N], b2 * (Xs + Mbar));
            st.spins[site] = sr.uniform() < 0.5 * (1.0 + mj) ? 1 : -1;
        }
        Engine e(p, st, s);
        e.fields().pinTop(tMicro, XT);
        e.runUntil(tMicro);
        Ms[i] = e.topMagnetization();
        blockM[i].resize(N);
        for (int j = 0; j < N; ++j) blockM[i][j] = e.magnetization(1, j);
    });

    const Summary sm = summarize(Ms);
    res.meanM = sm.mean;
    res.stderrM = sm.stderror;
    double mad = 0.0;
    for (double m : Ms) mad += std::abs(m - res.oracle);
    res.meanAbsDeviation = mad / static_cast<double>(Ms.size());
    std::vector<double> a, b;
    for (const auto& bm : blockM)
        for (int j = 0; j + 1 < N; j += 2) {
            a.push_back(bm[j]);
            b.push_back(bm[j + 1]);
        }
    res.pairs = static_cast<std::int64_t>(a.size());
    res.correlation = pearson(a, b);
    res.correlationZ = res.correlation * std::sqrt(static_cast<double>(a.size()));
    return res;
}

// hitting times

HittingTimeResult hitting_time_test(double sigma, int N, double level, double x0, int replicas, double horizon,
                                    std::uint64_t masterSeed, double dt) {
    if (!(sigma > 0.0) || replicas < 1 || !(horizon > 0.0) || !(dt > 0.0))
        throw DomainError("hitting_time_test: invalid arguments");
    ModelParams p = ModelParams::meanField(N, 0.0, sigma);
    p.fieldInitMean = x0;
    p.fieldInitStd = 0.0;
    const std::vector<double> fields(N, x0);
    const double f = static_cast<double>(N);
    const long steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
    const double h = horizon / steps;
    std::vector<double> hit(replicas, -1.0);
    parallel_for(replicas, [&](std::int64_t r) {
        if (x0 == level) {
            hit[r] = 0.0;
            return;
        }
        const SeedSpec s{masterSeed, static_cast<std::uint64_t>(r)};
        FieldProcess fp(p, fields, 0.0, Stream(s, kTagFields));
        Stream aux(s, kTagAux);
        const double side = x0 > level ? 1.0 : -1.0;
        double prev = x0;
        for (long i = 1; i <= steps; ++i) {
            const double x = fp.top(i * h * f);
            const double dp = side * (prev - level), dx = side * (x - level);
            bool crossed = dx <= 0.0;
            if (!crossed && aux.uniform() < std::exp(-2.0 * dp * dx / (sigma * sigma * h))) crossed = true;
            if (crossed) {
                hit[r] = (i - 0.5) * h;
                return;
            }
            prev = x;
        }
    });
    HittingTimeResult res;
    for (double v : hit)
        if (v >= 0.0) res.hits.push_back(v);
    std::sort(res.hits.begin(), res.hits.end());
    const double n = replicas;
    res.pHit = res.hits.size() / n;
    res.pHitStderr = std::sqrt(res.pHit * (1.0 - res.pHit) / n);
    res.pTheory = hitting_time_cdf(x0, level, sigma, horizon);
    double d = 0.0;
    for (std::size_t i = 0; i < res.hits.size(); ++i) {
        const double F = hitting_time_cdf(x0, level, sigma, res.hits[i]);
        d = std::max({d, (i + 1) / n - F, F - i / n});
    }
    d = std::max(d, std::abs(res.pHit - res.pTheory));
    res.ks = d;
    res.ksCritical = 1.63 / std::sqrt(n);
    return res;
}

// generator

GeneratorResult generator_consistency(const ModelParams& params, const SystemState& state, GeneratorTest test,
                                      double dt, int replicas, std::uint64_t masterSeed) {
    params.validate();
    if (!(dt > 0.0)) throw DomainError("generator_consistency: dt must be positive");
    const auto& shape = params.shape;
    const int k = params.k();
    const int N = params.N();
    const std::int64_t n = shape.totalSites();
    const BlockObservables obs = block_observables(state, shape);

    auto evaluate = [&](const BlockObservables& o) {
        switch (test) {
            case GeneratorTest::constant: return 1.0;
            case GeneratorTest::topMagnetization: return o.topM();
            case GeneratorTest::blockFieldSquare: return o.x[0][0] * o.x[0][0];
        }
        return 0.0;
    };

    GeneratorResult res;
    switch (test) {
        case GeneratorTest::constant: res.analytic = 0.0; break;
        case GeneratorTest::topMagnetization: {
            double s = 0.0;
            for (std::int64_t site = 0; site < n; ++site) {
                const double z = local_flip_argument(obs, params, site);
                s += params.zeroTemperature ? sign0(z) : std::tanh(z);
            }
            res.analytic = -2.0 * obs.topM() + 2.0 * s / static_cast<double>(n);
            break;
        }
        case GeneratorTest::blockFieldSquare: {
            const double x = obs.x[0][0];
            double drift = 0.0;
            for (int d = 2; d <= k; ++d)
                drift -= params.alpha[d - 1] / static_cast<double>(shape.blockVolume(d - 1)) * (x - obs.x[d - 1][0]);
            const double diff = params.sigma * params.sigma / N;
            const double hfd = 1e-4;
            auto fsq = [](double v) { return v * v; };
            res.diffusionFiniteDifference = 0.5 * diff * (fsq(x + hfd) - 2.0 * fsq(x) + fsq(x - hfd)) / (hfd * hfd);
            res.analytic = 2.0 * x * drift + diff;
            break;
        }
    }

    const double f0 = evaluate(obs);
    std::vector<double> inc(replicas);
    parallel_for(replicas, [&](std::int64_t r) {
        const SeedSpec s{masterSeed, static_cast<std::uint64_t>(r)};
        Engine e(params, state, s);
        e.runUntil(state.time + dt);
        double f1;
        if (test == GeneratorTest::constant) {
            f1 = 1.0;
        } else if (test == GeneratorTest::topMagnetization) {
            f1 = e.topMagnetization();
        } else {
            double buf[16];
            std::vector<double> big;
            double* out = buf;
            if (k > 16) {
                big.resize(k);
                out = big.data();
            }
            e.levelAverages(0, out);
            f1 = out[0] * out[0];
        }
        inc[r] = (f1 - f0) / dt;
    });
    const Summary sm = summarize(inc);
    res.empirical = sm.mean;
    res.stderror = sm.stderror;
    res.z = sm.stderror > 0.0 ? (sm.mean - res.analytic) / sm.stderror : (sm.mean == res.analytic ? 0.0 : INFINITY);
    return res;
}

// supercritical jumps

JumpStats supercritical_jump_test(double beta, double sigma, int N, double T, int replicas, const JumpTestOptions& opt) {
    if (!(beta > 1.0)) throw DomainError("supercritical_jump_test: beta > 1 required");
    const CriticalData cd = critical_data(beta);
    JumpStats st;
    st.mA = cd.mA;
    st.mB = cd.mB;
    st.foldX = cd.foldX();
    const double scale = 4.0 * st.foldX * st.foldX / (sigma * sigma);
    st.dwell = opt.dwellFraction * scale;
    const double h = st.dwell / opt.samplesPerDwell;
    const long L = opt.samplesPerDwell;
    const long steps = static_cast<long>(std::floor(T / h));

    ModelParams p = ModelParams::meanField(N, beta, sigma);
    p.spinUpProb = 1.0;
    struct Replica {
        std::vector<double> times, deps, depsWindow, arrs;
        std::vector<int> dirs;
        std::uint64_t candidates = 0;
    };
    std::vector<Replica> reps(replicas);
    const std::uint64_t seed = derive_seed(opt.masterSeed, static_cast<std::uint64_t>(N), 3);
    parallel_for(replicas, [&](std::int64_t r) {
        const SeedSpec s{seed, static_cast<std::uint64_t>(r)};
        Engine e(p, sample_initial_state(p, s), s);
        std::vector<double> m(steps + 1), x(steps + 1);
        m[0] = e.topMagnetization();
        x[0] = e.topField();
        for (long i = 1; i <= steps; ++i) {
            e.runUntil(i * h * N);
            m[i] = e.topMagnetization();
            x[i] = e.topField();
        }
        Replica& out = reps[r];
        out.candidates = e.candidates();
        double side = m[0] >= 0.0 ? 1.0 : -1.0;
        const double ma = cd.mA;
        long i = 0, lastJump = 0;
        while (i <= steps) {
            if (side * m[i] > -ma) {
                ++i;
                continue;
            }
            // entered the opposite region at i; confirm the dwell
            bool stays = i + L <= steps;
            for (long j = i; stays && j <= i + L; ++j) stays = side * m[j] <= -ma;
            if (!stays) {
                if (i + L > steps) break;
                ++i;
                continue;
            }
            long exitIdx = i - 1;
            while (exitIdx > 0 && side * m[exitIdx] < ma) --exitIdx;
            long c = i - 1;
            while (c > 0 && side * m[c] <= 0.0) --c;
            const double tc = (c + side * m[c] / (side * m[c] - side * m[c + 1])) * h;
            const long a0 = i + L, a1 = i + 2 * L;
            // departure: m at the first passage of the field average through the fold after the previous
            // jump (the transit start when it comes first); arrival: mean over the dwell window that
            // follows the confirmation dwell
            long tau = lastJump;
            while (tau < exitIdx && side * x[tau] > -std::abs(cd.foldX())) ++tau;
            if (exitIdx - L >= 0 && a1 <= steps && side * m[exitIdx] >= ma) {
                double win = 0.0, arr = 0.0;
                for (long j = exitIdx - L; j <= exitIdx; ++j) win += m[j];
                out.depsWindow.push_back(win / (L + 1));
                const double dep = m[tau];
                for (long j = a0; j <= a1; ++j) arr += m[j];
                out.times.push_back(tc);
                out.deps.push_back(dep);
                out.arrs.push_back(arr / (L + 1));
                out.dirs.push_back(side > 0.0 ? -1 : 1);
            }
            side = -side;
            i += L;
            lastJump = i;
        }
    });
    for (const auto& rep : reps) {
        st.candidates += rep.candidates;
        for (std::size_t j = 0; j < rep.times.size(); ++j) {
            st.jumpTimes.push_back(rep.times[j]);
            st.departures.push_back(rep.deps[j]);
            st.departuresWindow.push_back(rep.depsWindow[j]);
            st.arrivals.push_back(rep.arrs[j]);
            st.directions.push_back(rep.dirs[j]);
            const double depSign = rep.dirs[j] < 0 ? 1.0 : -1.0;
            st.maxDepartureError = std::max(st.maxDepartureError, std::abs(rep.deps[j] - depSign * cd.mA));
            st.maxArrivalError = std::max(st.maxArrivalError, std::abs(rep.arrs[j] - (-depSign) * std::abs(cd.mB)));
            if (rep.arrs[j] * rep.deps[j] >= 0.0) st.arrivalsOpposite = false;
            if (j > 0) st.interJumpTimes.push_back(rep.times[j] - rep.times[j - 1]);
        }
    }
    st.jumps = static_cast<std::int64_t>(st.jumpTimes.size());
    const double dist = 2.0 * std::abs(st.foldX);
    if (!st.interJumpTimes.empty()) {
        st.ks = ks_statistic(st.interJumpTimes, [&](double t) { return hitting_time_cdf(0.0, dist, sigma, t); });
        st.ksPValue = ks_pvalue(st.ks, static_cast<double>(st.interJumpTimes.size()));
    }
    return st;
}

// order-N law

OrderNLawResult orderN_law_test(const ModelParams& params, double T, int replicas, std::uint64_t masterSeed,
                                int limitPaths, double limitDt) {
    params.validate();
    const int k = params.k();
    if (k > 2) throw DomainError("orderN_law_test: implemented for k <= 2");
    if (params.zeroTemperature || params.beta[0] >= 1.0)
        throw DomainError("orderN_law_test: beta_1 < 1 required");
    const int N = params.N();
    OrderNLawResult res;
    res.finite.resize(replicas);
    const std::uint64_t seed = derive_seed(masterSeed, static_cast<std::uint64_t>(N), 4);
    parallel_for(replicas, [&](std::int64_t r) {
        const SeedSpec s{seed, static_cast<std::uint64_t>(r)};
        Engine e(params, sample_initial_state(params, s), s);
        e.runUntil(T * N);
        res.finite[r] = e.magnetization(1, 0);
    });
    res.limit.resize(limitPaths);
    const std::uint64_t lseed = derive_seed(masterSeed, static_cast<std::uint64_t>(N), 5);
    parallel_for(limitPaths, [&](std::int64_t r) {
        const SeedSpec s{lseed, static_cast<std::uint64_t>(r)};
        if (k == 1) {
            Stream init(s, kTagAux);
            const double x0 = params.fieldInitMean + params.fieldInitStd / std::sqrt(static_cast<double>(N)) * init.normal();
            const double m0 = invariant_curve(params.beta[0], x0);
            LimitSdeOptions o;
            o.dt = limitDt;
            const LimitPath lp = limit_sde_meanfield(params.beta[0], params.sigma, m0, T, s, SdeRegime::subcritical, o);
            res.limit[r] = lp.m.back();
        } else {
            Stream init(s, kTagAux);
            const double x0 = params.fieldInitMean + params.fieldInitStd / std::sqrt(static_cast<double>(N)) * init.normal();
            const HierLimitPaths hp = limit_sde_hier_orderN(params.beta[0], params.sigma, params.alpha[1], T, s, limitDt, x0);
            res.limit[r] = hp.mCurve.back();
        }
    });
    res.ks = ks_two_sample(res.finite, res.limit);
    return res;
}

}  // namespace hierspin
