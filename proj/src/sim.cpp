#include "hierspin/sim.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace hierspin {

double TimescaleSpec::factor(int N) const { return std::pow(static_cast<double>(N), exponent); }

void TimescaleSpec::validate() const {
    if (exponent < 0 || exponent > 2) throw ConfigError("timescale exponent must be 0, 1 or 2");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
    for (std::size_t i = 0; i < outputGrid.size(); ++i) {
        if (outputGrid[i] < 0.0 || outputGrid[i] > horizon) throw ConfigError("output grid outside [0, horizon]");
        if (i > 0 && !(outputGrid[i] > outputGrid[i - 1])) throw ConfigError("output grid must be strictly increasing");
    }
}

TimescaleSpec TimescaleSpec::uniform(int exponent, double horizon, int points) {
    TimescaleSpec ts;
    ts.exponent = exponent;
    ts.horizon = horizon;
    for (int i = 0; i < points; ++i) ts.outputGrid.push_back(horizon * i / (points - 1));
    return ts;
}

Engine::Engine(const ModelParams& params, const SystemState& state0, const SeedSpec& seed)
    : params_(params),
      spins_(state0.spins),
      fields_(params, state0.fields, state0.time, Stream(seed, kTagFields)),
      rng_(seed, kTagEvents),
      t_(state0.time) {
    params_.validate();
    const int k = params_.k();
    const auto& shape = params_.shape;
    for (auto s : spins_)
        if (s != 1 && s != -1) throw std::invalid_argument("spins must be +1 or -1");
    const BlockObservables obs = block_observables(state0, shape);
    sums_ = obs.spinSums;
    for (int d = 1; d <= k; ++d) {
        vol_.push_back(static_cast<double>(shape.blockVolume(d)));
        weight_.push_back(params_.zeroTemperature ? 1.0 : params_.beta[d - 1]);
    }
    xbuf_.resize(k);
}

double Engine::fieldArgument(std::int64_t site) {
    fields_.levelAverages(site, t_, xbuf_.data());
    const auto& shape = params_.shape;
    double z = 0.0;
    for (int d = 1; d <= params_.k(); ++d)
        z += weight_[d - 1] * (xbuf_[d - 1] + sums_[d - 1][shape.blockOf(site, d)] / vol_[d - 1]);
    return z;
}

void Engine::runUntil(double tEnd, EventObserver* observer) {
    if (tEnd < t_) throw std::invalid_argument("cannot run backwards in time");
    const auto& shape = params_.shape;
    const std::int64_t n = shape.totalSites();
    const double rate = 2.0 * static_cast<double>(n);
    const bool zt = params_.zeroTemperature;
    if (zt && rate * (tEnd - t_) > 9.2e18)
        throw ResourceError("expected number of candidate events exceeds 2^63; reduce N, the exponent or the horizon");
    const int k = params_.k();
    for (;;) {
        const double tn = t_ + rng_.exponential() / rate;
        if (tn > tEnd) break;
        t_ = tn;
        ++candidates_;
        const std::int64_t site = static_cast<std::int64_t>(rng_.below(static_cast<std::uint64_t>(n)));
        const int spin = spins_[site];
        fields_.levelAverages(site, t_, xbuf_.data());
        double z = 0.0;
        std::int64_t b = site;
        for (int d = 0; d < k; ++d) {
            b /= shape.blockSize;
            z += weight_[d] * (xbuf_[d] + sums_[d][b] / vol_[d]);
        }
        const double a = -spin * z;
        bool accept;
        double th = 0.0;
        if (zt) {
            accept = a > 0.0 || (a == 0.0 && rng_.uniform() < 0.5);
        } else {
            th = std::tanh(a);
            accept = 2.0 * rng_.uniform() < 1.0 + th;
        }
        if (observer) observer->onCandidate({t_, site, spin, z, -spin * th, accept});
        if (accept) {
            ++accepted_;
            spins_[site] = static_cast<std::int8_t>(-spin);
            b = site;
            for (int d = 0; d < k; ++d) {
                b /= shape.blockSize;
                sums_[d][b] -= 2 * spin;
            }
        }
    }
    t_ = tEnd;
}

BlockObservables Engine::observables() {
    const int k = params_.k();
    BlockObservables o;
    o.spinSums = sums_;
    const auto avg = fields_.blockAverages(t_);
    o.m.resize(k);
    o.x.resize(k);
    for (int d = 1; d <= k; ++d) {
        o.x[d - 1] = avg[d];
        o.m[d - 1].resize(sums_[d - 1].size());
        for (std::size_t b = 0; b < sums_[d - 1].size(); ++b) o.m[d - 1][b] = sums_[d - 1][b] / vol_[d - 1];
    }
    return o;
}

SystemState Engine::snapshot() { return {t_, spins_, fields_.siteFields(t_)}; }

SystemState sample_initial_state(const ModelParams& params, const SeedSpec& seed) {
    params.validate();
    const std::int64_t n = params.shape.totalSites();
    SystemState s;
    s.spins.resize(n);
    s.fields.resize(n);
    Stream sr(seed, kTagInitSpins);
    for (auto& v : s.spins) v = sr.uniform() < params.spinUpProb ? 1 : -1;
    Stream fr(seed, kTagInitFields);
    for (auto& v : s.fields) v = params.fieldInitStd > 0.0 ? params.fieldInitMean + params.fieldInitStd * fr.normal()
                                                          : params.fieldInitMean;
    return s;
}

ObservablePath simulate_system(const ModelParams& params, const SystemState& state0, const TimescaleSpec& ts,
                               const SeedSpec& seed, const std::vector<double>& snapshotTimes) {
    ts.validate();
    Engine eng(params, state0, seed);
    const double f = ts.factor(params.N());
    ObservablePath path;
    std::size_t si = 0;
    auto takeSnapshots = [&](double tMacro) {
        while (si < snapshotTimes.size() && snapshotTimes[si] <= tMacro) {
            eng.runUntil(state0.time + snapshotTimes[si] * f);
            path.snapshotTimes.push_back(snapshotTimes[si]);
            path.snapshots.push_back(eng.snapshot());
            ++si;
        }
    };
    for (double g : ts.outputGrid) {
        takeSnapshots(g);
        eng.runUntil(state0.time + g * f);
        path.times.push_back(g);
        path.observables.push_back(eng.observables());
    }
    takeSnapshots(ts.horizon);
    return path;
}

void write_path_csv(std::ostream& os, const ObservablePath& path) {
    os << "# schema path/1\n";
    os << "t,level,block_index,m,x\n";
    os.precision(17);
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        const auto& o = path.observables[i];
        for (std::size_t d = 0; d < o.m.size(); ++d)
            for (std::size_t b = 0; b < o.m[d].size(); ++b)
                os << path.times[i] << ',' << d + 1 << ',' << b << ',' << o.m[d][b] << ',' << o.x[d][b] << '\n';
    }
}

void write_snapshot_csv(std::ostream& os, const SystemState& state) {
    os << "# schema snapshot/1\n";
    os << "site,spin,x\n";
    os.precision(17);
    for (std::size_t s = 0; s < state.spins.size(); ++s)
        os << s << ',' << static_cast<int>(state.spins[s]) << ',' << state.fields[s] << '\n';
}

}  // namespace hierspin
