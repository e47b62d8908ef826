#include "hierspin/fields.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace hierspin {

FieldProcess::FieldProcess(const ModelParams& params, const std::vector<double>& fields0, double t0, Stream rng)
    : shape_(params.shape), k_(params.k()), N_(params.N()), tNow_(t0), rng_(std::move(rng)) {
    const std::int64_t n = shape_.totalSites();
    if (static_cast<std::int64_t>(fields0.size()) != n)
        throw std::invalid_argument("initial fields do not match the hierarchy shape");

    std::function<int(int, int)> build = [&](int lo, int hi) -> int {
        if (hi - lo < 2) return -1;
        const int idx = static_cast<int>(tree_.size());
        tree_.push_back({});
        const int mid = lo + (hi - lo) / 2;
        const double nL = mid - lo, nR = hi - mid, nn = hi - lo;
        TreeNode node{lo, mid, hi, -1, -1, std::sqrt(nR / (nL * nn)), -std::sqrt(nL / (nR * nn))};
        node.left = build(lo, mid);
        node.right = build(mid, hi);
        tree_[idx] = node;
        return idx;
    };
    build(0, N_);

    const double s2 = params.sigma * params.sigma;
    kappa_.assign(k_, 0.0);
    noise2_.assign(k_, 0.0);
    for (int e = 0; e < k_; ++e) {
        for (int d = e + 1; d <= k_; ++d)
            kappa_[e] += params.alpha[d - 1] / static_cast<double>(shape_.blockVolume(d - 1));
        noise2_[e] = s2 / static_cast<double>(shape_.blockVolume(e));
    }
    topNoise2_ = s2 / static_cast<double>(n);

    // averages per level, level 0 = sites
    std::vector<std::vector<double>> avg(k_ + 1);
    avg[0] = fields0;
    for (int d = 1; d <= k_; ++d) {
        const std::int64_t nb = shape_.blocksAt(d);
        avg[d].assign(nb, 0.0);
        for (std::int64_t b = 0; b < nb; ++b) {
            double s = 0.0;
            for (int i = 0; i < N_; ++i) s += avg[d - 1][b * N_ + i];
            avg[d][b] = s / N_;
        }
    }
    top_ = {avg[k_][0], t0};

    const int nodes = static_cast<int>(tree_.size());
    coef_.resize(k_);
    std::vector<double> prefix(N_ + 1);
    for (int e = 0; e < k_; ++e) {
        const std::int64_t parents = shape_.blocksAt(e + 1);
        coef_[e].assign(parents * nodes, Coef{0.0, t0});
        for (std::int64_t p = 0; p < parents; ++p) {
            prefix[0] = 0.0;
            for (int i = 0; i < N_; ++i) prefix[i + 1] = prefix[i] + avg[e][p * N_ + i];
            for (int q = 0; q < nodes; ++q) {
                const TreeNode& t = tree_[q];
                const double nL = t.mid - t.lo, nR = t.hi - t.mid;
                const double meanL = (prefix[t.mid] - prefix[t.lo]) / nL;
                const double meanR = (prefix[t.hi] - prefix[t.mid]) / nR;
                coef_[e][p * nodes + q].value = std::sqrt(nL * nR / (nL + nR)) * (meanL - meanR);
            }
        }
    }
}

void FieldProcess::checkTime(double t) {
    if (t < tNow_) throw std::logic_error("field queries must be non-decreasing in time");
    tNow_ = t;
}

double FieldProcess::advance(Coef& c, int e, double t) {
    if (e < 0 && pinned_) {
        if (t >= pinT_) {
            c = {pinX_, pinT_};
            pinned_ = false;
        } else if (t > c.time) {
            const double dt = t - c.time, span = pinT_ - c.time;
            c.value += dt / span * (pinX_ - c.value) + std::sqrt(topNoise2_ * dt * (span - dt) / span) * rng_.normal();
            c.time = t;
            return c.value;
        }
    }
    const double dt = t - c.time;
    if (dt <= 0.0) return c.value;
    const double noise2 = e < 0 ? topNoise2_ : noise2_[e];
    const double kap = e < 0 ? 0.0 : kappa_[e];
    double var;
    if (kap > 0.0) {
        const double u = kap * dt;
        const double em = u < 1e-4 ? -u * (1.0 - u * (0.5 - u * (1.0 / 6.0 - u * (1.0 / 24.0)))) : std::expm1(-u);
        c.value *= 1.0 + em;
        var = noise2 * (-em) * (2.0 + em) / (2.0 * kap);
    } else {
        var = noise2 * dt;
    }
    if (var > 0.0) c.value += std::sqrt(var) * rng_.normal();
    c.time = t;
    return c.value;
}

double FieldProcess::component(int e, std::int64_t block, double t) {
    if (tree_.empty()) return 0.0;
    const std::int64_t parent = block / N_;
    const int child = static_cast<int>(block % N_);
    Coef* base = coef_[e].data() + parent * static_cast<std::int64_t>(tree_.size());
    double s = 0.0;
    int q = 0;
    while (q >= 0) {
        const TreeNode& node = tree_[q];
        const double v = advance(base[q], e, t);
        if (child < node.mid) {
            s += node.wL * v;
            q = node.left;
        } else {
            s += node.wR * v;
            q = node.right;
        }
    }
    return s;
}

double FieldProcess::top(double t) {
    checkTime(t);
    return advance(top_, -1, t);
}

void FieldProcess::levelAverages(std::int64_t site, double t, double* out) {
    checkTime(t);
    double acc = advance(top_, -1, t);
    out[k_ - 1] = acc;
    for (int d = k_ - 1; d >= 1; --d) {
        acc += component(d, shape_.blockOf(site, d), t);
        out[d - 1] = acc;
    }
}

double FieldProcess::siteField(std::int64_t site, double t) {
    checkTime(t);
    double acc = advance(top_, -1, t);
    for (int e = k_ - 1; e >= 0; --e) acc += component(e, shape_.blockOf(site, e), t);
    return acc;
}

std::vector<std::vector<double>> FieldProcess::blockAverages(double t) {
    checkTime(t);
    std::vector<std::vector<double>> avg(k_ + 1);
    avg[k_] = {advance(top_, -1, t)};
    const int nodes = static_cast<int>(tree_.size());
    for (int e = k_ - 1; e >= 0; --e) {
        const std::int64_t nb = shape_.blocksAt(e);
        avg[e].resize(nb);
        for (std::int64_t b = 0; b < nb; ++b) avg[e][b] = avg[e + 1][b / N_];
        for (std::int64_t p = 0; p < nb / N_; ++p) {
            Coef* base = coef_[e].data() + p * nodes;
            double* out = avg[e].data() + p * N_;
            for (int q = 0; q < nodes; ++q) {
                const TreeNode& node = tree_[q];
                const double v = advance(base[q], e, t);
                for (int i = node.lo; i < node.mid; ++i) out[i] += node.wL * v;
                for (int i = node.mid; i < node.hi; ++i) out[i] += node.wR * v;
            }
        }
    }
    return avg;
}

void FieldProcess::pinTop(double tPin, double xPin) {
    if (!(tPin > top_.time)) throw std::invalid_argument("pin time must follow the current top time");
    pinned_ = true;
    pinT_ = tPin;
    pinX_ = xPin;
}

std::vector<double> FieldProcess::siteFields(double t) { return blockAverages(t).front(); }

std::vector<std::vector<double>> simulate_diffusions_exact(const ModelParams& params,
                                                           const std::vector<double>& fields0,
                                                           const std::vector<double>& queryTimes,
                                                           const SeedSpec& seed) {
    params.validate();
    FieldProcess fp(params, fields0, 0.0, Stream(seed, 3));
    std::vector<std::vector<double>> out;
    out.reserve(queryTimes.size());
    for (double t : queryTimes) out.push_back(fp.siteFields(t));
    return out;
}

std::vector<std::vector<double>> simulate_diffusions_euler(const ModelParams& params,
                                                           const std::vector<double>& fields0,
                                                           const std::vector<double>& queryTimes,
                                                           const SeedSpec& seed, double dt) {
    params.validate();
    if (!(dt > 0.0)) throw ConfigError("Euler step must be positive");
    const auto& shape = params.shape;
    const int k = params.k();
    std::vector<double> a(k);
    for (int d = 1; d <= k; ++d) a[d - 1] = params.alpha[d - 1] / static_cast<double>(shape.blockVolume(d - 1));
    Stream rng(seed, 4);
    std::vector<double> x = fields0;
    std::vector<std::vector<double>> out;
    double t = 0.0;
    for (double q : queryTimes) {
        if (q < t) throw std::invalid_argument("query times must be sorted");
        while (t < q) {
            const double h = std::min(dt, q - t);
            const SystemState s{t, std::vector<std::int8_t>(x.size(), 1), x};
            const BlockObservables obs = block_observables(s, shape);
            const double sq = params.sigma * std::sqrt(h);
            for (std::size_t i = 0; i < x.size(); ++i) {
                double drift = 0.0;
                for (int d = 1; d <= k; ++d) drift -= a[d - 1] * (x[i] - obs.x[d - 1][shape.blockOf(i, d)]);
                x[i] += drift * h + sq * rng.normal();
            }
            t += h;
        }
        out.push_back(x);
    }
    return out;
}

}  // namespace hierspin
