#include "hierspin/model.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace hierspin {

std::int64_t HierarchyShape::blockVolume(int d) const {
    std::int64_t v = 1;
    for (int i = 0; i < d; ++i) v *= blockSize;
    return v;
}

std::int64_t HierarchyShape::totalSites() const { return blockVolume(levels); }

std::int64_t HierarchyShape::blocksAt(int d) const { return blockVolume(levels - d); }

std::vector<int> HierarchyShape::tuple(std::int64_t site) const {
    if (site < 0 || site >= totalSites()) throw std::out_of_range("site index out of range");
    std::vector<int> t(levels);
    for (int d = 0; d < levels; ++d) {
        t[d] = static_cast<int>(site % blockSize) + 1;
        site /= blockSize;
    }
    return t;
}

std::int64_t HierarchyShape::flatten(const std::vector<int>& t) const {
    if (static_cast<int>(t.size()) != levels) throw std::out_of_range("site tuple has wrong length");
    std::int64_t s = 0;
    for (int d = levels - 1; d >= 0; --d) {
        if (t[d] < 1 || t[d] > blockSize) throw std::out_of_range("site tuple component out of range");
        s = s * blockSize + (t[d] - 1);
    }
    return s;
}

int HierarchyShape::distance(std::int64_t a, std::int64_t b) const {
    for (int d = 0; d < levels; ++d)
        if (blockOf(a, d) == blockOf(b, d)) return d;
    return levels;
}

void HierarchyShape::validate() const {
    if (levels < 1) throw ConfigError("levels must be >= 1");
    if (blockSize < 1) throw ConfigError("blockSize must be >= 1");
    double total = std::pow(static_cast<double>(blockSize), levels);
    if (total > 4.0e9) throw ConfigError("total number of sites too large");
}

double ModelParams::betaSum() const {
    if (zeroTemperature) return std::numeric_limits<double>::infinity();
    return std::accumulate(beta.begin(), beta.end(), 0.0);
}

void ModelParams::validate() const {
    shape.validate();
    if (!zeroTemperature) {
        if (static_cast<int>(beta.size()) != k()) throw ConfigError("beta must have one entry per level");
        for (double b : beta)
            if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("beta entries must be finite and >= 0");
    } else if (!beta.empty()) {
        throw ConfigError("zero temperature excludes finite beta values");
    }
    if (static_cast<int>(alpha.size()) != k()) throw ConfigError("alpha must have one entry per level");
    for (double a : alpha)
        if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("alpha entries must be finite and >= 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be finite and >= 0");
    if (!(spinUpProb >= 0.0 && spinUpProb <= 1.0)) throw ConfigError("spinUpProb must lie in [0,1]");
    if (!std::isfinite(fieldInitMean)) throw ConfigError("fieldInitMean must be finite");
    if (!(fieldInitStd >= 0.0) || !std::isfinite(fieldInitStd)) throw ConfigError("fieldInitStd must be >= 0");
}

ModelParams ModelParams::meanField(int N, double beta, double sigma, double alpha) {
    ModelParams p;
    p.shape = {1, N};
    p.beta = {beta};
    p.alpha = {alpha};
    p.sigma = sigma;
    p.fieldInitStd = sigma;
    return p;
}

ModelParams ModelParams::hierarchical(int N, std::vector<double> beta, std::vector<double> alpha, double sigma) {
    ModelParams p;
    p.shape = {static_cast<int>(beta.size()), N};
    p.beta = std::move(beta);
    p.alpha = std::move(alpha);
    p.sigma = sigma;
    return p;
}

BlockObservables block_observables(const SystemState& state, const HierarchyShape& shape) {
    const int k = shape.levels;
    const std::int64_t n = shape.totalSites();
    if (static_cast<std::int64_t>(state.spins.size()) != n || static_cast<std::int64_t>(state.fields.size()) != n)
        throw std::invalid_argument("state arrays do not match the hierarchy shape");
    BlockObservables o;
    o.m.resize(k);
    o.x.resize(k);
    o.spinSums.resize(k);
    std::vector<std::int64_t> sums(state.spins.begin(), state.spins.end());
    std::vector<double> fsum(state.fields.begin(), state.fields.end());
    const int N = shape.blockSize;
    for (int d = 1; d <= k; ++d) {
        const std::int64_t nb = shape.blocksAt(d);
        std::vector<std::int64_t> s(nb, 0);
        std::vector<double> f(nb, 0.0);
        for (std::int64_t b = 0; b < nb; ++b)
            for (int i = 0; i < N; ++i) {
                s[b] += sums[b * N + i];
                f[b] += fsum[b * N + i];
            }
        const double vol = static_cast<double>(shape.blockVolume(d));
        o.spinSums[d - 1] = s;
        o.m[d - 1].resize(nb);
        o.x[d - 1].resize(nb);
        for (std::int64_t b = 0; b < nb; ++b) {
            o.m[d - 1][b] = static_cast<double>(s[b]) / vol;
            o.x[d - 1][b] = f[b] / vol;
        }
        sums = std::move(s);
        fsum = std::move(f);
    }
    return o;
}

double local_flip_argument(const BlockObservables& obs, const ModelParams& params, std::int64_t site) {
    const auto& shape = params.shape;
    if (site < 0 || site >= shape.totalSites()) throw std::out_of_range("site index out of range");
    double z = 0.0;
    for (int d = 1; d <= shape.levels; ++d) {
        const std::int64_t b = shape.blockOf(site, d);
        const double w = params.zeroTemperature ? 1.0 : params.beta[d - 1];
        z += w * (obs.x[d - 1][b] + obs.m[d - 1][b]);
    }
    return z;
}

double local_flip_argument(const SystemState& state, const ModelParams& params, std::int64_t site) {
    if (site < 0 || site >= params.shape.totalSites()) throw std::out_of_range("site index out of range");
    return local_flip_argument(block_observables(state, params.shape), params, site);
}

double flip_rate(int spin, double fieldArg, bool zeroTemperature) {
    const double a = -static_cast<double>(spin) * fieldArg;
    return zeroTemperature ? 1.0 + sign0(a) : 1.0 + std::tanh(a);
}

double flip_rate(int spin, double fieldArg, const ModelParams& params) {
    return flip_rate(spin, fieldArg, params.zeroTemperature);
}

}  // namespace hierspin
