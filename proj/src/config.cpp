#include "hierspin/config.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>

#include "hierspin/acceptance.hpp"
#include "hierspin/harness.hpp"
#include "hierspin/limits.hpp"
#include "hierspin/sim.hpp"
#include "hierspin/zerotemp.hpp"

namespace hierspin {

using nlohmann::json;

namespace {

enum class Ty { integer, number, boolean, string, numbers, integers };

struct Key {
    Ty type;
    json def;
};

using Schema = std::map<std::string, Key>;

const char* type_name(Ty t) {
    switch (t) {
        case Ty::integer: return "integer";
        case Ty::number: return "number";
        case Ty::boolean: return "boolean";
        case Ty::string: return "string";
        case Ty::numbers: return "array of numbers";
        case Ty::integers: return "array of integers";
    }
    return "?";
}

bool matches(Ty t, const json& v) {
    switch (t) {
        case Ty::integer: return v.is_number_integer();
        case Ty::number: return v.is_number();
        case Ty::boolean: return v.is_boolean();
        case Ty::string: return v.is_string();
        case Ty::numbers:
            if (!v.is_array()) return false;
            for (const auto& e : v)
                if (!e.is_number()) return false;
            return true;
        case Ty::integers:
            if (!v.is_array()) return false;
            for (const auto& e : v)
                if (!e.is_number_integer()) return false;
            return true;
    }
    return false;
}

Schema model_keys() {
    return {
        {"N", {Ty::integer, 100}},
        {"beta", {Ty::numbers, json::array({0.5})}},
        {"alpha", {Ty::numbers, json::array()}},
        {"sigma", {Ty::number, 1.0}},
        {"zeroTemperature", {Ty::boolean, false}},
        {"spinUpProb", {Ty::number, 0.5}},
        {"fieldInitMean", {Ty::number, 0.0}},
        {"fieldInitStd", {Ty::number, 1.0}},
    };
}

Schema schema_for(const std::string& kind) {
    Schema s{{"kind", {Ty::string, kind}}, {"op", {Ty::string, ""}}, {"masterSeed", {Ty::integer, 0}}};
    auto add = [&](const Schema& more) {
        for (const auto& [k, v] : more) s[k] = v;
    };
    if (kind == "simulate") {
        add(model_keys());
        add({{"op", {Ty::string, "path"}},
             {"exponent", {Ty::integer, 0}},
             {"horizon", {Ty::number, 1.0}},
             {"gridPoints", {Ty::integer, 11}},
             {"replica", {Ty::integer, 0}}});
    } else if (kind == "limits") {
        add({{"op", {Ty::string, "critical_points"}},
             {"beta", {Ty::numbers, json::array({2.0})}},
             {"sigma", {Ty::number, 1.0}},
             {"alpha2", {Ty::number, 1.0}},
             {"x", {Ty::number, 0.0}},
             {"y", {Ty::number, 0.0}},
             {"offset", {Ty::number, 0.0}},
             {"xMin", {Ty::number, -3.0}},
             {"xMax", {Ty::number, 3.0}},
             {"points", {Ty::integer, 601}},
             {"m0", {Ty::number, 0.9}},
             {"horizon", {Ty::number, 1.0}},
             {"dt", {Ty::number, 1e-4}},
             {"arrival", {Ty::string, "g_root"}},
             {"X", {Ty::number, 2.0}},
             {"t", {Ty::number, 1.0}},
             {"d", {Ty::integer, 1}},
             {"mode", {Ty::string, "conditional"}}});
    } else if (kind == "zerotemp") {
        add({{"op", {Ty::string, "region"}},
             {"sigma", {Ty::number, 1.0}},
             {"alpha2", {Ty::number, 1.0}},
             {"XMin", {Ty::number, -3.0}},
             {"XMax", {Ty::number, 3.0}},
             {"XStep", {Ty::number, 0.01}},
             {"variance", {Ty::number, 1.0}},
             {"x0", {Ty::number, 0.5}},
             {"mbar", {Ty::number, 0.25}},
             {"X", {Ty::number, 0.0}},
             {"horizon", {Ty::number, 20.0}},
             {"h", {Ty::number, 0.01}},
             {"gridNodes", {Ty::integer, 1201}},
             {"N", {Ty::integer, 500}},
             {"replicas", {Ty::integer, 20}},
             {"cloudHorizon", {Ty::number, 2000.0}},
             {"gridPoints", {Ty::integer, 11}}});
    } else if (kind == "converge") {
        add(model_keys());
        add({{"op", {Ty::string, "contraction"}},
             {"Ns", {Ty::integers, json::array({100, 400, 1600})}},
             {"replicas", {Ty::integer, 200}},
             {"exponent", {Ty::integer, 1}},
             {"horizon", {Ty::number, 1.0}},
             {"moment", {Ty::number, 1.0}},
             {"X", {Ty::number, 2.0}},
             {"t", {Ty::number, 1.0}},
             {"windowFraction", {Ty::number, 0.25}},
             {"level", {Ty::number, 0.0}},
             {"x0", {Ty::number, 1.0}},
             {"dt", {Ty::number, 1e-3}}});
    } else if (kind == "accept") {
        add({{"op", {Ty::string, "suite"}}, {"criteria", {Ty::integers, json::array()}}, {"masterSeed", {Ty::integer, 12345}}});
    } else {
        throw ConfigError("kind: unknown experiment kind '" + kind + "'");
    }
    return s;
}

const std::map<std::string, std::set<std::string>>& ops() {
    static const std::map<std::string, std::set<std::string>> m{
        {"simulate", {"path"}},
        {"limits", {"critical_points", "invariant_curve", "meanfield_sde", "hier_sde", "orderN2_law", "renormalization"}},
        {"zerotemp", {"region", "attractor", "sign_dynamics", "staircase", "cloud"}},
        {"converge", {"contraction", "chaos", "covariance", "conditional", "hitting", "jumps", "orderN_law"}},
        {"accept", {"suite"}},
    };
    return m;
}

void validate_semantics(ExperimentConfig& c) {
    const json& v = c.values;
    if (!ops().at(c.kind).count(c.op)) throw ConfigError("op: unknown operation '" + c.op + "' for kind " + c.kind);
    const bool zeroT = v.contains("zeroTemperature") && v["zeroTemperature"].get<bool>();
    if (v.contains("beta") && v["beta"].empty() && !zeroT) throw ConfigError("beta: at least one level required");
    if (c.kind == "simulate" || c.kind == "converge") {
        const ModelParams p = c.modelParams();
        try {
            p.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("model: ") + e.what());
        }
        static const std::set<std::string> subcriticalOps{"contraction", "chaos", "conditional", "orderN_law"};
        if (c.kind == "converge" && subcriticalOps.count(c.op) && !(p.betaSum() < 1.0))
            throw ConfigError("beta: subcriticality violated (sum of beta must be < 1 for converge/" + c.op + ")");
    }
    if (c.kind == "converge") {
        const auto& Ns = v["Ns"];
        for (std::size_t i = 0; i < Ns.size(); ++i) {
            if (Ns[i].get<int>() < 1) throw ConfigError("Ns[" + std::to_string(i) + "]: must be positive");
            if (i > 0 && Ns[i].get<int>() <= Ns[i - 1].get<int>())
                throw ConfigError("Ns[" + std::to_string(i) + "]: must be strictly increasing");
        }
        if (v["replicas"].get<int>() < 1) throw ConfigError("replicas: must be >= 1");
    }
    if (c.kind == "accept")
        for (const auto& id : v["criteria"])
            if (id.get<int>() < 1 || id.get<int>() > kCriteriaCount) throw ConfigError("criteria: ids are 1.." + std::to_string(kCriteriaCount));
    if (c.kind == "limits" && c.op == "meanfield_sde" && v["arrival"] != "g_root" && v["arrival"] != "literal")
        throw ConfigError("arrival: expected 'g_root' or 'literal'");
    if (c.kind == "limits" && c.op == "orderN2_law" && v["mode"] != "conditional" && v["mode"] != "unconditional")
        throw ConfigError("mode: expected 'conditional' or 'unconditional'");
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::uint64_t ExperimentConfig::masterSeed() const { return values.at("masterSeed").get<std::uint64_t>(); }

ModelParams ExperimentConfig::modelParams() const {
    const json& v = values;
    ModelParams p;
    p.beta = v.at("beta").get<std::vector<double>>();
    p.alpha = v.at("alpha").get<std::vector<double>>();
    p.shape = {static_cast<int>(p.alpha.size()), v.at("N").get<int>()};
    p.sigma = v.at("sigma").get<double>();
    p.zeroTemperature = v.at("zeroTemperature").get<bool>();
    p.spinUpProb = v.at("spinUpProb").get<double>();
    p.fieldInitMean = v.at("fieldInitMean").get<double>();
    p.fieldInitStd = v.at("fieldInitStd").get<double>();
    return p;
}

std::string ExperimentConfig::canonical() const { return values.dump(); }

ExperimentConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    if (!doc.contains("kind") || !doc["kind"].is_string()) throw ConfigError("kind: required string");
    ExperimentConfig c;
    c.kind = doc["kind"].get<std::string>();
    const Schema schema = schema_for(c.kind);
    for (const auto& [k, val] : doc.items()) {
        const auto it = schema.find(k);
        if (it == schema.end()) throw ConfigError(k + ": unknown key for kind " + c.kind);
        if (!matches(it->second.type, val))
            throw ConfigError(k + ": type mismatch, expected " + type_name(it->second.type));
    }
    for (const auto& [k, key] : schema) {
        if (doc.contains(k)) {
            c.values[k] = doc[k];
        } else {
            c.values[k] = key.def;
            c.defaulted.push_back(k);
        }
    }
    // integers stored as doubles in number-typed keys keep their JSON form; normalize
    for (const auto& [k, key] : schema)
        if (key.type == Ty::number) c.values[k] = c.values[k].get<double>();
        else if (key.type == Ty::numbers) c.values[k] = c.values[k].get<std::vector<double>>();
    const bool zeroT = c.values.contains("zeroTemperature") && c.values["zeroTemperature"].get<bool>();
    if (zeroT && !doc.contains("beta")) c.values["beta"] = json::array();
    if (c.values.contains("alpha") && c.values["alpha"].empty())
        c.values["alpha"] = std::vector<double>(zeroT ? 2 : c.values["beta"].size(), 1.0);
    c.op = c.values["op"].get<std::string>();
    validate_semantics(c);
    return c;
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : cfg.canonical()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& outDir, Budget budget, std::ostream& log) {
    namespace fs = std::filesystem;
    fs::create_directories(outDir);
    const std::string stem = cfg.kind + "_" + config_hash(cfg);
    const fs::path csvPath = fs::path(outDir) / (stem + ".csv");
    std::ofstream csv(csvPath);
    if (!csv) throw std::runtime_error("cannot open " + csvPath.string());
    csv.precision(17);
    const json& v = cfg.values;
    const std::uint64_t seed = cfg.masterSeed();
    json notes = json::object();
    RunOutcome out;
    const auto t0 = std::chrono::steady_clock::now();

    auto num = [&](const char* k) { return v.at(k).get<double>(); };
    auto integer = [&](const char* k) { return v.at(k).get<int>(); };

    try {
        if (cfg.kind == "simulate") {
            const ModelParams p = cfg.modelParams();
            const TimescaleSpec ts = TimescaleSpec::uniform(integer("exponent"), num("horizon"), integer("gridPoints"));
            const SeedSpec s{seed, v.at("replica").get<std::uint64_t>()};
            const ObservablePath path = simulate_system(p, sample_initial_state(p, s), ts, s);
            write_path_csv(csv, path);
        } else if (cfg.kind == "limits") {
            const auto betas = v.at("beta").get<std::vector<double>>();
            if (cfg.op == "critical_points") {
                csv << "# schema critical/1\nbeta,lambda_a,m_a,m_b\n";
                csv.precision(6);
                for (double b : betas) {
                    const CriticalData cd = critical_data(b);
                    csv << b << ',' << cd.lambdaA << ',' << cd.mA << ',' << cd.mB << '\n';
                }
            } else if (cfg.op == "invariant_curve") {
                std::vector<double> xs;
                const int n = integer("points");
                for (int i = 0; i < n; ++i) xs.push_back(num("xMin") + (num("xMax") - num("xMin")) * i / std::max(1, n - 1));
                csv << "# schema curves/1\nbeta,x,m,branch\n";
                for (double b : betas) {
                    std::ostringstream part;
                    write_curve_csv(part, b, num("offset"), xs);
                    std::istringstream in(part.str());
                    std::string line;
                    std::getline(in, line);
                    std::getline(in, line);
                    while (std::getline(in, line)) csv << b << ',' << line << '\n';
                }
            } else if (cfg.op == "meanfield_sde") {
                const double b = betas.at(0);
                LimitSdeOptions o;
                o.dt = num("dt");
                o.arrival = v.at("arrival") == "literal" ? ArrivalConvention::literalIncrement : ArrivalConvention::gRoot;
                const LimitPath lp = limit_sde_meanfield(b, num("sigma"), num("m0"), num("horizon"), {seed, 0},
                                                         b > 1.0 ? SdeRegime::supercritical : SdeRegime::subcritical, o);
                write_limit_path_csv(csv, lp);
            } else if (cfg.op == "hier_sde") {
                const HierLimitPaths hp =
                    limit_sde_hier_orderN(betas.at(0), num("sigma"), num("alpha2"), num("horizon"), {seed, 0}, num("dt"), num("x"));
                csv << "# schema hier_sde/1\nt,x,m_curve,m_euler\n";
                for (std::size_t i = 0; i < hp.t.size(); ++i)
                    csv << hp.t[i] << ',' << hp.x[i] << ',' << hp.mCurve[i] << ',' << hp.mEuler[i] << '\n';
            } else if (cfg.op == "orderN2_law") {
                if (betas.size() != 2) throw ConfigError("beta: two levels required for orderN2_law");
                const LawMode mode = v.at("mode") == "conditional" ? LawMode::conditional : LawMode::unconditional;
                csv << "# schema law/1\nX,t,mode,M\n";
                csv << num("X") << ',' << num("t") << ',' << v.at("mode").get<std::string>() << ','
                    << orderN2_law(betas[0], betas[1], num("sigma"), num("alpha2"), num("X"), num("t"), mode) << '\n';
            } else if (cfg.op == "renormalization") {
                ModelParams p = ModelParams::hierarchical(2, betas, std::vector<double>(betas.size(), num("alpha2")), num("sigma"));
                const RenormResult r = renormalization_map(integer("d"), p, num("x"), num("y"), num("t"));
                csv << "# schema renorm/1\nd,x,y,t,phi";
                for (std::size_t i = 0; i < r.ledger.size(); ++i) csv << ",L" << i;
                csv << '\n' << integer("d") << ',' << num("x") << ',' << num("y") << ',' << num("t") << ',' << r.value;
                for (double L : r.ledger) csv << ',' << L;
                csv << '\n';
            }
        } else if (cfg.kind == "zerotemp") {
            if (cfg.op == "region") {
                std::vector<double> Xs;
                const long n = static_cast<long>(std::floor((num("XMax") - num("XMin")) / num("XStep") + 1e-9));
                for (long i = 0; i <= n; ++i) Xs.push_back(num("XMin") + i * num("XStep"));
                write_region_csv(csv, region_borders(num("sigma"), num("alpha2"), Xs));
            } else if (cfg.op == "attractor") {
                const GaussianMeasure mu{0.0, num("variance")};
                csv << "# schema attractor/1\nvariance,left,right\n"
                    << num("variance") << ',' << attractor_threshold(mu, Side::left) << ','
                    << attractor_threshold(mu, Side::right) << '\n';
            } else if (cfg.op == "sign_dynamics" || cfg.op == "staircase") {
                const GaussianMeasure mu{0.0, num("variance")};
                const double half = std::max(6.0 * mu.sd(), 2.0 + std::abs(num("X"))) + 0.5;
                GridProfile g = GridProfile::uniform(mu, -half, half, integer("gridNodes"), num("mbar"));
                if (cfg.op == "staircase") g = StaircaseProfile{num("x0")}.onGrid(g);
                const long steps = static_cast<long>(std::ceil(num("horizon") / num("h")));
                const SignDynamicsResult r = sign_dynamics(g, num("X"), num("horizon"), num("h"),
                                                           static_cast<int>(std::max(1L, steps / 20)));
                write_profile_path_csv(csv, r);
            } else if (cfg.op == "cloud") {
                int N = integer("N");
                double horizon = num("cloudHorizon");
                if (budget == Budget::desk) {
                    notes["substitution"] = "desk budget: N " + std::to_string(N) + " -> 16, horizon " + fmt(horizon) +
                                            " -> " + fmt(std::min(horizon, 20.0)) + " (order-N^2 units)";
                    N = 16;
                    horizon = std::min(horizon, 20.0);
                }
                ModelParams p;
                p.shape = {2, N};
                p.alpha = {1.0, num("alpha2")};
                p.sigma = num("sigma");
                p.zeroTemperature = true;
                p.fieldInitStd = std::sqrt(N * num("sigma") * num("sigma") / (2.0 * num("alpha2")));
                const TimescaleSpec ts = TimescaleSpec::uniform(2, horizon, integer("gridPoints"));
                const int R = integer("replicas");
                std::vector<ObservablePath> paths(R);
                parallel_for(R, [&](std::int64_t r) {
                    const SeedSpec s{seed, static_cast<std::uint64_t>(r)};
                    paths[r] = simulate_system(p, sample_initial_state(p, s), ts, s);
                });
                csv << "# schema cloud/1\nreplica,t,X,M\n";
                for (int r = 0; r < R; ++r)
                    for (std::size_t i = 0; i < paths[r].times.size(); ++i)
                        csv << r << ',' << paths[r].times[i] << ',' << paths[r].observables[i].topX() << ','
                            << paths[r].observables[i].topM() << '\n';
            }
        } else if (cfg.kind == "converge") {
            const ModelParams p = cfg.modelParams();
            SweepSpec sw;
            sw.Ns = v.at("Ns").get<std::vector<int>>();
            sw.replicas = integer("replicas");
            sw.timescale = TimescaleSpec::uniform(integer("exponent"), num("horizon"), 2);
            sw.masterSeed = seed;
            StatTable table;
            if (cfg.op == "contraction") {
                table = contraction_stat(p, sw, num("moment"));
            } else if (cfg.op == "chaos") {
                table = chaos_error(p, sw, integer("exponent"));
            } else if (cfg.op == "covariance") {
                CovarianceOptions o;
                o.replicas = sw.replicas;
                o.masterSeed = seed;
                for (int N : sw.Ns) {
                    const double a2 = p.alpha.size() > 1 ? p.alpha[1] : 1.0;
                    const StatTable t = covariance_check(p.sigma, a2, N, {0.5 * num("t")}, {num("t")}, o);
                    table.rows.insert(table.rows.end(), t.rows.begin(), t.rows.end());
                }
            } else if (cfg.op == "conditional") {
                ConditionalLawOptions o;
                o.masterSeed = seed;
                o.targetSelected = sw.replicas;
                for (int N : sw.Ns) {
                    const ConditionalLawResult r = conditional_law_test(p, N, num("t"), num("X"), num("windowFraction"), o);
                    table.add(N, "selected", static_cast<double>(r.selected), 0.0, r.attempts);
                    table.add(N, "insufficient", r.insufficient ? 1.0 : 0.0, 0.0, r.selected);
                    table.add(N, "mean_M", r.meanM, r.stderrM, r.selected);
                    table.add(N, "oracle_M", r.oracle, 0.0, r.selected);
                    table.add(N, "mean_abs_deviation", r.meanAbsDeviation, 0.0, r.selected);
                    table.add(N, "pair_correlation", r.correlation, 0.0, r.pairs);
                    table.add(N, "pair_correlation_z", r.correlationZ, 0.0, r.pairs);
                }
            } else if (cfg.op == "hitting") {
                for (int N : sw.Ns) {
                    const HittingTimeResult r =
                        hitting_time_test(p.sigma, N, num("level"), num("x0"), sw.replicas, num("horizon"), seed, num("dt"));
                    table.add(N, "ks", r.ks, 0.0, sw.replicas);
                    table.add(N, "ks_critical_1pct", r.ksCritical, 0.0, sw.replicas);
                    table.add(N, "p_hit", r.pHit, r.pHitStderr, sw.replicas);
                    table.add(N, "p_hit_theory", r.pTheory, 0.0, sw.replicas);
                }
            } else if (cfg.op == "jumps") {
                JumpTestOptions o;
                o.masterSeed = seed;
                for (int N : sw.Ns) {
                    const JumpStats s = supercritical_jump_test(p.beta.at(0), p.sigma, N, num("horizon"), sw.replicas, o);
                    const double n = static_cast<double>(s.jumps);
                    table.add(N, "jumps", n, 0.0, sw.replicas);
                    table.add(N, "max_departure_error", s.maxDepartureError, 0.0, s.jumps);
                    table.add(N, "max_arrival_error", s.maxArrivalError, 0.0, s.jumps);
                    table.add(N, "m_a", s.mA, 0.0, s.jumps);
                    table.add(N, "m_b", s.mB, 0.0, s.jumps);
                    table.add(N, "interjump_ks", s.ks, 0.0, static_cast<std::int64_t>(s.interJumpTimes.size()));
                    table.add(N, "interjump_ks_pvalue", s.ksPValue, 0.0, static_cast<std::int64_t>(s.interJumpTimes.size()));
                }
            } else if (cfg.op == "orderN_law") {
                for (int N : sw.Ns) {
                    ModelParams q = p;
                    q.shape.blockSize = N;
                    const OrderNLawResult r = orderN_law_test(q, num("horizon"), sw.replicas, seed, sw.replicas);
                    table.add(N, "ks", r.ks, 0.0, sw.replicas);
                }
            }
            write_stat_csv(csv, table);
        } else if (cfg.kind == "accept") {
            const auto which = v.at("criteria").get<std::vector<int>>();
            const auto results = run_acceptance(which, seed, &log);
            csv << "# schema accept/1\nid,title,pass,seconds,budget_seconds,detail\n";
            bool all = true;
            for (const auto& r : results) {
                all = all && r.pass;
                std::string detail = r.detail;
                for (auto& ch : detail)
                    if (ch == ',' || ch == '"') ch = ';';
                csv << r.id << ',' << r.title << ',' << (r.pass ? 1 : 0) << ',' << r.seconds << ',' << r.budgetSeconds
                    << ',' << detail << '\n';
            }
            const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.pass; });
            log << passed << "/" << results.size() << " criteria passed" << std::endl;
            if (!all) out.exitCode = 2;
        }
    } catch (const std::exception& e) {
        throw std::runtime_error(cfg.kind + "/" + cfg.op + ": " + e.what());
    }
    csv.close();
    out.files.push_back(csvPath.string());

    json manifest;
    manifest["config"] = v;
    manifest["configHash"] = config_hash(cfg);
    manifest["defaults"] = cfg.defaulted;
    manifest["budget"] = budget == Budget::desk ? "desk" : "full";
    manifest["outputs"] = json::array({csvPath.filename().string()});
    manifest["notes"] = notes;
    manifest["exitCode"] = out.exitCode;
    manifest["generator"] = "hierspin 1.0";
    manifest["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path manPath = fs::path(outDir) / (stem + ".manifest.json");
    std::ofstream(manPath) << manifest.dump(2) << '\n';
    out.files.push_back(manPath.string());
    return out;
}

}  // namespace hierspin
