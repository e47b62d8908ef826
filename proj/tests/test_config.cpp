#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hierspin/config.hpp"

using namespace hierspin;

TEST_CASE("minimal config gets defaults") {
    const auto c = parse_config(R"({"kind":"limits","beta":[2],"op":"critical_points"})");
    CHECK(c.kind == "limits");
    CHECK(c.op == "critical_points");
    CHECK(!c.defaulted.empty());
    CHECK(c.values.at("sigma").template get<double>() == 1.0);
}

TEST_CASE("config rejections name the key") {
    auto msg = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(msg(R"({"kind":"converge","beta":[0.6,0.6],"alpha":[1,1]})").find("subcriticality violated") !=
          std::string::npos);
    CHECK(msg(R"({"kind":"limits","colour":1})").rfind("colour", 0) == 0);
    CHECK(msg(R"({"kind":"limits","beta":"two"})").rfind("beta", 0) == 0);
    CHECK(msg(R"({"kind":"nothing"})").rfind("kind", 0) == 0);
    CHECK(msg(R"({"kind":"limits","op":"teleport"})").rfind("op", 0) == 0);
    CHECK(msg("{not json").find("invalid JSON") != std::string::npos);
    CHECK(msg(R"({"kind":"converge","op":"covariance","beta":[0.6,0.6],"alpha":[1,1]})").empty());
}

TEST_CASE("config round trip and hash") {
    const auto a = parse_config(R"({"kind":"converge","beta":[0.3,0.3],"alpha":[1,1],"Ns":[10,20]})");
    const auto b = parse_config(a.canonical());
    CHECK(a == b);
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    const auto c = parse_config(R"({"kind":"converge","beta":[0.3,0.3],"alpha":[1,1],"Ns":[10,30]})");
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("run experiment writes csv and manifest") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hierspin_test_out";
    fs::remove_all(dir);
    const auto c = parse_config(R"({"kind":"limits","beta":[2],"op":"critical_points"})");
    std::ostringstream log;
    const auto out = run_experiment(c, dir.string(), Budget::desk, log);
    CHECK(out.exitCode == 0);
    REQUIRE(out.files.size() == 2);
    CHECK(fs::path(out.files[0]).filename() == "limits_" + config_hash(c) + ".csv");
    std::ifstream in(out.files[0]);
    std::string header, cols, row;
    std::getline(in, header);
    std::getline(in, cols);
    std::getline(in, row);
    CHECK(header.rfind("# schema", 0) == 0);
    CHECK(cols == "beta,lambda_a,m_a,m_b");
    CHECK(row.rfind("2,0.440687,0.707107,", 0) == 0);
    CHECK(std::abs(std::stod(row.substr(row.rfind(',') + 1)) + 0.9868) < 1e-4);

    const auto z = parse_config(R"({"kind":"zerotemp","op":"region","sigma":3,"alpha2":1})");
    const auto zo = run_experiment(z, dir.string(), Budget::desk, log);
    std::ifstream zin(zo.files[0]);
    std::stringstream ss;
    ss << zin.rdbuf();
    CHECK(ss.str().find(",graph\n") != std::string::npos);
    CHECK(ss.str().find(",folded\n") == std::string::npos);
    fs::remove_all(dir);
}
