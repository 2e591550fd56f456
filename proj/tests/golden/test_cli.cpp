#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "sawperc/environment.hpp"

namespace fs = std::filesystem;
using sawperc::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "sawperc_golden";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

/// First line of a CRLF CSV.
std::string header(const std::string& csv)
{
    return csv.substr(0, csv.find("\r\n"));
}

} // namespace

TEST_CASE("exact counts print pinned values")
{
    CHECK(call({"saw", "count", "--n", "4"}).out == "100\n");
    CHECK(call({"saw", "count", "--n", "3", "--table"}).out == "n,count\r\n0,1\r\n1,4\r\n2,12\r\n3,36\r\n");
    CHECK(call({"saw", "restricted", "--n", "6", "--alpha", "0.5"}).out ==
          "n,alpha,radius,restricted_count,count\r\n6,0.5,2,176,780\r\n");
    CHECK(call({"saw", "trees", "--n", "6"}).out == "n,p,trees\r\n6,1,2184\r\n");
    CHECK(call({"animal", "count", "--m", "4"}).out == "m,animals\r\n4,76\r\n");
    CHECK(call({"saw", "endtoend", "--n", "2"}).out ==
          "n,paths,sum_square_end,mean_square,max_square_end\r\n2,12,32,2.6666666666666665,4\r\n");
}

TEST_CASE("exhaustive coupling exits zero")
{
    const auto r = call({"estimate", "coupling", "--p", "0.3", "--p2", "0.6", "--n", "1", "--exhaustive"});
    CHECK(r.code == 0);
    CHECK(r.out.find("exhaustive_configurations,531441\r\n") != std::string::npos);
    CHECK(r.out.find("verified,1\r\n") != std::string::npos);
}

TEST_CASE("csv headers are pinned")
{
    CHECK(header(call({"estimate", "annealed", "--n", "2"}).out) == "n,annealed,quenched_mean,quenched_se,gap,retention");
    CHECK(header(call({"estimate", "quenched", "--n", "2", "--samples", "100"}).out) ==
          "n,annealed,quenched_mean,quenched_se,gap,retention");
    CHECK(header(call({"estimate", "fractional", "--n", "2", "--samples", "10"}).out) ==
          "n,theta,moment_mean,moment_se,annealed_power,empirical_b");
    CHECK(header(call({"estimate", "beta", "--n", "2", "--samples", "10"}).out) ==
          "beta,lambda,sites_mean,sites_se,steps_mean,steps_se");
    CHECK(header(call({"saw", "open-count", "--n", "2"}).out) == "n,open_count");
    CHECK(header(call({"saw", "hammersley", "--n", "2"}).out) == "x2,edge_open,lhs,rhs,holds");
    CHECK(header(call({"perc", "clusters", "--radius", "1"}).out) == "cluster,size,touches_boundary");
    CHECK(header(call({"animal", "decompose", "--n", "3", "--n0", "2"}).out) == "animal,size,count");
    CHECK(header(call({"animal", "separate", "--animal", "(0,0) (1,0)"}).out) == "cell_x,cell_y");

    const auto q = call({"com", "qform", "--samples", "50", "--n0", "2"}).out;
    for (const char* key : {"mean", "mean_se", "variance", "variance_se", "variance_analytic", "c1_statistic",
                            "indicator_rate"}) {
        CHECK(q.find(std::string("\r\n") + key + ",") != std::string::npos);
    }
}

TEST_CASE("json report layout")
{
    const auto path = scratch("report.json");
    REQUIRE(call({"--json", path.string(), "--seed", "7", "com", "qform", "--samples", "20", "--n0", "2"}).code == 0);
    const auto j = nlohmann::ordered_json::parse(slurp(path));
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"schema", "version", "command", "config", "results"});
    CHECK(j["schema"] == 1);
    CHECK(j["command"] == "com qform");
    CHECK(j["config"]["seed"] == 7);
    CHECK(j["config"]["K"] == 3.0);
    CHECK(j["config"]["C1"] == 1000.25);
    CHECK(j["config"]["n0"] == 2);
    CHECK_FALSE(j["config"].contains("threads"));
    CHECK(j["results"]["variance_analytic"].get<double>() == doctest::Approx(360.09).epsilon(1e-4));

    REQUIRE(call({"--json", path.string(), "--timings", "saw", "count", "--n", "2"}).code == 0);
    const auto t = nlohmann::ordered_json::parse(slurp(path));
    CHECK(t.contains("timings"));
    CHECK(t["timings"].contains("wall_seconds"));
}

TEST_CASE("fixed seed gives byte-identical output across runs and thread counts")
{
    const auto a = scratch("a.json");
    const auto b = scratch("b.json");
    const std::vector<std::string> cmd{"estimate", "quenched", "--p", "0.6", "--n", "5", "--samples", "400"};
    auto with = [&](const fs::path& json, const std::string& threads) {
        std::vector<std::string> args{"--seed", "42", "--threads", threads, "--json", json.string()};
        args.insert(args.end(), cmd.begin(), cmd.end());
        return call(args);
    };
    const auto r1 = with(a, "1");
    const auto r2 = with(b, "1");
    CHECK(r1.out == r2.out);
    CHECK(slurp(a) == slurp(b));
    const auto r3 = with(b, "3");
    CHECK(r1.out == r3.out);
    CHECK(slurp(a) == slurp(b));
    CHECK(call({"--seed", "43", "estimate", "quenched", "--p", "0.6", "--n", "5", "--samples", "400"}).out != r1.out);
}

TEST_CASE("exit codes")
{
    CHECK(call({"saw", "count", "--n", "30"}).code == 3);
    CHECK(call({"saw", "count", "--n", "x"}).code == 2);
    CHECK(call({"saw", "count", "--bogus", "1"}).code == 2);
    CHECK(call({"perc", "sample", "--p", "1.5"}).code == 2);
    CHECK(call({"com", "qform", "--n0", "1"}).code == 2);
    CHECK(call({"estimate", "beta", "--betas", "1,0.5"}).code == 2);
    CHECK(call({"estimate", "quenched", "--p", "0.01", "--n", "8", "--samples", "100", "--max-draws", "100"}).code == 2);
    CHECK(call({}).code == 2);
    CHECK(call({"saw"}).code == 2);
    const auto help = call({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("selftest") != std::string::npos);
    CHECK(call({"--version"}).code == 0);
}

TEST_CASE("config file, environment seed and flag precedence")
{
    const auto kv = scratch("run.conf");
    write_file(kv, "# comment\nn = 3\nseed=5\np=0.5\n");
    CHECK(call({"--config", kv.string(), "saw", "count"}).out == "36\n");
    CHECK(call({"--config", kv.string(), "saw", "count", "--n", "4"}).out == "100\n");

    const auto js = scratch("run.json");
    write_file(js, "{\"n\": 2, \"betas\": [0, 0.5], \"seed\": 5}");
    CHECK(call({"--config", js.string(), "saw", "count"}).out == "12\n");
    CHECK(call({"--config", js.string(), "estimate", "beta", "--samples", "10"}).code == 0);

    const auto report = scratch("seed.json");
    auto seed_of = [&](std::vector<std::string> args) {
        args.insert(args.begin(), {"--json", report.string()});
        REQUIRE(call(args).code == 0);
        return nlohmann::ordered_json::parse(slurp(report))["config"]["seed"].get<std::uint64_t>();
    };
    CHECK(seed_of({"--config", kv.string(), "saw", "count"}) == 5);
    ::setenv("SAWPERC_SEED", "9", 1);
    CHECK(seed_of({"--config", kv.string(), "saw", "count"}) == 9);
    CHECK(seed_of({"--config", kv.string(), "--seed", "11", "saw", "count"}) == 11);
    ::unsetenv("SAWPERC_SEED");

    const auto bad = scratch("bad.conf");
    write_file(bad, "nosuchkey=1\n");
    CHECK(call({"--config", bad.string(), "saw", "count"}).code == 2);
    write_file(bad, "just text\n");
    CHECK(call({"--config", bad.string(), "saw", "count"}).code == 2);
    CHECK(call({"--config", scratch("missing.conf").string(), "saw", "count"}).code == 2);
}

TEST_CASE("environment dump round-trips")
{
    const auto path = scratch("env.txt");
    REQUIRE(call({"--seed", "3", "perc", "dump", "--p", "0.4", "--radius", "3", "--out", path.string()}).code == 0);
    std::ifstream f(path);
    const auto env = sawperc::read_environment(f);
    CHECK(env == sawperc::sample_environment(sawperc::Region::centered(sawperc::kOrigin, 3), 0.4, 3));
}

TEST_CASE("selftest passes and reports injected faults")
{
    std::ostringstream ok;
    CHECK(sawperc::cli::selftest(ok) == 0);
    CHECK(ok.str().find("FAIL") == std::string::npos);

    const auto bad = call({"selftest", "--inject-fault", "partition_identity"});
    CHECK(bad.code == 4);
    CHECK(bad.out.find("FAIL partition_identity") != std::string::npos);
    CHECK(bad.out.find("PASS saw_counts") != std::string::npos);
    CHECK(call({"selftest", "--inject-fault", "no_such_check"}).code == 4);
}
