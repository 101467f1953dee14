#include "sievekit/cli.hpp"

#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include <cstdlib>
#include <sstream>

using namespace sievekit::cli;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args, const std::filesystem::path& cache) {
    args.push_back("--cache-dir");
    args.push_back(cache.string());
    std::ostringstream out;
    std::ostringstream err;
    const int code = main_entry(args, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("parse_args maps flags onto the configuration") {
    const RunConfig bound = parse_args({"bound", "--k", "3", "--u", "2", "--v", "12"});
    CHECK(bound.command == Command::bound);
    CHECK(*bound.k == 3);
    CHECK(*bound.u == 2.0);
    CHECK(*bound.v == 12.0);
    CHECK(bound.output == Output::text);

    const RunConfig scan = parse_args({"scan", "--tuple", "x,x+2,x+6", "--N", "1000", "--z", "5", "--tau", "7", "--json"});
    CHECK(scan.command == Command::scan);
    CHECK(scan.tuple == "x,x+2,x+6");
    CHECK(scan.N == 1000);
    CHECK(scan.z == 5);
    CHECK(scan.tau == 7.0);
    CHECK(scan.output == Output::json);

    const RunConfig opt = parse_args({"optimize", "--k", "3", "--u-range", "1.2:3", "--v-range", "8:16", "--grid", "64",
                                      "--step", "1/2048"});
    CHECK(opt.u_lo == 1.2);
    CHECK(opt.u_hi == 3.0);
    CHECK(opt.v_lo == 8.0);
    CHECK(opt.v_hi == 16.0);
    CHECK(opt.grid == 64);
    CHECK(*opt.step == 1.0 / 2048.0);
}

TEST_CASE("usage errors exit with 2") {
    auto code_of = [](std::vector<std::string> args) {
        try {
            parse_args(args);
        } catch (const UsageExit& e) {
            return e.exit_code;
        }
        return -1;
    };
    CHECK(code_of({"bound", "--k", "3", "--u", "2"}) == 2);
    CHECK(code_of({"bound", "--k", "3", "--u", "2", "--v", "12", "--bogus"}) == 2);
    CHECK(code_of({}) == 2);
    CHECK(code_of({"frobnicate"}) == 2);
    CHECK(code_of({"bound", "--k", "1", "--u", "2", "--v", "12"}) == 2);
    CHECK(code_of({"optimize", "--k", "3", "--u-range", "1.2-3", "--v-range", "8:16"}) == 2);
    CHECK(code_of({"bound", "--k", "3", "--u", "2", "--v", "12", "--json", "--csv"}) == 2);
    CHECK(code_of({"dhr", "--k", "3"}) == 2);
    CHECK(code_of({"bound", "--k", "3", "--u", "2", "--v", "12", "--step", "-1"}) == 2);
    CHECK(code_of({"--help"}) == 0);
}

TEST_CASE("cache directory resolution") {
    ::unsetenv("SIEVEKIT_CACHE");
    CHECK(parse_args({"buchstab", "--u", "2"}).cache_dir == ".sievekit-cache");
    ::setenv("SIEVEKIT_CACHE", "/tmp/from-env", 1);
    CHECK(parse_args({"buchstab", "--u", "2"}).cache_dir == "/tmp/from-env");
    CHECK(parse_args({"buchstab", "--u", "2", "--cache-dir", "/tmp/flag"}).cache_dir == "/tmp/flag");
    ::unsetenv("SIEVEKIT_CACHE");
}

TEST_CASE("bound report in JSON and text") {
    test_support::TempDir dir;
    const Result json = invoke({"bound", "--k", "3", "--u", "2", "--v", "12", "--json"}, dir.path());
    REQUIRE(json.code == 0);
    const auto j = nlohmann::json::parse(json.out);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) {
        keys.push_back(it.key());
    }
    std::sort(keys.begin(), keys.end());
    std::vector<std::string> expected{"I1", "I2", "N", "S4_term", "borderline", "err_estimate", "k", "old", "r", "u", "v"};
    std::sort(expected.begin(), expected.end());
    CHECK(keys == expected);
    CHECK(j["N"].get<double>() == Catch::Approx(6.943).margin(0.02));
    CHECK(j["r"].get<int>() == 7);
    CHECK(j["borderline"].get<bool>() == false);

    const Result text = invoke({"bound", "--k", "3", "--u", "2", "--v", "12"}, dir.path());
    REQUIRE(text.code == 0);
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.6g", j["N"].get<double>());
    CHECK(text.out.find(std::string("N             ") + buffer) != std::string::npos);
    CHECK(text.out.find("old") == std::string::npos);
    const Result with_old = invoke({"bound", "--k", "3", "--u", "2", "--v", "12", "--old"}, dir.path());
    std::snprintf(buffer, sizeof buffer, "%.6g", j["old"].get<double>());
    CHECK(with_old.out.find(buffer) != std::string::npos);
}

TEST_CASE("computation errors exit with 1") {
    test_support::TempDir dir;
    const Result bad_u = invoke({"bound", "--k", "3", "--u", "1.05", "--v", "12"}, dir.path());
    CHECK(bad_u.code == 1);
    CHECK(bad_u.err.rfind("error: ", 0) == 0);
    CHECK(invoke({"bound", "--k", "3", "--u", "2", "--v", "6"}, dir.path()).code == 1);
    CHECK(invoke({"buchstab", "--u", "0.5"}, dir.path()).code == 1);
    CHECK(invoke({"normalize", "--tuple", "x,x+2,x+4"}, dir.path()).code == 1);
    CHECK(invoke({"tuple-check", "--tuple", "x,y"}, dir.path()).code == 1);
    CHECK(invoke({"scan", "--tuple", "6x+5,6x+7,6x+11", "--N", "1000000000", "--z", "5", "--tau", "7"}, dir.path()).code == 1);
}

TEST_CASE("other subcommands") {
    test_support::TempDir dir;
    const Result w = invoke({"buchstab", "--u", "2.5"}, dir.path());
    CHECK(w.code == 0);
    CHECK(w.out.rfind("0.56218", 0) == 0);
    CHECK(w.out.size() >= 19);  // seventeen significant digits

    const Result n = invoke({"normalize", "--tuple", "x,x+2,x+6"}, dir.path());
    CHECK(n.code == 0);
    CHECK(n.out == "6x+5, 6x+7, 6x+11 (A=6, B=5)\n");

    const Result check = invoke({"tuple-check", "--tuple", "x,x+2,x+4", "--json"}, dir.path());
    CHECK(check.code == 0);
    const auto cj = nlohmann::json::parse(check.out);
    CHECK(cj["admissible"] == false);
    CHECK(cj["v_p"]["3"] == 3);

    const Result beta = invoke({"dhr", "--k", "2", "--which", "beta", "--json"}, dir.path());
    CHECK(beta.code == 0);
    const double b2 = nlohmann::json::parse(beta.out)["beta"].get<double>();
    CHECK(b2 > 2.0);
    CHECK(b2 < 6.0);

    const Result f = invoke({"dhr", "--k", "1", "--u", "3", "--which", "f"}, dir.path());
    CHECK(f.code == 0);
    CHECK(f.out.find("0.82303") != std::string::npos);

    const Result scan = invoke({"scan", "--tuple", "6x+5,6x+7,6x+11", "--N", "1000", "--z", "5", "--tau", "7", "--json"},
                               dir.path());
    CHECK(scan.code == 0);
    const auto sj = nlohmann::json::parse(scan.out);
    for (const char* key : {"N", "z", "tau", "S", "survivors", "witnesses"}) {
        CHECK(sj.contains(key));
    }
    CHECK(sj["survivors"] == 1000);

    const Result csv = invoke({"scan", "--tuple", "6x+5,6x+7,6x+11", "--N", "1000", "--z", "5", "--tau", "7", "--csv"},
                              dir.path());
    CHECK(csv.out.rfind("n,omega\n1000,", 0) == 0);

    const Result renormalised = invoke({"scan", "--tuple", "x,x+2,x+6", "--N", "1000", "--z", "5", "--tau", "7", "--json"},
                                       dir.path());
    CHECK(renormalised.code == 0);
    CHECK(nlohmann::json::parse(renormalised.out) == sj);
    CHECK(renormalised.err.find("6x+5") != std::string::npos);

    const Result opt = invoke({"optimize", "--k", "3", "--u-range", "1.2:3", "--v-range", "8:16", "--grid", "8", "--json"},
                              dir.path());
    CHECK(opt.code == 0);
    const auto oj = nlohmann::json::parse(opt.out);
    CHECK(oj["best"]["N"].get<double>() < 6.963);
}

TEST_CASE("repeated runs are bit-identical") {
    test_support::TempDir dir;
    const Result a = invoke({"bound", "--k", "2", "--u", "1.8", "--v", "10", "--json"}, dir.path());
    const Result b = invoke({"bound", "--k", "2", "--u", "1.8", "--v", "10", "--json"}, dir.path());
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
}
