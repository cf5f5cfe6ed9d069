#include <doctest.h>

#include "qclt/config.hpp"
#include "qclt/error.hpp"
#include "qclt/numeric.hpp"
#include "qclt/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qclt;

namespace {

const char* kMinimal =
    "[map]\nfamily = doubling\n"
    "[selection]\nkind = iid\nalphabet = 2\n"
    "[observable]\nkind = cos2pi\n"
    "[ensemble]\nmode = grid\nsize = 4096\n"
    "[schedule]\nn = 2,4,8\nk_max = 3\nrealizations = 3\n"
    "[run]\nseed = 5\n";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("qclt_unit_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config parsing") {
    const auto c = parse_config_string(kMinimal);
    CHECK(c.seed == 5);
    CHECK(c.schedule == std::vector<std::size_t>{2, 4, 8});
    CHECK(c.hash() == parse_config_string(kMinimal).hash());
    auto with_workers = parse_config_string(std::string(kMinimal) + "workers = 8\noutput = elsewhere\n");
    CHECK(with_workers.hash() == c.hash());
    CHECK(parse_config_string(std::string(kMinimal) + "[bounds]\npsi = 4\n").hash() != c.hash());
}

TEST_CASE("config errors carry the field path") {
    auto field_of = [](const std::string& text) {
        try {
            parse_config_string(text);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("none");
    };
    CHECK(field_of("[map]\nfamily = doubling\n") == "run.seed");
    CHECK(field_of("[ensemble]\nsizee = 3\n[run]\nseed = 1\n") == "ensemble.sizee");
    CHECK(field_of("[schedule]\nn = \n[run]\nseed = 1\n") == "schedule.n");
    CHECK(field_of("[run]\nseed = 1\nworkers = 0\n") == "run.workers");
    CHECK(field_of("[map]\nfamily = beta\n[selection]\nalphabet = 0.5\n[run]\nseed = 1\n") == "selection.alphabet");
}

TEST_CASE("numeric helpers") {
    CompensatedSum s;
    s.add(1.0);
    for (int k = 0; k < 10; ++k) s.add(1e-16);
    s.add(-1.0);
    CHECK(s.value() == doctest::Approx(1e-15).epsilon(1e-6));
    RunningMoments m;
    for (double v : {1.0, 2.0, 3.0, 4.0}) m.add(v);
    CHECK(m.mean() == 2.5);
    CHECK(m.sample_variance() == doctest::Approx(5.0 / 3.0));
    const std::vector<double> v{3, 1, 2, 5, 4};
    CHECK(median(v) == 3.0);
    CHECK(quantile(v, 0.25) == 2.0);
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-9));
    CHECK(t_critical_95(10) == doctest::Approx(2.228138852).epsilon(1e-8));
    const std::vector<double> x{1, 2, 3}, y{2, 4, 6};
    CHECK(linear_fit(x, y).slope == doctest::Approx(2.0));
}

TEST_CASE("run writes a manifest with every section") {
    auto c = parse_config_string(kMinimal);
    c.output = scratch("simulate").string();
    const auto r = run(c, Command::simulate);
    const auto& m = r.manifest;
    for (const char* s : {"quenched", "limit_variance", "rate", "clt"}) CHECK(m["sections"].contains(s));
    CHECK(m["config_hash"] == c.hash());
    for (const auto& f : r.files) {
        const auto text = slurp(std::filesystem::path(c.output) / f);
        CHECK(text.rfind("# config_hash=" + c.hash() + "\n", 0) == 0);
    }
    CHECK(std::filesystem::exists(std::filesystem::path(c.output) / "manifest.json"));
}

TEST_CASE("outputs do not depend on the worker count") {
    auto c = parse_config_string(kMinimal);
    c.output = scratch("w1").string();
    const auto a = run(c, Command::simulate);
    c.output = scratch("w8").string();
    c.workers = 8;
    const auto b = run(c, Command::simulate);
    REQUIRE(a.files == b.files);
    for (const auto& f : a.files)
        CHECK(slurp(scratch("w1").parent_path() / "qclt_unit_w1" / f) ==
              slurp(scratch("w8").parent_path() / "qclt_unit_w8" / f));
}

TEST_CASE("precision cap surfaces through run") {
    auto c = parse_config_string(kMinimal);
    c.schedule = {4, 8, 64};
    c.output = scratch("cap").string();
    try {
        run(c, Command::variance);
        FAIL("expected PrecisionError");
    } catch (const PrecisionError& e) {
        CHECK(std::string(e.what()).find("n_max=") != std::string::npos);
    }
}
