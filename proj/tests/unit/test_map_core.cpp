#include <doctest.h>

#include "qclt/error.hpp"
#include "qclt/map_core.hpp"
#include "qclt/selection.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace qclt;

namespace {

OmegaSequence letters(std::vector<double> a) { return OmegaSequence{std::move(a), {}}; }

}  // namespace

TEST_CASE("apply_map hand values") {
    const auto d = MapSystem::doubling();
    CHECK(apply_map(d, 2, 0.3) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(apply_map(d, 2, 0.75) == doctest::Approx(0.5).epsilon(1e-15));
    const auto b = MapSystem::beta();
    CHECK(apply_map(b, 2.5, 0.5) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(apply_map(b, 3, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    const auto t = MapSystem::tent();
    CHECK(apply_map(t, 2, 0.25) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(apply_map(t, 2, 0.75) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("letters outside the family are rejected") {
    CHECK_THROWS_AS(MapSystem::beta().check_letter(1.0), DomainError);
    CHECK_THROWS_AS(MapSystem::beta().check_letter(0.5), DomainError);
    CHECK_THROWS_AS(MapSystem::tent().check_letter(2.5), DomainError);
    CHECK_NOTHROW(MapSystem::beta().check_letter(1.5));
}

TEST_CASE("maps keep the unit interval") {
    const auto b = MapSystem::beta();
    for (double beta : {1.3, 2.0, 2.5, 3.0, 7.7}) {
        for (int k = 0; k < 1000; ++k) {
            const double y = apply_map(b, beta, k / 1000.0);
            CHECK(y >= 0.0);
            CHECK(y < 1.0);
            CHECK_FALSE(std::isnan(y));
        }
    }
    const std::vector<double> used{1.3, 2.0, 2.5};
    CHECK_NOTHROW(b.validate(used));
}

TEST_CASE("custom branch tables") {
    // Two-branch map: x -> 2x on [0, 1/2), x -> 2x - 1 on [1/2, 1).
    BranchTable t{{0.0, 0.5, 2.0, 0.0}, {0.5, 1.0, 2.0, -1.0}};
    const auto c = MapSystem::custom({t});
    CHECK(apply_map(c, 0, 0.3) == doctest::Approx(0.6));
    CHECK(apply_map(c, 0, 0.8) == doctest::Approx(0.6));
    BranchTable gap{{0.0, 0.4, 2.0, 0.0}, {0.5, 1.0, 2.0, -1.0}};
    CHECK_THROWS(MapSystem::custom({gap}));
}

TEST_CASE("cocycle conventions") {
    const auto d = MapSystem::doubling();
    const auto w = letters({2, 2, 2, 2});
    CHECK(cocycle_apply(d, w, 0, 0.3) == 0.3);
    CHECK(cocycle_apply(d, w, 2, 0.3) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_THROWS_AS(cocycle_apply(d, w, 5, 0.3), InsufficientRandomnessError);

    const auto b = MapSystem::beta();
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(3);
        for (double& v : a) v = pick(gen) ? 2.5 : 3.0;
        const auto omega = letters(a);
        const Point x = point_from_unit(u(gen));
        const Point lhs = cocycle_apply(b, omega, 3, x);
        const Point rhs = cocycle_apply(b, shift(omega, 1), 2, cocycle_apply(b, omega, 1, x));
        CHECK(lhs.residue == rhs.residue);
    }
}

TEST_CASE("doubled cocycle is componentwise") {
    const auto d = MapSystem::doubling();
    const auto w = letters({2, 2});
    auto id = doubled_cocycle_apply(d, w, 0, 0.1, 0.9);
    CHECK(id.first == 0.1);
    CHECK(id.second == 0.9);
    auto one = doubled_cocycle_apply(d, w, 1, 0.3, 0.4);
    CHECK(one.first == doctest::Approx(0.6));
    CHECK(one.second == doctest::Approx(0.8));
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const double x = u(gen), y = u(gen);
        const auto p = doubled_cocycle_apply(d, w, 2, x, y);
        CHECK(p.first == cocycle_apply(d, w, 2, x));
        CHECK(p.second == cocycle_apply(d, w, 2, y));
    }
}

TEST_CASE("push_ensemble") {
    const auto d = MapSystem::doubling();
    const auto w = letters({2, 2});
    const auto grid = Ensemble::grid(1u << 20);
    const auto same = push_ensemble(d, w, 0, grid);
    CHECK(cdf_distance(same, grid) == 0.0);
    const auto pushed = push_ensemble(d, w, 1, grid);
    CHECK(uniform_cdf_deviation(pushed) <= std::ldexp(1.0, -19) + 1e-15);
    double total = 0.0;
    for (double v : pushed.weights()) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

    // Doubling permutes {k/m} for odd m, so the multiset is invariant.
    const std::size_t m = 1023;
    std::vector<Point> pts;
    for (std::size_t k = 0; k < m; ++k) pts.push_back(point_from_unit(static_cast<double>(k) / m));
    const auto odd = Ensemble::weighted(pts, std::vector<double>(m, 1.0), EnsembleMode::stratified_grid);
    CHECK(cdf_distance(push_ensemble(d, w, 1, odd), odd) <= 1.0 / m + 1e-12);
}

TEST_CASE("horizon cap") {
    const auto grid = Ensemble::grid(1u << 20);
    CHECK(horizon_cap(grid, 2.0) == 18);
    CHECK_NOTHROW(require_within_cap(grid, 2.0, 18));
    try {
        require_within_cap(grid, 2.0, 19);
        FAIL("expected PrecisionError");
    } catch (const PrecisionError& e) {
        CHECK(std::string(e.what()).find("n_max=18") != std::string::npos);
    }
    CHECK(horizon_cap(Ensemble::sample(100, 1), 2.0) == kNoHorizonCap);
}

TEST_CASE("observables") {
    const auto c = Observable::cos2pi();
    CHECK(c.evaluate(0.25) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.evaluate(0.0) == doctest::Approx(1.0));
    const auto pl = Observable::piecewise_linear({{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}});
    CHECK(pl.evaluate(0.25) == doctest::Approx(0.5));
    CHECK(pl.evaluate(0.75) == doctest::Approx(0.5));
    const auto cob = Observable::coboundary(c, MapSystem::doubling(), 2);
    const double x = 0.1;
    CHECK(cob.evaluate(x) == doctest::Approx(std::cos(2 * std::numbers::pi * x) - std::cos(4 * std::numbers::pi * x)));
    CHECK(cob.sup_bound() == doctest::Approx(2.0));
    const auto v = Observable::stack({c, Observable::sin2pi()});
    CHECK(v.dimension() == 2);
    const std::vector<double> dir{1.0, 1.0};
    CHECK(v.project(dir).evaluate(0.125) == doctest::Approx(std::sqrt(2.0)));
    const std::vector<double> bad{1.0};
    CHECK_THROWS_AS(v.project(bad), ContractError);
}

TEST_CASE("sample ensembles are reproducible") {
    const auto a = Ensemble::sample(1000, 42);
    const auto b = Ensemble::sample(1000, 42);
    const auto c = Ensemble::sample(1000, 43);
    CHECK(cdf_distance(a, b) == 0.0);
    CHECK(cdf_distance(a, c) > 0.0);
    CHECK(uniform_cdf_deviation(Ensemble::sample(100000, 3)) < 0.01);
}
