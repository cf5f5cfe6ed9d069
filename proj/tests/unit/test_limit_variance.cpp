#include <doctest.h>

#include "qclt/error.hpp"
#include "qclt/limit_variance.hpp"

#include <cmath>

using namespace qclt;

namespace {

const MonteCarloOptions kOpts{4, 1, 1};

}  // namespace

TEST_CASE("truncation K") {
    CHECK(choose_truncation_K(1024, 2, 2) == 32);
    CHECK(choose_truncation_K(1024, 2, 0.5) == 6);
    CHECK(choose_truncation_K(2, 10, 2) == 1);
}

TEST_CASE("V_k terms for doubling") {
    const auto d = MapSystem::doubling();
    const auto iid = SelectionProcess::iid({2.0}, {1.0});
    const auto grid = Ensemble::grid(1u << 16);
    const auto c = Observable::cos2pi();
    CHECK(estimate_vk(d, iid, c, grid, 0, 4, kOpts).value == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(std::abs(estimate_vk(d, iid, c, grid, 3, 4, kOpts).value) < 1e-8);
    const auto cst = Observable::constant(4.0);
    CHECK(estimate_vk(d, iid, cst, grid, 2, 2, kOpts).value == 0.0);
    const auto series = sigma_sq_series(d, iid, c, grid, 64, 3.0, 2.0, kOpts);
    CHECK(std::abs(series.sigma_sq - 0.5) < 0.02);
    CHECK(sigma_sq_series(d, iid, cst, grid, 64, 3.0, 2.0, kOpts).sigma_sq == 0.0);
}

TEST_CASE("doubled Green-Kubo") {
    const auto d = MapSystem::doubling();
    const auto iid = SelectionProcess::iid({2.0}, {1.0});
    const auto base = Ensemble::grid(256);
    const auto pairs = DoubledEnsemble::product(base);
    CHECK(pairs.size() == 256 * 256);
    const auto c = Observable::cos2pi();
    const auto gk = green_kubo_doubled(d, iid, c, pairs, 3, 2, kOpts);
    CHECK(gk.estimate.per_k_terms[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(gk.estimate.sigma_sq == doctest::Approx(0.5).epsilon(1e-6));
    for (const auto& m : gk.f_means) CHECK(m.pass);
    const auto swapped = green_kubo_doubled(d, iid, c, pairs.swapped(), 3, 2, kOpts);
    CHECK(swapped.estimate.sigma_sq == doctest::Approx(gk.estimate.sigma_sq).epsilon(1e-14));
    CHECK(green_kubo_doubled(d, iid, Observable::constant(1.0), pairs, 3, 2, kOpts).estimate.sigma_sq == 0.0);

    const auto coupled = DoubledEnsemble::coupled(Ensemble::grid(4096), 20000, 5);
    CHECK_FALSE(coupled.is_product());
    const auto est = green_kubo_doubled(d, iid, c, coupled, 3, 2, kOpts).estimate;
    CHECK(est.standard_error > 0.0);
    CHECK(std::abs(est.sigma_sq - 0.5) < 4.0 * est.standard_error);
}

TEST_CASE("Z_n identity") {
    const auto d = MapSystem::doubling();
    const auto base = Ensemble::grid(512);
    const auto pairs = DoubledEnsemble::product(base);
    const auto c = Observable::cos2pi();
    const OmegaSequence w{std::vector<double>(8, 2.0), {}};
    CHECK(z_variance(d, w, c, pairs, 1) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(z_variance(d, w, Observable::constant(2.0), pairs, 4) == 0.0);
    const auto b = MapSystem::beta();
    const OmegaSequence wb{{2.5, 3.0, 2.5, 2.5, 3.0}, {}};
    for (std::size_t n : {1, 2, 4})
        CHECK(std::abs(z_variance(b, wb, c, pairs, n) - 2.0 * n * quenched_variance(b, wb, c, base, n)) < 1e-9);
    CHECK_THROWS_AS(z_variance(d, w, c, DoubledEnsemble::coupled(base, 100, 1), 1), ContractError);
}

TEST_CASE("classical Green-Kubo split") {
    const auto b = MapSystem::beta();
    const auto integer = SelectionProcess::iid({2.0, 3.0}, {0.5, 0.5});
    const auto c = Observable::cos2pi();
    const auto grid = Ensemble::grid(1u << 20);
    const auto sp = classical_green_kubo_split(b, integer, c, grid, 4, 4, kOpts);
    CHECK(std::abs(sp.centering.sigma_sq) < 1e-6);
    CHECK(std::abs(sp.classical.sigma_sq - 0.5) < 0.02);
    const auto one = SelectionProcess::constant(2.5);
    CHECK(classical_green_kubo_split(b, one, c, grid, 3, 3, kOpts).centering.sigma_sq == 0.0);
    const auto ams = SelectionProcess::ams_markov({2.0, 3.0}, (Eigen::MatrixXd(2, 2) << 0.5, 0.5, 0.5, 0.5).finished(),
                                                  {1.0, 0.0});
    CHECK_THROWS_AS(classical_green_kubo_split(b, ams, c, grid, 3, 3, kOpts), UnsupportedError);
}

TEST_CASE("positivity verdicts") {
    const auto d = MapSystem::doubling();
    const auto iid = SelectionProcess::iid({2.0}, {1.0});
    const auto grid = Ensemble::grid(1u << 18);
    const std::vector<std::size_t> ns{2, 4, 8, 16};
    const auto cos_growth = growth_data(d, iid, Observable::cos2pi(), grid, ns, kOpts);
    const auto pos = positivity_check(cos_growth, 3.0);
    CHECK(pos.verdict == "positive");
    CHECK(pos.exponent == doctest::Approx(1.0).epsilon(0.1));
    CHECK(pos.c == doctest::Approx(0.5).epsilon(0.02));
    const auto flat = growth_data(d, iid, Observable::constant(1.0), grid, ns, kOpts);
    CHECK(positivity_check(flat, 3.0).verdict == "degenerate");
    const auto cob = Observable::coboundary(Observable::cos2pi(), d, 2.0);
    CHECK(positivity_check(growth_data(d, iid, cob, grid, ns, kOpts), 3.0).verdict == "degenerate");
    const std::vector<GrowthPoint> few(cos_growth.begin(), cos_growth.begin() + 3);
    CHECK_THROWS_AS(positivity_check(few, 3.0), DataError);
}

TEST_CASE("past pushforward") {
    const auto b = MapSystem::beta();
    const auto grid = Ensemble::grid(1u << 14);
    const std::vector<double> integer{2.0, 3.0, 2.0, 3.0};
    const auto u = past_pushforward(b, integer, grid, 4);
    CHECK(uniform_cdf_deviation(u.result) <= 2.0 / grid.size());
    CHECK(cdf_distance(past_pushforward(b, integer, grid, 0).result, grid) == 0.0);
    const std::vector<double> frac{2.5, 3.0, 2.5, 2.5, 3.0, 2.5, 3.0, 2.5};
    const auto p = past_pushforward(b, frac, grid, 8);
    CHECK(p.consecutive_distances.size() == 8);
    CHECK(p.consecutive_distances.back() < p.consecutive_distances.front());
}
