#include <doctest.h>

#include "qclt/error.hpp"
#include "qclt/selection.hpp"

#include <cmath>
#include <map>

using namespace qclt;

namespace {

Eigen::MatrixXd two_state(double p, double q) {
    Eigen::MatrixXd P(2, 2);
    P << 1 - p, p, q, 1 - q;
    return P;
}

// Brute force alpha between single coordinates i and i+n of a two-state chain:
// max over the 16 event pairs (A, B) of subsets of {0,1}.
double brute_alpha(const SelectionProcess& proc, std::size_t i, std::size_t n) {
    const Eigen::VectorXd mu = proc.marginal(i);
    Eigen::MatrixXd Pn = Eigen::MatrixXd::Identity(2, 2);
    for (std::size_t k = 0; k < n; ++k) Pn = Pn * proc.transition();
    const Eigen::VectorXd nu = proc.marginal(i + n);
    double best = 0.0;
    for (int A = 0; A < 4; ++A)
        for (int B = 0; B < 4; ++B) {
            double pab = 0.0, pa = 0.0, pb = 0.0;
            for (int s = 0; s < 2; ++s) {
                if (A >> s & 1) pa += mu(s);
                if (B >> s & 1) pb += nu(s);
                for (int t = 0; t < 2; ++t)
                    if ((A >> s & 1) && (B >> t & 1)) pab += mu(s) * Pn(s, t);
            }
            best = std::max(best, std::abs(pab - pa * pb));
        }
    return best;
}

}  // namespace

TEST_CASE("sample_omega determinism and frequencies") {
    const auto iid = SelectionProcess::iid({2, 3}, {0.5, 0.5});
    const auto a = sample_omega(iid, 1000, 17, 4);
    const auto b = sample_omega(iid, 1000, 17, 4);
    CHECK(a.letters == b.letters);
    CHECK(a.letters != sample_omega(iid, 1000, 17, 5).letters);

    const auto big = sample_omega(iid, 1000000, 1, 0);
    double ones = 0;
    for (double v : big.letters) ones += v == 2.0;
    CHECK(std::abs(ones / 1e6 - 0.5) <= 0.002);
}

TEST_CASE("markov lag-1 autocorrelation") {
    const auto m = SelectionProcess::markov({2, 3}, two_state(0.1, 0.1));
    const auto w = sample_omega(m, 400000, 3, 0);
    double sx = 0, sxx = 0, sxy = 0;
    const std::size_t n = w.size() - 1;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = w.letters[k] == 2.0, y = w.letters[k + 1] == 2.0;
        sx += x;
        sxx += x * x;
        sxy += x * y;
    }
    const double mean = sx / n, var = sxx / n - mean * mean;
    CHECK((sxy / n - mean * mean) / var == doctest::Approx(0.8).epsilon(0.0125));
}

TEST_CASE("stationary law and eigenvalue") {
    const auto m = SelectionProcess::markov({2, 3}, two_state(0.3, 0.1));
    CHECK(m.stationary()(0) == doctest::Approx(0.25));
    CHECK(m.stationary()(1) == doctest::Approx(0.75));
    CHECK(m.second_eigenvalue_modulus() == doctest::Approx(0.6));
    CHECK(m.is_stationary());
    const std::vector<double> start{1, 0};
    const auto ams = SelectionProcess::ams_markov({2, 3}, two_state(0.3, 0.1), start);
    CHECK_FALSE(ams.is_stationary());
    Eigen::MatrixXd bad(2, 2);
    bad << 0.5, 0.6, 0.5, 0.5;
    CHECK_THROWS(SelectionProcess::markov({2, 3}, bad));
}

TEST_CASE("shift") {
    OmegaSequence w{{1, 2, 3}, {}};
    CHECK(shift(w, 0).letters == w.letters);
    CHECK(shift(w, 1).letters == std::vector<double>{2, 3});
    CHECK(shift(shift(w, 1), 1).letters == shift(w, 2).letters);
}

TEST_CASE("alpha estimation") {
    const auto iid = SelectionProcess::iid({2, 3}, {0.3, 0.7});
    for (std::size_t n = 1; n <= 5; ++n) CHECK(estimate_alpha(iid, n) == 0.0);

    const auto m = SelectionProcess::markov({2, 3}, two_state(0.1, 0.1));
    const double a1 = alpha_between(m, 1, 1, 2, 2);
    CHECK(a1 > 0.0);
    CHECK(a1 == doctest::Approx(brute_alpha(m, 1, 1)).epsilon(1e-14));
    CHECK(alpha_between(m, 3, 3, 7, 7) == doctest::Approx(brute_alpha(m, 3, 4)).epsilon(1e-14));
    double prev = 1.0;
    for (std::size_t n = 1; n <= 10; ++n) {
        const double a = estimate_alpha(m, n);
        CHECK(a <= prev + 1e-15);
        prev = a;
    }
    const auto prof = mixing_profile(m, 12);
    CHECK(prof.form == "exponential");
    CHECK(prof.log_rate == doctest::Approx(std::log(0.8)).epsilon(0.05 / std::abs(std::log(0.8))));
}

TEST_CASE("strong mixing inequality") {
    const auto iid = SelectionProcess::iid({2, 3}, {0.5, 0.5});
    const auto r = check_strong_mixing_inequality(iid, letter_indicator(1, 2), letter_indicator(3, 2), 2, 20000, 1);
    CHECK(r.exact == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.pass);
    const auto m = SelectionProcess::markov({2, 3}, two_state(0.2, 0.3));
    const auto g = check_strong_mixing_inequality(m, letter_indicator(1, 2), letter_indicator(2, 2), 1, 40000, 2);
    // Cov(1{w1=a}, 1{w2=a}) = pi_a (1 - pi_a) (1 - p - q).
    const double pa = 0.6;
    CHECK(g.exact == doctest::Approx(pa * (1 - pa) * 0.5).epsilon(1e-12));
    CHECK(std::abs(g.estimate - g.exact) <= 4 * g.standard_error);
    CHECK(g.pass);
    CHECK_THROWS_AS(check_strong_mixing_inequality(m, letter_indicator(3, 2), letter_indicator(2, 2), 1, 10, 1),
                    ContractError);
}

TEST_CASE("AMS averages") {
    const double p = 0.2, q = 0.3, lambda = 1 - p - q;
    const auto m = SelectionProcess::markov({2, 3}, two_state(p, q));
    const auto g = letter_indicator(1, 2);
    for (std::size_t n : {1, 5, 20}) CHECK(ams_average_weights(m, g, n).difference == 0.0);

    const std::vector<double> start{1, 0};
    const auto ams = SelectionProcess::ams_markov({2, 3}, two_state(p, q), start);
    CHECK(ams_average_weights(ams, g, 1).average == doctest::Approx(1.0));
    // P(w_{i+1} = a) - pi_a = (1 - pi_a) lambda^i, averaged over i < n.
    const double pi_a = q / (p + q);
    for (std::size_t n : {1, 2, 5, 10, 40}) {
        const double closed = (1 - pi_a) * (1 - std::pow(lambda, n)) / (n * (1 - lambda));
        CHECK(ams_average_weights(ams, g, n).difference == doctest::Approx(closed).epsilon(1e-10));
    }
    const std::vector<std::size_t> ns{16, 32, 64, 128};
    CHECK(fit_ams_zeta(ams, g, ns) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::isinf(fit_ams_zeta(m, g, ns)));
}
