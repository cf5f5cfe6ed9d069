#pragma once

#include "qclt/bounds.hpp"
#include "qclt/numeric.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace qclt {

/// n^power log^log_power n.
struct RateSpec {
    double power = 0.0;
    double log_power = 0.0;
    std::string description;

    static RateSpec make(double power, double log_power);
    double evaluate(double n) const;
};

/// a dominates b when a decays more slowly: larger power, then larger log power.
bool dominates(const RateSpec& a, const RateSpec& b) noexcept;

/// Canonical text such as "n^{-1/2} log^{1.6} n".
std::string describe_rate(double power, double log_power);
std::string format_exponent(double x);

double h_zeta(double zeta, double n);
RateSpec gal_koksma_rate(double beta, double delta);
RateSpec variance_mean_gap_rate(double psi);
/// Value of the gap rate at n; the constant is taken as 1 (unnormalized).
double variance_mean_gap_bound(double psi, double n);
RateSpec fluctuation_rate(double psi, double gamma, double delta);
RateSpec mean_convergence_rate(double psi, double zeta);
RateSpec main_rate(double psi, double gamma, double zeta, double delta);

double S_sum(std::size_t i, std::size_t k, const BoundModel& model);
/// S(0, m) for every m in `ms`, sharing one table of inner sums.
std::vector<double> S_sum_profile(std::span<const std::size_t> ms, const BoundModel& model);

struct SandwichRow {
    std::size_t m = 0;
    double s = 0.0;
    double lower = 0.0;  ///< m eta(m) + alpha(m)
    double upper = 0.0;  ///< m eta(m/4) + alpha(m/4)
};

struct SandwichAudit {
    std::vector<SandwichRow> rows;
    double expected_slope = 0.0;   ///< -min(psi - 1, gamma)
    LinearFit fit;                 ///< log S against log m over the whole range
    double tail_slope = 0.0;       ///< slope over the upper half of the range
    bool slope_pass = false;       ///< |fit.slope - expected| <= 0.1
    double c1 = 0.0;               ///< min S / lower
    double c2 = 0.0;               ///< max S / upper
    double printed_c1 = 0.0;       ///< eta(0)^2 / 2 + eta(0) / 2
    bool printed_c1_holds = false;
    bool pass() const noexcept { return slope_pass && printed_c1_holds; }
};

/// Throws DataError for fewer than 8 values of m.
SandwichAudit sandwich_audit(const BoundModel& model, std::span<const std::size_t> ms);

struct RateFit {
    double slope = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double slope_se = 0.0;
    std::size_t points = 0;
};

/// log-log least squares. Throws DataError for fewer than 3 points or
/// nonpositive values.
RateFit fit_rate(std::span<const double> n, std::span<const double> values);

struct GoldenRow {
    std::string function;
    std::vector<double> args;
    std::string expected;
};

std::vector<GoldenRow> load_golden_table(const std::string& path);

struct GoldenResult {
    GoldenRow row;
    std::string actual;
    bool pass = false;
};

GoldenResult check_golden_row(const GoldenRow& row);

/// Location of the shipped golden table.
std::string default_golden_path();

}  // namespace qclt
