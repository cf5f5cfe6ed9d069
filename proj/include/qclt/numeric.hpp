#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qclt {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        double t = sum_ + x;
        if ((sum_ >= 0 ? sum_ : -sum_) >= (x >= 0 ? x : -x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Weighted mean computed relative to the first value, so a constant input
/// returns that constant bit-for-bit.
double weighted_mean(std::span<const double> values, std::span<const double> weights);

/// Weighted (population) variance, two-pass.
double weighted_variance(std::span<const double> values, std::span<const double> weights);

/// Running mean and covariance over equally weighted observations (Welford).
/// Identical inputs give an exact mean and exactly zero spread.
class RunningMoments {
public:
    void add(double x) noexcept;
    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    /// Population variance (divides by n).
    double variance() const noexcept;
    /// Sample variance (divides by n - 1); NaN for n < 2.
    double sample_variance() const noexcept;
    /// Standard error of the mean; NaN for n < 2.
    double standard_error() const noexcept;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

class RunningCovariance {
public:
    void add(double x, double y) noexcept;
    std::size_t count() const noexcept { return n_; }
    double mean_x() const noexcept { return mx_; }
    double mean_y() const noexcept { return my_; }
    /// Population covariance (divides by n).
    double covariance() const noexcept { return n_ ? cxy_ / static_cast<double>(n_) : 0.0; }

private:
    std::size_t n_ = 0;
    double mx_ = 0.0, my_ = 0.0, cxy_ = 0.0;
};

/// Linear-interpolation quantile (type 7). `values` need not be sorted.
double quantile(std::vector<double> values, double p);

double median(std::vector<double> values);

/// Ordinary least squares y = intercept + slope * x.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double ci_low = 0.0;   ///< 95% confidence interval for the slope
    double ci_high = 0.0;
    std::size_t points = 0;
};

/// Throws DataError for fewer than 2 points or constant x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Two-sided 95% Student-t critical value with `dof` degrees of freedom.
double t_critical_95(std::size_t dof);

/// Standard normal CDF and quantile.
double normal_cdf(double z);
double normal_quantile(double p);
double normal_pdf(double z);

}  // namespace qclt
