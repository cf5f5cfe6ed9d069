#include "qclt/numeric.hpp"

#include "qclt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace qclt {

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
    if (values.empty()) return 0.0;
    const double shift = values[0];
    CompensatedSum acc;
    CompensatedSum wsum;
    for (std::size_t k = 0; k < values.size(); ++k) {
        acc.add(weights[k] * (values[k] - shift));
        wsum.add(weights[k]);
    }
    return shift + acc.value() / wsum.value();
}

double weighted_variance(std::span<const double> values, std::span<const double> weights) {
    if (values.empty()) return 0.0;
    const double m = weighted_mean(values, weights);
    CompensatedSum acc;
    CompensatedSum wsum;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double d = values[k] - m;
        acc.add(weights[k] * d * d);
        wsum.add(weights[k]);
    }
    return acc.value() / wsum.value();
}

void RunningMoments::add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

double RunningMoments::variance() const noexcept {
    return n_ ? m2_ / static_cast<double>(n_) : 0.0;
}

double RunningMoments::sample_variance() const noexcept {
    if (n_ < 2) return std::numeric_limits<double>::quiet_NaN();
    return m2_ / static_cast<double>(n_ - 1);
}

double RunningMoments::standard_error() const noexcept {
    if (n_ < 2) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(sample_variance() / static_cast<double>(n_));
}

void RunningCovariance::add(double x, double y) noexcept {
    ++n_;
    const double n = static_cast<double>(n_);
    const double dx = x - mx_;
    mx_ += dx / n;
    my_ += (y - my_) / n;
    cxy_ += dx * (y - my_);
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw DataError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("linear_fit: x and y differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw DataError("linear_fit: need at least 2 points");
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    if (sxx <= 0) throw DataError("linear_fit: abscissae are all equal");
    LinearFit fit;
    fit.points = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double rss = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const double r = y[k] - fit.intercept - fit.slope * x[k];
            rss += r * r;
        }
        fit.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
        const double t = t_critical_95(n - 2);
        fit.ci_low = fit.slope - t * fit.slope_se;
        fit.ci_high = fit.slope + t * fit.slope_se;
    } else {
        fit.slope_se = std::numeric_limits<double>::infinity();
        fit.ci_low = -std::numeric_limits<double>::infinity();
        fit.ci_high = std::numeric_limits<double>::infinity();
    }
    return fit;
}

double t_critical_95(std::size_t dof) {
    if (dof == 0) return std::numeric_limits<double>::infinity();
    boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(boost::math::complement(dist, 0.025));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

}  // namespace qclt
