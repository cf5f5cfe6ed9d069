#include "qclt/clt_harness.hpp"

#include "qclt/error.hpp"
#include "qclt/quenched_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qclt {

namespace {

double normal_kolmogorov(double a, double b) {
    if (a == b) return 0.0;
    if (a == 0.0 || b == 0.0) return 0.5;
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double x = std::sqrt(2.0 * std::log(hi / lo) * lo * lo * hi * hi / (hi * hi - lo * lo));
    return normal_cdf(x / lo) - normal_cdf(x / hi);
}

/// Sum of the centered Birkhoff sums divided by sqrt(n).
std::vector<double> centered_wbar(std::span<const double> sums, std::span<const double> weights, std::size_t n) {
    const double m = weighted_mean(sums, weights);
    const double root = std::sqrt(static_cast<double>(n));
    std::vector<double> w(sums.size());
    for (std::size_t p = 0; p < sums.size(); ++p) w[p] = (sums[p] - m) / root;
    return w;
}

}  // namespace

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values, std::vector<double> weights) {
    if (values.size() != weights.size()) throw DomainError("values and weights differ in length");
    if (values.empty()) throw DomainError("empirical distribution is empty");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
    CompensatedSum total;
    for (double w : weights) {
        if (!(w >= 0.0)) throw DomainError("negative weight");
        total.add(w);
    }
    values_.reserve(order.size());
    weights_.reserve(order.size());
    for (std::size_t k : order) {
        values_.push_back(values[k]);
        weights_.push_back(weights[k] / total.value());
    }
}

EmpiricalDistribution EmpiricalDistribution::unweighted(std::vector<double> values) {
    std::vector<double> w(values.size(), 1.0 / static_cast<double>(values.size()));
    return EmpiricalDistribution(std::move(values), std::move(w));
}

double EmpiricalDistribution::mean() const { return weighted_mean(values_, weights_); }

double EmpiricalDistribution::cdf(double x) const {
    const auto end = std::upper_bound(values_.begin(), values_.end(), x);
    CompensatedSum s;
    for (auto it = values_.begin(); it != end; ++it) s.add(weights_[static_cast<std::size_t>(it - values_.begin())]);
    return std::min(1.0, s.value());
}

EmpiricalDistribution wbar_distribution(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                                        const Ensemble& ensemble, std::size_t n) {
    if (n < 1) throw ContractError("n must be at least 1");
    const auto sums = birkhoff_sums(system, omega, f, ensemble, n);
    auto w = centered_wbar(sums[n], ensemble.weights(), n);
    return EmpiricalDistribution(std::move(w), std::vector<double>(ensemble.weights().begin(), ensemble.weights().end()));
}

double kolmogorov_distance(const EmpiricalDistribution& dist, double sigma) {
    if (!(sigma >= 0.0)) throw DomainError("sigma must be nonnegative");
    const auto x = dist.values();
    const auto w = dist.weights();
    double before = 0.0, worst = 0.0;
    for (std::size_t k = 0; k < x.size();) {
        std::size_t end = k;
        double mass = 0.0;
        while (end < x.size() && x[end] == x[k]) mass += w[end++];
        const double after = std::min(1.0, before + mass);
        double g = 0.0, g_left = 0.0;
        if (sigma == 0.0) {
            g = x[k] >= 0.0 ? 1.0 : 0.0;
            g_left = x[k] > 0.0 ? 1.0 : 0.0;
        } else {
            g = g_left = normal_cdf(x[k] / sigma);
        }
        worst = std::max({worst, std::abs(after - g), std::abs(before - g_left)});
        before = after;
        k = end;
    }
    if (sigma == 0.0) {
        // Between sample points F is flat while the step of G sits at 0.
        const double f0 = dist.cdf(0.0);
        const auto first_nonneg = std::lower_bound(x.begin(), x.end(), 0.0);
        const double f0_left = first_nonneg == x.begin() ? 0.0 : dist.cdf(*(first_nonneg - 1));
        worst = std::max({worst, 1.0 - f0, f0_left});
    }
    return worst;
}

double kolmogorov_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
    std::vector<std::pair<double, double>> merged;
    for (std::size_t k = 0; k < a.size(); ++k) merged.emplace_back(a.values()[k], a.weights()[k]);
    for (std::size_t k = 0; k < b.size(); ++k) merged.emplace_back(b.values()[k], -b.weights()[k]);
    std::stable_sort(merged.begin(), merged.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    CompensatedSum diff;
    double worst = 0.0;
    for (std::size_t k = 0; k < merged.size(); ++k) {
        diff.add(merged[k].second);
        if (k + 1 == merged.size() || merged[k + 1].first != merged[k].first)
            worst = std::max(worst, std::abs(diff.value()));
    }
    return worst;
}

double wasserstein1(const EmpiricalDistribution& dist, double sigma) {
    if (!(sigma >= 0.0)) throw DomainError("sigma must be nonnegative");
    const auto x = dist.values();
    const auto w = dist.weights();
    CompensatedSum total;
    if (sigma == 0.0) {
        for (std::size_t k = 0; k < x.size(); ++k) total.add(w[k] * std::abs(x[k]));
        return total.value();
    }
    // integral of sigma * quantile over [u0, u1] is sigma (pdf(z0) - pdf(z1)).
    auto pdf_at = [](double u) {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        return normal_pdf(normal_quantile(u));
    };
    auto g_integral = [&](double u0, double u1) { return sigma * (pdf_at(u0) - pdf_at(u1)); };
    double lo = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double hi = k + 1 == x.size() ? 1.0 : std::min(1.0, lo + w[k]);
        const double cross = std::clamp(normal_cdf(x[k] / sigma), lo, hi);
        // below the crossing the normal quantile is smaller than x
        total.add(x[k] * (cross - lo) - g_integral(lo, cross));
        total.add(g_integral(cross, hi) - x[k] * (hi - cross));
        lo = hi;
    }
    return total.value();
}

ScaleDistance gaussian_scale_distance(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("Gaussian scales must be positive");
    ScaleDistance out;
    out.distance = normal_kolmogorov(a, b);
    out.lipschitz_ratio = a == b ? 0.0 : out.distance / std::abs(a - b);
    return out;
}

TriangleReport triangle_report(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                               const Ensemble& ensemble, std::span<const std::size_t> ns, double sigma_sq_estimate) {
    if (ns.empty()) throw ContractError("schedule is empty");
    for (std::size_t s = 1; s < ns.size(); ++s)
        if (ns[s] <= ns[s - 1]) throw ContractError("schedule must be strictly increasing");
    check_horizon(system, omega, ensemble, ns.back() - 1, ns.back());
    TriangleReport out;
    out.degenerate = !(sigma_sq_estimate > 0.0);
    const double sigma = out.degenerate ? 0.0 : std::sqrt(sigma_sq_estimate);
    const std::vector<double> weights(ensemble.weights().begin(), ensemble.weights().end());
    TrajectoryWalker walker(system, omega, f, ensemble);
    std::vector<double> sums(ensemble.size(), 0.0);
    std::vector<double> xs, ys;
    for (std::size_t m = 1, s = 0; s < ns.size(); ++m) {
        const auto layer = walker.next();
        for (std::size_t p = 0; p < sums.size(); ++p) sums[p] += layer[p];
        if (m != ns[s]) continue;
        ++s;
        EmpiricalDistribution dist(centered_wbar(sums, weights, m), weights);
        TriangleRow row;
        row.n = m;
        row.sigma = sigma;
        row.sigma_n = std::sqrt(weighted_variance(dist.values(), dist.weights()));
        row.d_fiber = kolmogorov_distance(dist, row.sigma_n);
        row.d_scale = normal_kolmogorov(row.sigma_n, sigma);
        row.d_total = kolmogorov_distance(dist, sigma);
        row.residual = row.d_fiber + row.d_scale - row.d_total;
        row.wasserstein = wasserstein1(dist, sigma);
        if (row.residual < -1e-12) out.triangle_holds = false;
        if (row.d_total > 0.0) {
            xs.push_back(std::log(static_cast<double>(m)));
            ys.push_back(std::log(row.d_total));
        }
        out.rows.push_back(row);
    }
    if (xs.size() >= 2) out.fit = linear_fit(xs, ys);
    return out;
}

namespace {

void finish_covariance(CovarianceEstimate& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c.matrix, Eigen::EigenvaluesOnly);
    c.min_eigenvalue = solver.eigenvalues().minCoeff();
    c.psd = c.min_eigenvalue >= -3.0 * c.standard_errors.maxCoeff() - 1e-12;
}

}  // namespace

CovarianceEstimate direct_covariance(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                                     const Ensemble& ensemble, std::size_t n) {
    if (n < 1) throw ContractError("n must be at least 1");
    const std::size_t d = f.dimension();
    std::vector<std::vector<double>> w(d);
    for (std::size_t a = 0; a < d; ++a) {
        const Observable fa = f.scalar(a);
        const auto sums = birkhoff_sums(system, omega, fa, ensemble, n);
        w[a] = centered_wbar(sums[n], ensemble.weights(), n);
    }
    const auto wt = ensemble.weights();
    CompensatedSum w2;
    for (double x : wt) w2.add(x * x);
    CovarianceEstimate c;
    const auto dd = static_cast<Eigen::Index>(d);
    c.matrix.resize(dd, dd);
    c.standard_errors.resize(dd, dd);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            CompensatedSum acc;
            for (std::size_t p = 0; p < wt.size(); ++p) acc.add(wt[p] * w[a][p] * w[b][p]);
            const double cov = acc.value();
            CompensatedSum dev;
            for (std::size_t p = 0; p < wt.size(); ++p) {
                const double z = w[a][p] * w[b][p] - cov;
                dev.add(wt[p] * z * z);
            }
            const double se = std::sqrt(std::max(0.0, dev.value()) * w2.value());
            const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
            c.matrix(ia, ib) = c.matrix(ib, ia) = cov;
            c.standard_errors(ia, ib) = c.standard_errors(ib, ia) = se;
        }
    finish_covariance(c);
    return c;
}

CovarianceEstimate covariance_by_polarization(const MapSystem& system, const OmegaSequence& omega,
                                              const Observable& f, const Ensemble& ensemble, std::size_t n) {
    const std::size_t d = f.dimension();
    auto ell = [&](std::size_t a, std::size_t b) {
        std::vector<double> v(d, 0.0);
        v[a] += 1.0;
        v[b] += 1.0;
        return quenched_variance(system, omega, f.project(v), ensemble, n);
    };
    std::vector<double> diag(d);
    for (std::size_t a = 0; a < d; ++a) {
        std::vector<double> v(d, 0.0);
        v[a] = 1.0;
        diag[a] = quenched_variance(system, omega, f.project(v), ensemble, n);
    }
    CovarianceEstimate c = direct_covariance(system, omega, f, ensemble, n);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            const double v = a == b ? diag[a] : 0.5 * (ell(a, b) - diag[a] - diag[b]);
            const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
            c.matrix(ia, ib) = c.matrix(ib, ia) = v;
        }
    finish_covariance(c);
    return c;
}

PolarizationRate polarization_rate_check(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                                         const Ensemble& ensemble, std::span<const std::size_t> ns,
                                         const Eigen::MatrixXd& limit) {
    const auto d = static_cast<Eigen::Index>(f.dimension());
    if (limit.rows() != d || limit.cols() != d) throw ContractError("limit matrix has the wrong size");
    if (ns.size() < 2) throw DataError("polarization rate check needs at least 2 schedule points");
    std::vector<double> logn, log_matrix;
    std::vector<std::vector<double>> pair_diffs(static_cast<std::size_t>(d * d));
    for (std::size_t n : ns) {
        const CovarianceEstimate c = direct_covariance(system, omega, f, ensemble, n);
        logn.push_back(std::log(static_cast<double>(n)));
        log_matrix.push_back(std::log((limit - c.matrix).cwiseAbs().maxCoeff()));
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = a; b < d; ++b) {
                Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
                v[a] += 1.0;
                v[b] += 1.0;
                const double diff = std::abs(v.dot(limit * v) - v.dot(c.matrix * v));
                pair_diffs[static_cast<std::size_t>(a * d + b)].push_back(diff);
            }
    }
    PolarizationRate out;
    out.matrix_exponent = -linear_fit(logn, log_matrix).slope;
    out.min_pair_exponent = std::numeric_limits<double>::infinity();
    for (const auto& diffs : pair_diffs) {
        if (diffs.empty() || *std::max_element(diffs.begin(), diffs.end()) <= 1e-12) continue;
        std::vector<double> ys;
        for (double v : diffs) ys.push_back(std::log(std::max(v, 1e-300)));
        out.min_pair_exponent = std::min(out.min_pair_exponent, -linear_fit(logn, ys).slope);
    }
    out.pass = std::abs(out.matrix_exponent - out.min_pair_exponent) <= 0.15;
    return out;
}

}  // namespace qclt
