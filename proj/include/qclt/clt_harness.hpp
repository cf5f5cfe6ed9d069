#pragma once

#include "qclt/map_core.hpp"
#include "qclt/numeric.hpp"
#include "qclt/selection.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace qclt {

/// Weighted sample sorted ascending.
class EmpiricalDistribution {
public:
    EmpiricalDistribution(std::vector<double> values, std::vector<double> weights);
    static EmpiricalDistribution unweighted(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return values_.size(); }
    double mean() const;
    /// Weighted CDF evaluated at x (right-continuous).
    double cdf(double x) const;

private:
    std::vector<double> values_;
    std::vector<double> weights_;
};

/// Law of Wbar_n = (S_n - mu(S_n)) / sqrt(n) over the ensemble.
EmpiricalDistribution wbar_distribution(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                                        const Ensemble& ensemble, std::size_t n);

/// sup_x |F(x) - Phi(x / sigma)|; sigma = 0 compares with the point mass at 0.
double kolmogorov_distance(const EmpiricalDistribution& dist, double sigma);
double kolmogorov_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

/// Wasserstein-1 distance to N(0, sigma^2) by quantile integration.
double wasserstein1(const EmpiricalDistribution& dist, double sigma);

struct ScaleDistance {
    double distance = 0.0;
    double lipschitz_ratio = 0.0;  ///< distance / |a - b|; 0 when a = b
};

/// Exact Kolmogorov distance between N(0, a^2) and N(0, b^2). Throws
/// DomainError for nonpositive scales.
ScaleDistance gaussian_scale_distance(double a, double b);

struct TriangleRow {
    std::size_t n = 0;
    double sigma_n = 0.0;
    double sigma = 0.0;
    double d_fiber = 0.0;   ///< d(Wbar_n, sigma_n Z)
    double d_scale = 0.0;   ///< d(sigma_n Z, sigma Z)
    double d_total = 0.0;   ///< d(Wbar_n, sigma Z)
    double residual = 0.0;  ///< d_fiber + d_scale - d_total
    double wasserstein = 0.0;  ///< W1(Wbar_n, sigma Z)
};

struct TriangleReport {
    std::vector<TriangleRow> rows;
    bool degenerate = false;        ///< sigma estimate not positive
    bool triangle_holds = true;     ///< every residual >= -1e-12
    std::optional<LinearFit> fit;   ///< log d_total against log n
};

TriangleReport triangle_report(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                               const Ensemble& ensemble, std::span<const std::size_t> ns, double sigma_sq_estimate);

struct CovarianceEstimate {
    Eigen::MatrixXd matrix;
    Eigen::MatrixXd standard_errors;
    double min_eigenvalue = 0.0;
    bool psd = false;  ///< min eigenvalue >= -3 max se
};

/// Direct ensemble covariance of the vector Wbar_n.
CovarianceEstimate direct_covariance(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                                     const Ensemble& ensemble, std::size_t n);

/// Entries 1/2 (l(e_a + e_b) - l(e_a) - l(e_b)) from scalar quenched variances.
CovarianceEstimate covariance_by_polarization(const MapSystem& system, const OmegaSequence& omega,
                                              const Observable& f, const Ensemble& ensemble, std::size_t n);

struct PolarizationRate {
    double matrix_exponent = 0.0;    ///< kappa in max |sigma^2 - sigma_n^2| ~ n^-kappa
    double min_pair_exponent = 0.0;  ///< slowest kappa among |l - l_n|(e_a + e_b)
    bool pass = false;               ///< exponents agree within 0.15
};

/// Pairs whose differences vanish at every n converge faster than any power and are skipped.
PolarizationRate polarization_rate_check(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                                         const Ensemble& ensemble, std::span<const std::size_t> ns,
                                         const Eigen::MatrixXd& limit);

}  // namespace qclt
