#pragma once

#include "qclt/bounds.hpp"
#include "qclt/map_core.hpp"
#include "qclt/numeric.hpp"
#include "qclt/selection.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qclt {

/// Walks an ensemble along a fixed omega, producing f_i = f o phi(i, omega)
/// for i = 0, 1, ... one layer at a time.
class TrajectoryWalker {
public:
    TrajectoryWalker(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                     const Ensemble& ensemble, std::size_t alpha = 0);

    /// Index of the layer the next call to next() returns.
    std::size_t index() const noexcept { return index_; }
    /// Values of f_i at every point, then advances the points by omega_{i+1}.
    std::span<const double> next();
    std::span<const Point> points() const noexcept { return points_; }

private:
    const MapSystem& system_;
    const OmegaSequence& omega_;
    const Observable& f_;
    std::size_t alpha_;
    std::vector<Point> points_;
    std::vector<double> values_;
    std::size_t index_ = 0;
};

/// Largest iterate index touched by a horizon-n statistic, checked against
/// the grid precision cap of the ensemble. Also checks the omega length.
void check_horizon(const MapSystem& system, const OmegaSequence& omega, const Ensemble& ensemble,
                   std::size_t last_iterate, std::size_t letters_needed);

/// sums[m][p] = S_m at ensemble point p, for m = 0..n.
std::vector<std::vector<double>> birkhoff_sums(const MapSystem& system, const OmegaSequence& omega,
                                               const Observable& f, const Ensemble& ensemble, std::size_t n);

/// mu(f_i f_j) - mu(f_i) mu(f_j) against the discrete ensemble measure.
double fiber_correlation(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                         const Ensemble& ensemble, std::size_t i, std::size_t j);

/// table(i, j) = mu(fbar_i fbar_j) for 0 <= i, j < n. Symmetric exactly.
std::vector<std::vector<double>> correlation_table(const MapSystem& system, const OmegaSequence& omega,
                                                   const Observable& f, const Ensemble& ensemble, std::size_t n);

/// (1/n) sum_{i,j<n} table(i, j).
double sigma_sq_from_correlations(const std::vector<std::vector<double>>& table, std::size_t n);

/// Var_mu(S_n / sqrt n), computed directly from the sums.
double quenched_variance(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                         const Ensemble& ensemble, std::size_t n);

/// sigma_n^2 at every n of an increasing schedule, in one pass.
std::vector<double> quenched_variance_schedule(const MapSystem& system, const OmegaSequence& omega,
                                               const Observable& f, const Ensemble& ensemble,
                                               std::span<const std::size_t> ns);

/// mu(fbar_i fbar_{i+k}) for k = 0..K.
std::vector<double> lag_correlations(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                                     const Ensemble& ensemble, std::size_t i, std::size_t K);

struct TruncatedV {
    double value = 0.0;
    std::vector<double> terms;          ///< (2 - delta_k0) mu(fbar_i fbar_{i+k})
    std::optional<double> tail_bound;   ///< 2 sum_{k>K} eta(k), when a model is given
    std::vector<std::size_t> flagged;   ///< lags k with |mu(fbar_i fbar_{i+k})| > eta(k)
};

TruncatedV v_truncated(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                       const Ensemble& ensemble, std::size_t i, std::size_t K,
                       std::optional<PowerLaw> eta = std::nullopt);

/// 2 sum_{k>K} eta(k), summed until terms are negligible with an integral tail.
double eta_tail(const PowerLaw& eta, std::size_t K);

struct MonteCarloOptions {
    std::size_t realizations = 20;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

struct MeanQuenchedVariance {
    double mean = 0.0;
    double standard_error = 0.0;     ///< NaN when fewer than 2 realizations
    bool standard_error_defined = false;
    std::vector<double> values;      ///< sigma_n^2 per realization
    double spread_median = 0.0;      ///< quantiles of |sigma_n^2 - mean|
    double spread_q90 = 0.0;
    double spread_max = 0.0;
};

MeanQuenchedVariance mean_quenched_variance(const MapSystem& system, const SelectionProcess& process,
                                            const Observable& f, const Ensemble& ensemble, std::size_t n,
                                            const MonteCarloOptions& options);

struct VarianceIdentity {
    double total = 0.0;        ///< Var_{P x mu} W_n
    double centering = 0.0;    ///< Var_P mu(W_n)
    double mean_sigma = 0.0;   ///< E sigma_n^2
    double residual = 0.0;     ///< |total - centering - mean_sigma|
};

VarianceIdentity variance_identity_report(const MapSystem& system, const SelectionProcess& process,
                                          const Observable& f, const Ensemble& ensemble, std::size_t n,
                                          const MonteCarloOptions& options);

struct FluctuationRow {
    std::size_t n = 0;
    double mean_sigma = 0.0;   ///< E-hat sigma_n^2
    double median = 0.0;       ///< of |sigma_n^2 - E-hat sigma_n^2|
    double q10 = 0.0;
    double q90 = 0.0;
};

struct FluctuationDecay {
    std::vector<FluctuationRow> rows;
    std::vector<std::vector<double>> sigma;  ///< sigma[r][s]: realization r, schedule point s
    bool identically_zero = false;
    std::optional<LinearFit> fit;             ///< log median vs log n
};

/// Throws DataError for fewer than 3 schedule points.
FluctuationDecay fluctuation_decay(const MapSystem& system, const SelectionProcess& process, const Observable& f,
                                   const Ensemble& ensemble, std::span<const std::size_t> ns,
                                   const MonteCarloOptions& options);

struct CorrelationDecayFit {
    std::vector<double> envelope;  ///< non-increasing envelope of |c_k|
    double constant = 0.0;         ///< |c_k| <= constant * rate^k on the fit window
    double rate = 0.0;
    std::size_t fit_points = 0;
    PowerLaw eta;                  ///< polynomial form with the most conservative psi
};

/// Fits |c_k| <= C lambda^k on the lags where the envelope exceeds `floor`,
/// then converts to C k^-psi over k = 2..K.
CorrelationDecayFit fit_correlation_decay(std::span<const double> correlations, double floor = 1e-12);

}  // namespace qclt
