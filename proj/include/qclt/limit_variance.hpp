#pragma once

#include "qclt/bounds.hpp"
#include "qclt/map_core.hpp"
#include "qclt/quenched_stats.hpp"
#include "qclt/selection.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qclt {

struct LimitVarianceEstimate {
    std::string route;                 ///< vk-series | doubled-green-kubo | classical-gk-split
    double sigma_sq = 0.0;
    double standard_error = 0.0;
    std::vector<double> per_k_terms;
    std::vector<double> per_k_se;
    std::size_t truncation_K = 0;
    std::size_t burn_in = 0;
    std::optional<double> tail_bound;  ///< 2 sum_{k>K} eta(k)
    double half_burn_in_value = 0.0;   ///< same estimate with burn-in halved
    std::vector<std::size_t> eta_violations;  ///< k with |term_k| > 2 eta(k) + 3 se_k
};

struct VkEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    double half_burn_in_value = 0.0;
};

/// V_k for k = 0..K at burn-in i, averaged over driving realizations; each
/// term carries its standard error and its value at burn-in i/2.
LimitVarianceEstimate estimate_vk_terms(const MapSystem& system, const SelectionProcess& process,
                                        const Observable& f, const Ensemble& ensemble, std::size_t K,
                                        std::size_t burn_in, const MonteCarloOptions& options,
                                        std::optional<PowerLaw> eta = std::nullopt);

VkEstimate estimate_vk(const MapSystem& system, const SelectionProcess& process, const Observable& f,
                       const Ensemble& ensemble, std::size_t k, std::size_t burn_in, const MonteCarloOptions& options);

/// K = max(1, round(expr)) with expr n^{1/psi} (zeta > 1), (n / log n)^{1/psi}
/// (zeta = 1) or n^{zeta/psi} (zeta < 1), capped at n.
std::size_t choose_truncation_K(std::size_t n, double psi, double zeta);

/// sum_{k<=K} V_k with K from choose_truncation_K and burn-in 2K by default.
LimitVarianceEstimate sigma_sq_series(const MapSystem& system, const SelectionProcess& process, const Observable& f,
                                      const Ensemble& ensemble, std::size_t n_for_K, double psi, double zeta,
                                      const MonteCarloOptions& options, std::optional<PowerLaw> eta = std::nullopt,
                                      std::optional<std::size_t> burn_in = std::nullopt);

/// Pairs (x, y) carried under the same maps. A product ensemble holds every
/// pair of a base ensemble; a coupled ensemble holds independent draws.
class DoubledEnsemble {
public:
    /// All m^2 pairs of the base ensemble with product weights. Throws
    /// ContractError when m^2 exceeds 2^26.
    static DoubledEnsemble product(const Ensemble& base);
    /// `pairs` independent pairs, each coordinate drawn from the base law.
    static DoubledEnsemble coupled(const Ensemble& base, std::size_t pairs, std::uint64_t seed);

    bool is_product() const noexcept { return product_; }
    std::size_t size() const noexcept { return first_.size(); }
    /// The distinct points that the pairs refer to.
    const Ensemble& nodes() const noexcept { return nodes_; }
    std::span<const std::size_t> first() const noexcept { return first_; }
    std::span<const std::size_t> second() const noexcept { return second_; }
    std::span<const double> weights() const noexcept { return weights_; }
    /// The same pairs with coordinates exchanged.
    DoubledEnsemble swapped() const;

private:
    DoubledEnsemble(Ensemble nodes) : nodes_(std::move(nodes)) {}

    Ensemble nodes_;
    std::vector<std::size_t> first_, second_;
    std::vector<double> weights_;
    bool product_ = false;
};

struct FMeanCheck {
    std::size_t depth = 0;
    double mean = 0.0;
    double standard_error = 0.0;
    bool pass = false;  ///< |mean| <= 3 se + 1e-12
};

struct DoubledGreenKubo {
    LimitVarianceEstimate estimate;
    std::vector<FMeanCheck> f_means;  ///< integral of F at burn-in depths 0..burn_in
};

/// One half of sum_k (2 - delta_k0) int F . F o Phi2^k, with F(x, y) = f(x) - f(y)
/// after `burn_in` steps of the doubled skew product.
DoubledGreenKubo green_kubo_doubled(const MapSystem& system, const SelectionProcess& process, const Observable& f,
                                    const DoubledEnsemble& pairs, std::size_t K, std::size_t burn_in,
                                    const MonteCarloOptions& options, std::optional<PowerLaw> eta = std::nullopt);

/// int Z_n^2 d(mu x mu) with Z_n = S_n(x) - S_n(y). Throws ContractError
/// unless the pairs form a product ensemble.
double z_variance(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                  const DoubledEnsemble& pairs, std::size_t n);

struct SplitEstimate {
    LimitVarianceEstimate classical;   ///< lim Var_{P x mu} W_n
    LimitVarianceEstimate centering;   ///< lim Var_P mu(W_n)
    double difference = 0.0;
    double difference_se = 0.0;
};

/// Classical Green-Kubo series and centering series at burn-in `burn_in`.
/// Throws UnsupportedError for non-stationary processes.
SplitEstimate classical_green_kubo_split(const MapSystem& system, const SelectionProcess& process,
                                         const Observable& f, const Ensemble& ensemble, std::size_t K,
                                         std::size_t burn_in, const MonteCarloOptions& options);

struct GrowthPoint {
    std::size_t n = 0;
    double mean = 0.0;  ///< E Var_mu(S_n)
    double standard_error = 0.0;
};

std::vector<GrowthPoint> growth_data(const MapSystem& system, const SelectionProcess& process, const Observable& f,
                                     const Ensemble& ensemble, std::span<const std::size_t> ns,
                                     const MonteCarloOptions& options);

struct PositivityVerdict {
    std::string verdict;    ///< positive | degenerate | inconclusive
    double exponent = 0.0;  ///< fitted growth exponent (NaN when all variances vanish)
    double c = 0.0;         ///< least-squares slope of E Var(S_n) against n
    double c_se = 0.0;
    double max_variance = 0.0;
};

/// Throws DataError for fewer than 4 schedule points.
PositivityVerdict positivity_check(std::span<const GrowthPoint> growth, double psi, double slack = 0.1);

struct PastPushforward {
    Ensemble result;
    std::vector<double> consecutive_distances;  ///< entry m-1: distance between approximants m and m-1
};

/// Pushes the ensemble by the last n letters of `history` (oldest first).
PastPushforward past_pushforward(const MapSystem& system, std::span<const double> history, const Ensemble& ensemble,
                                 std::size_t n);

}  // namespace qclt
