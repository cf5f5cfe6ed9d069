#include "qclt/limit_variance.hpp"

#include "qclt/error.hpp"
#include "qclt/numeric.hpp"
#include "qclt/parallel.hpp"
#include "qclt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qclt {

namespace {

constexpr double kEqualityTolerance = 1e-12;
constexpr std::size_t kMaxProductPairs = std::size_t{1} << 26;

double weight_of_lag(std::size_t k) { return k == 0 ? 1.0 : 2.0; }

void require_realizations(const MonteCarloOptions& options) {
    if (options.realizations < 1) throw ContractError("at least one realization is required");
}

std::size_t omega_length(std::size_t horizon) { return std::max<std::size_t>(1, horizon); }

/// Column means, standard errors and per-row totals of a realization x term table.
void summarize_terms(const std::vector<std::vector<double>>& table, LimitVarianceEstimate& out) {
    const std::size_t terms = table.front().size();
    out.per_k_terms.assign(terms, 0.0);
    out.per_k_se.assign(terms, 0.0);
    RunningMoments total;
    for (const auto& row : table) {
        CompensatedSum s;
        for (double v : row) s.add(v);
        total.add(s.value());
    }
    CompensatedSum sum;
    for (std::size_t k = 0; k < terms; ++k) {
        RunningMoments m;
        for (const auto& row : table) m.add(row[k]);
        out.per_k_terms[k] = m.mean();
        out.per_k_se[k] = m.standard_error();
        sum.add(m.mean());
    }
    out.sigma_sq = sum.value();
    out.standard_error = total.standard_error();
}

double total_of_means(const std::vector<std::vector<double>>& table) {
    CompensatedSum sum;
    for (std::size_t k = 0; k < table.front().size(); ++k) {
        RunningMoments m;
        for (const auto& row : table) m.add(row[k]);
        sum.add(m.mean());
    }
    return sum.value();
}

}  // namespace

LimitVarianceEstimate estimate_vk_terms(const MapSystem& system, const SelectionProcess& process,
                                        const Observable& f, const Ensemble& ensemble, std::size_t K,
                                        std::size_t burn_in, const MonteCarloOptions& options,
                                        std::optional<PowerLaw> eta) {
    require_realizations(options);
    const std::size_t R = options.realizations;
    std::vector<std::vector<double>> full(R), half(R);
    parallel_for(R, options.workers, [&](std::size_t r) {
        const OmegaSequence omega = sample_omega(process, omega_length(burn_in + K), options.seed, r);
        auto c = lag_correlations(system, omega, f, ensemble, burn_in, K);
        auto h = lag_correlations(system, omega, f, ensemble, burn_in / 2, K);
        for (std::size_t k = 0; k <= K; ++k) {
            c[k] *= weight_of_lag(k);
            h[k] *= weight_of_lag(k);
        }
        full[r] = std::move(c);
        half[r] = std::move(h);
    });
    LimitVarianceEstimate out;
    out.route = "vk-series";
    out.truncation_K = K;
    out.burn_in = burn_in;
    summarize_terms(full, out);
    out.half_burn_in_value = total_of_means(half);
    if (eta) out.tail_bound = eta_tail(*eta, K);
    if (eta) {
        for (std::size_t k = 0; k <= K; ++k) {
            const double se = std::isfinite(out.per_k_se[k]) ? out.per_k_se[k] : 0.0;
            if (std::abs(out.per_k_terms[k]) > 2.0 * eta->at(k) + 3.0 * se) out.eta_violations.push_back(k);
        }
    }
    return out;
}

VkEstimate estimate_vk(const MapSystem& system, const SelectionProcess& process, const Observable& f,
                       const Ensemble& ensemble, std::size_t k, std::size_t burn_in, const MonteCarloOptions& options) {
    const auto all = estimate_vk_terms(system, process, f, ensemble, k, burn_in, options);
    require_realizations(options);
    // Re-derive the half-depth value of the single term from a dedicated pass.
    const std::size_t R = options.realizations;
    std::vector<double> half(R);
    parallel_for(R, options.workers, [&](std::size_t r) {
        const OmegaSequence omega = sample_omega(process, omega_length(burn_in + k), options.seed, r);
        half[r] = weight_of_lag(k) * lag_correlations(system, omega, f, ensemble, burn_in / 2, k)[k];
    });
    RunningMoments m;
    for (double v : half) m.add(v);
    return {all.per_k_terms[k], all.per_k_se[k], m.mean()};
}

std::size_t choose_truncation_K(std::size_t n, double psi, double zeta) {
    if (n < 2) throw ParameterError("truncation needs n >= 2");
    if (!(psi > 1.0)) throw ParameterError("truncation needs psi > 1");
    if (!(zeta > 0.0)) throw ParameterError("truncation needs zeta > 0");
    const double nn = static_cast<double>(n);
    double expr = 0.0;
    if (std::abs(zeta - 1.0) <= kEqualityTolerance)
        expr = std::pow(nn / std::log(nn), 1.0 / psi);
    else if (zeta > 1.0)
        expr = std::pow(nn, 1.0 / psi);
    else
        expr = std::pow(nn, zeta / psi);
    const auto K = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(expr)));
    return std::min(K, n);
}

LimitVarianceEstimate sigma_sq_series(const MapSystem& system, const SelectionProcess& process, const Observable& f,
                                      const Ensemble& ensemble, std::size_t n_for_K, double psi, double zeta,
                                      const MonteCarloOptions& options, std::optional<PowerLaw> eta,
                                      std::optional<std::size_t> burn_in) {
    const std::size_t K = choose_truncation_K(n_for_K, psi, zeta);
    return estimate_vk_terms(system, process, f, ensemble, K, burn_in.value_or(2 * K), options, eta);
}

DoubledEnsemble DoubledEnsemble::product(const Ensemble& base) {
    const std::size_t m = base.size();
    if (m > kMaxProductPairs / m)
        throw ContractError("product ensemble of " + std::to_string(m) + " points is too large");
    DoubledEnsemble d(base);
    d.product_ = true;
    d.first_.reserve(m * m);
    d.second_.reserve(m * m);
    d.weights_.reserve(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            d.first_.push_back(i);
            d.second_.push_back(j);
            d.weights_.push_back(base.weights()[i] * base.weights()[j]);
        }
    return d;
}

DoubledEnsemble DoubledEnsemble::coupled(const Ensemble& base, std::size_t pairs, std::uint64_t seed) {
    if (pairs < 1) throw ContractError("coupled ensemble needs at least one pair");
    std::vector<double> cumulative(base.size());
    CompensatedSum acc;
    for (std::size_t k = 0; k < base.size(); ++k) {
        acc.add(base.weights()[k]);
        cumulative[k] = acc.value();
    }
    const CounterRng rng(seed, Stream::pairs, 0);
    auto pick = [&](std::uint64_t counter) {
        const double u = rng.uniform(counter) * cumulative.back();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), base.size() - 1);
    };
    DoubledEnsemble d(base);
    d.first_.resize(pairs);
    d.second_.resize(pairs);
    d.weights_.assign(pairs, 1.0 / static_cast<double>(pairs));
    for (std::size_t j = 0; j < pairs; ++j) {
        d.first_[j] = pick(2 * j);
        d.second_[j] = pick(2 * j + 1);
    }
    return d;
}

DoubledEnsemble DoubledEnsemble::swapped() const {
    DoubledEnsemble d = *this;
    std::swap(d.first_, d.second_);
    return d;
}

DoubledGreenKubo green_kubo_doubled(const MapSystem& system, const SelectionProcess& process, const Observable& f,
                                    const DoubledEnsemble& pairs, std::size_t K, std::size_t burn_in,
                                    const MonteCarloOptions& options, std::optional<PowerLaw> eta) {
    require_realizations(options);
    const std::size_t R = options.realizations;
    const std::size_t half_depth = burn_in / 2;
    const auto a = pairs.first();
    const auto b = pairs.second();
    const auto w = pairs.weights();
    const bool sampled = !pairs.is_product();
    // Sampled pairs add a pair-sampling error on top of the spread over realizations.
    std::vector<std::vector<double>> full(R), half(R), fmeans(R), fspread(R), per_pair(R);
    parallel_for(R, options.workers, [&](std::size_t r) {
        const OmegaSequence omega = sample_omega(process, omega_length(burn_in + K), options.seed, r);
        check_horizon(system, omega, pairs.nodes(), burn_in + K, burn_in + K);
        std::vector<double> spread(burn_in + 1, 0.0), contribution(sampled ? pairs.size() : 0, 0.0);
        TrajectoryWalker walker(system, omega, f, pairs.nodes());
        std::vector<double> f0(pairs.size()), f0_half(pairs.size());
        std::vector<double> cov(K + 1, 0.0), cov_half(K + 1, 0.0);
        std::vector<double> means(burn_in + 1, 0.0);
        for (std::size_t d = 0; d <= burn_in + K; ++d) {
            const auto layer = walker.next();
            if (d <= burn_in) {
                CompensatedSum m, sq;
                for (std::size_t p = 0; p < a.size(); ++p) {
                    const double F = layer[a[p]] - layer[b[p]];
                    m.add(w[p] * F);
                    sq.add(w[p] * F * F);
                }
                means[d] = m.value();
                spread[d] = std::max(0.0, sq.value() - m.value() * m.value());
            }
            if (d == half_depth)
                for (std::size_t p = 0; p < a.size(); ++p) f0_half[p] = layer[a[p]] - layer[b[p]];
            if (d == burn_in)
                for (std::size_t p = 0; p < a.size(); ++p) f0[p] = layer[a[p]] - layer[b[p]];
            if (d >= half_depth && d - half_depth <= K) {
                CompensatedSum c;
                for (std::size_t p = 0; p < a.size(); ++p) c.add(w[p] * f0_half[p] * (layer[a[p]] - layer[b[p]]));
                cov_half[d - half_depth] = c.value();
            }
            if (d >= burn_in) {
                CompensatedSum c;
                const double scale = 0.5 * weight_of_lag(d - burn_in);
                for (std::size_t p = 0; p < a.size(); ++p) {
                    const double term = f0[p] * (layer[a[p]] - layer[b[p]]);
                    c.add(w[p] * term);
                    if (sampled) contribution[p] += scale * term;
                }
                cov[d - burn_in] = c.value();
            }
        }
        for (std::size_t k = 0; k <= K; ++k) {
            cov[k] *= 0.5 * weight_of_lag(k);
            cov_half[k] *= 0.5 * weight_of_lag(k);
        }
        full[r] = std::move(cov);
        half[r] = std::move(cov_half);
        fmeans[r] = std::move(means);
        fspread[r] = std::move(spread);
        per_pair[r] = std::move(contribution);
    });
    double effective_pairs = 0.0;
    for (double v : w) effective_pairs += v * v;
    effective_pairs = 1.0 / effective_pairs;
    DoubledGreenKubo out;
    out.estimate.route = "doubled-green-kubo";
    out.estimate.truncation_K = K;
    out.estimate.burn_in = burn_in;
    summarize_terms(full, out.estimate);
    out.estimate.half_burn_in_value = total_of_means(half);
    if (sampled) {
        // Per-pair contributions averaged over realizations; their spread over pairs
        // is the sampling error of the pair set itself.
        std::vector<double> h(pairs.size(), 0.0);
        for (const auto& row : per_pair)
            for (std::size_t p = 0; p < h.size(); ++p) h[p] += row[p] / static_cast<double>(R);
        const double pair_se = std::sqrt(weighted_variance(h, w) / effective_pairs);
        const double between = std::isfinite(out.estimate.standard_error) ? out.estimate.standard_error : 0.0;
        out.estimate.standard_error = std::hypot(between, pair_se);
    }
    if (eta) out.estimate.tail_bound = eta_tail(*eta, K);
    // The stored terms are (1/2)(2 - delta_k0) cov_k; the bound is |cov_k| <= 2 eta(k).
    if (eta) {
        for (std::size_t k = 0; k <= K; ++k) {
            const double scale = 0.5 * weight_of_lag(k);
            const double se = std::isfinite(out.estimate.per_k_se[k]) ? out.estimate.per_k_se[k] : 0.0;
            if (std::abs(out.estimate.per_k_terms[k]) > scale * 2.0 * eta->at(k) + 3.0 * se)
                out.estimate.eta_violations.push_back(k);
        }
    }
    for (std::size_t d = 0; d <= burn_in; ++d) {
        RunningMoments m;
        for (const auto& row : fmeans) m.add(row[d]);
        FMeanCheck c{d, m.mean(), m.standard_error(), false};
        double se = std::isfinite(c.standard_error) ? c.standard_error : 0.0;
        if (sampled) {
            CompensatedSum v;
            for (const auto& row : fspread) v.add(row[d] / static_cast<double>(R));
            se = std::hypot(se, std::sqrt(v.value() / effective_pairs));
            c.standard_error = se;
        }
        c.pass = std::abs(c.mean) <= 3.0 * se + 1e-12;
        out.f_means.push_back(c);
    }
    return out;
}

double z_variance(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                  const DoubledEnsemble& pairs, std::size_t n) {
    if (!pairs.is_product()) throw ContractError("z_variance needs the full product of a base ensemble");
    const auto sums = birkhoff_sums(system, omega, f, pairs.nodes(), n);
    const auto& s = sums[n];
    const auto a = pairs.first();
    const auto b = pairs.second();
    const auto w = pairs.weights();
    CompensatedSum acc;
    for (std::size_t p = 0; p < a.size(); ++p) {
        const double z = s[a[p]] - s[b[p]];
        acc.add(w[p] * z * z);
    }
    return acc.value();
}

namespace {

SplitEstimate split_at(const MapSystem& system, const SelectionProcess& process, const Observable& f,
                       const Ensemble& ensemble, std::size_t K, std::size_t burn_in, const MonteCarloOptions& options) {
    const std::size_t R = options.realizations;
    // Per realization: mu(f_i f_{i+k}) for k = 0..K, then mu(f_{i+k}) for k = 0..K.
    std::vector<std::vector<double>> raw(R), means(R);
    parallel_for(R, options.workers, [&](std::size_t r) {
        const OmegaSequence omega =
            sample_omega(process, omega_length(burn_in + K), options.seed, r, Stream::split_route);
        check_horizon(system, omega, ensemble, burn_in + K, burn_in + K);
        TrajectoryWalker walker(system, omega, f, ensemble);
        for (std::size_t d = 0; d < burn_in; ++d) walker.next();
        const auto first = walker.next();
        std::vector<double> base(first.begin(), first.end());
        std::vector<double> products(base.size());
        raw[r].resize(K + 1);
        means[r].resize(K + 1);
        for (std::size_t k = 0; k <= K; ++k) {
            const auto layer = k == 0 ? std::span<const double>(base) : walker.next();
            for (std::size_t p = 0; p < base.size(); ++p) products[p] = base[p] * layer[p];
            raw[r][k] = weighted_mean(products, ensemble.weights());
            means[r][k] = weighted_mean(layer, ensemble.weights());
        }
    });
    SplitEstimate out;
    out.classical.route = "classical-gk-split";
    out.centering.route = "classical-gk-split";
    for (auto* est : {&out.classical, &out.centering}) {
        est->truncation_K = K;
        est->burn_in = burn_in;
        est->per_k_terms.assign(K + 1, 0.0);
        est->per_k_se.assign(K + 1, 0.0);
    }
    RunningMoments mean_i;
    for (std::size_t r = 0; r < R; ++r) mean_i.add(means[r][0]);
    std::vector<double> infl_classical(R, 0.0), infl_centering(R, 0.0), infl_diff(R, 0.0);
    CompensatedSum classical_total, centering_total;
    for (std::size_t k = 0; k <= K; ++k) {
        RunningMoments a, mk, mm;
        for (std::size_t r = 0; r < R; ++r) {
            a.add(raw[r][k]);
            mk.add(means[r][k]);
            mm.add(means[r][0] * means[r][k]);
        }
        const double lag = weight_of_lag(k);
        const double product_of_means = mean_i.mean() * mk.mean();
        const double classical = lag * (a.mean() - product_of_means);
        const double centering = lag * (mm.mean() - product_of_means);
        out.classical.per_k_terms[k] = classical;
        out.centering.per_k_terms[k] = centering;
        RunningMoments ic, ie;
        for (std::size_t r = 0; r < R; ++r) {
            const double cross = means[r][0] * mk.mean() + mean_i.mean() * means[r][k];
            const double c = lag * (raw[r][k] - cross);
            const double e = lag * (means[r][0] * means[r][k] - cross);
            ic.add(c);
            ie.add(e);
            infl_classical[r] += c;
            infl_centering[r] += e;
            infl_diff[r] += lag * (raw[r][k] - means[r][0] * means[r][k]);
        }
        out.classical.per_k_se[k] = ic.standard_error();
        out.centering.per_k_se[k] = ie.standard_error();
        classical_total.add(classical);
        centering_total.add(centering);
    }
    out.classical.sigma_sq = classical_total.value();
    out.centering.sigma_sq = centering_total.value();
    RunningMoments sc, se, sd;
    for (std::size_t r = 0; r < R; ++r) {
        sc.add(infl_classical[r]);
        se.add(infl_centering[r]);
        sd.add(infl_diff[r]);
    }
    out.classical.standard_error = sc.standard_error();
    out.centering.standard_error = se.standard_error();
    out.difference = out.classical.sigma_sq - out.centering.sigma_sq;
    out.difference_se = sd.standard_error();
    return out;
}

}  // namespace

SplitEstimate classical_green_kubo_split(const MapSystem& system, const SelectionProcess& process,
                                         const Observable& f, const Ensemble& ensemble, std::size_t K,
                                         std::size_t burn_in, const MonteCarloOptions& options) {
    if (!process.is_stationary())
        throw UnsupportedError("classical Green-Kubo split needs a stationary driving process");
    require_realizations(options);
    SplitEstimate out = split_at(system, process, f, ensemble, K, burn_in, options);
    const SplitEstimate half = split_at(system, process, f, ensemble, K, burn_in / 2, options);
    out.classical.half_burn_in_value = half.classical.sigma_sq;
    out.centering.half_burn_in_value = half.centering.sigma_sq;
    return out;
}

std::vector<GrowthPoint> growth_data(const MapSystem& system, const SelectionProcess& process, const Observable& f,
                                     const Ensemble& ensemble, std::span<const std::size_t> ns,
                                     const MonteCarloOptions& options) {
    require_realizations(options);
    if (ns.empty()) throw ContractError("growth schedule is empty");
    std::vector<std::vector<double>> sig(options.realizations);
    parallel_for(options.realizations, options.workers, [&](std::size_t r) {
        const OmegaSequence omega = sample_omega(process, ns.back(), options.seed, r);
        sig[r] = quenched_variance_schedule(system, omega, f, ensemble, ns);
    });
    std::vector<GrowthPoint> out;
    for (std::size_t s = 0; s < ns.size(); ++s) {
        RunningMoments m;
        for (const auto& row : sig) m.add(row[s] * static_cast<double>(ns[s]));
        const double se = m.standard_error();
        out.push_back({ns[s], m.mean(), std::isfinite(se) ? se : 0.0});
    }
    return out;
}

PositivityVerdict positivity_check(std::span<const GrowthPoint> growth, double psi, double slack) {
    if (growth.size() < 4) throw DataError("positivity check needs at least 4 schedule points");
    if (!(psi > 1.0)) throw ParameterError("positivity check needs psi > 1");
    PositivityVerdict out;
    for (const auto& g : growth) out.max_variance = std::max(out.max_variance, std::abs(g.mean));
    if (out.max_variance <= 1e-12) {
        out.verdict = "degenerate";
        out.exponent = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    std::vector<double> xs, ys;
    CompensatedSum nn, ny, nse;
    for (const auto& g : growth) {
        const double n = static_cast<double>(g.n);
        nn.add(n * n);
        ny.add(n * g.mean);
        nse.add(n * n * g.standard_error * g.standard_error);
        if (g.mean > 0.0) {
            xs.push_back(std::log(n));
            ys.push_back(std::log(g.mean));
        }
    }
    out.c = ny.value() / nn.value();
    out.c_se = std::sqrt(nse.value()) / nn.value();
    if (xs.size() < 2) {
        out.verdict = "inconclusive";
        out.exponent = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.exponent = linear_fit(xs, ys).slope;
    if (out.exponent >= 1.0 - slack && out.c > 3.0 * out.c_se)
        out.verdict = "positive";
    else if (out.exponent <= 1.0 / psi + slack)
        out.verdict = "degenerate";
    else
        out.verdict = "inconclusive";
    return out;
}

PastPushforward past_pushforward(const MapSystem& system, std::span<const double> history, const Ensemble& ensemble,
                                 std::size_t n) {
    if (n > history.size())
        throw InsufficientRandomnessError("history of length " + std::to_string(history.size()) +
                                          " is shorter than n=" + std::to_string(n));
    auto approximant = [&](std::size_t m) {
        std::vector<Point> pts(ensemble.points().begin(), ensemble.points().end());
        for (std::size_t k = history.size() - m; k < history.size(); ++k) system.advance(history[k], pts);
        return ensemble.with_points(std::move(pts));
    };
    PastPushforward out{approximant(0), {}};
    for (std::size_t m = 1; m <= n; ++m) {
        Ensemble next = approximant(m);
        out.consecutive_distances.push_back(cdf_distance(next, out.result));
        out.result = std::move(next);
    }
    return out;
}

}  // namespace qclt
