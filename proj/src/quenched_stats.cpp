#include "qclt/quenched_stats.hpp"

#include "qclt/error.hpp"
#include "qclt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qclt {

namespace {

double centered_covariance(std::span<const double> a, std::span<const double> b, std::span<const double> w) {
    const double ma = weighted_mean(a, w);
    const double mb = weighted_mean(b, w);
    CompensatedSum acc, wsum;
    for (std::size_t p = 0; p < a.size(); ++p) {
        acc.add(w[p] * (a[p] - ma) * (b[p] - mb));
        wsum.add(w[p]);
    }
    return acc.value() / wsum.value();
}

void check_schedule(std::span<const std::size_t> ns) {
    if (ns.empty()) throw ContractError("schedule is empty");
    for (std::size_t s = 0; s < ns.size(); ++s) {
        if (ns[s] < 1) throw ContractError("schedule entries must be at least 1");
        if (s > 0 && ns[s] <= ns[s - 1]) throw ContractError("schedule must be strictly increasing");
    }
}

}  // namespace

TrajectoryWalker::TrajectoryWalker(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                                   const Ensemble& ensemble, std::size_t alpha)
    : system_(system),
      omega_(omega),
      f_(f),
      alpha_(alpha),
      points_(ensemble.points().begin(), ensemble.points().end()),
      values_(ensemble.size()) {
    if (alpha >= f.dimension()) throw ContractError("observable component out of range");
}

std::span<const double> TrajectoryWalker::next() {
    f_.evaluate(points_, values_, alpha_);
    if (index_ < omega_.size()) system_.advance(omega_.letters[index_], points_);
    ++index_;
    return values_;
}

void check_horizon(const MapSystem& system, const OmegaSequence& omega, const Ensemble& ensemble,
                   std::size_t last_iterate, std::size_t letters_needed) {
    require_length(omega, letters_needed);
    if (ensemble.mode() != EnsembleMode::stratified_grid || last_iterate == 0) return;
    const std::size_t used = std::min(last_iterate, omega.size());
    const double slope = system.max_slope(std::span<const double>(omega.letters).first(used));
    require_within_cap(ensemble, slope, last_iterate);
}

std::vector<std::vector<double>> birkhoff_sums(const MapSystem& system, const OmegaSequence& omega,
                                               const Observable& f, const Ensemble& ensemble, std::size_t n) {
    check_horizon(system, omega, ensemble, n ? n - 1 : 0, n);
    std::vector<std::vector<double>> sums(n + 1, std::vector<double>(ensemble.size(), 0.0));
    TrajectoryWalker walker(system, omega, f, ensemble);
    for (std::size_t m = 1; m <= n; ++m) {
        const auto fi = walker.next();
        for (std::size_t p = 0; p < fi.size(); ++p) sums[m][p] = sums[m - 1][p] + fi[p];
    }
    return sums;
}

double fiber_correlation(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                         const Ensemble& ensemble, std::size_t i, std::size_t j) {
    const std::size_t hi = std::max(i, j);
    check_horizon(system, omega, ensemble, hi, hi);
    TrajectoryWalker walker(system, omega, f, ensemble);
    std::vector<double> fi, fj;
    for (std::size_t k = 0; k <= hi; ++k) {
        const auto layer = walker.next();
        if (k == i) fi.assign(layer.begin(), layer.end());
        if (k == j) fj.assign(layer.begin(), layer.end());
    }
    return centered_covariance(fi, fj, ensemble.weights());
}

std::vector<std::vector<double>> correlation_table(const MapSystem& system, const OmegaSequence& omega,
                                                   const Observable& f, const Ensemble& ensemble, std::size_t n) {
    if (n == 0) return {};
    check_horizon(system, omega, ensemble, n - 1, n - 1);
    TrajectoryWalker walker(system, omega, f, ensemble);
    std::vector<std::vector<double>> centered(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto layer = walker.next();
        const double m = weighted_mean(layer, ensemble.weights());
        centered[i].resize(layer.size());
        for (std::size_t p = 0; p < layer.size(); ++p) centered[i][p] = layer[p] - m;
    }
    const auto w = ensemble.weights();
    CompensatedSum wsum;
    for (double x : w) wsum.add(x);
    std::vector<std::vector<double>> table(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            CompensatedSum acc;
            for (std::size_t p = 0; p < w.size(); ++p) acc.add(w[p] * centered[i][p] * centered[j][p]);
            table[i][j] = table[j][i] = acc.value() / wsum.value();
        }
    return table;
}

double sigma_sq_from_correlations(const std::vector<std::vector<double>>& table, std::size_t n) {
    if (n == 0 || n > table.size()) throw ContractError("correlation table smaller than n");
    CompensatedSum acc;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) acc.add(table[i][j]);
    return acc.value() / static_cast<double>(n);
}

double quenched_variance(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                         const Ensemble& ensemble, std::size_t n) {
    const std::size_t ns[] = {n};
    return quenched_variance_schedule(system, omega, f, ensemble, ns).front();
}

std::vector<double> quenched_variance_schedule(const MapSystem& system, const OmegaSequence& omega,
                                               const Observable& f, const Ensemble& ensemble,
                                               std::span<const std::size_t> ns) {
    check_schedule(ns);
    check_horizon(system, omega, ensemble, ns.back() - 1, ns.back());
    TrajectoryWalker walker(system, omega, f, ensemble);
    std::vector<double> sums(ensemble.size(), 0.0);
    std::vector<double> out;
    out.reserve(ns.size());
    for (std::size_t m = 1, s = 0; s < ns.size(); ++m) {
        const auto fi = walker.next();
        for (std::size_t p = 0; p < fi.size(); ++p) sums[p] += fi[p];
        if (m == ns[s]) {
            out.push_back(weighted_variance(sums, ensemble.weights()) / static_cast<double>(m));
            ++s;
        }
    }
    return out;
}

std::vector<double> lag_correlations(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                                     const Ensemble& ensemble, std::size_t i, std::size_t K) {
    check_horizon(system, omega, ensemble, i + K, i + K);
    TrajectoryWalker walker(system, omega, f, ensemble);
    for (std::size_t k = 0; k < i; ++k) walker.next();
    const auto first = walker.next();
    std::vector<double> base(first.begin(), first.end());
    std::vector<double> out{centered_covariance(base, base, ensemble.weights())};
    for (std::size_t k = 1; k <= K; ++k) out.push_back(centered_covariance(base, walker.next(), ensemble.weights()));
    return out;
}

double eta_tail(const PowerLaw& eta, std::size_t K) {
    if (eta.exponent <= 1.0) return std::numeric_limits<double>::infinity();
    constexpr std::size_t kTerms = 100000;
    CompensatedSum acc;
    for (std::size_t k = K + 1; k <= K + kTerms; ++k) acc.add(eta.at(k));
    const double edge = static_cast<double>(K + kTerms) + 0.5;
    acc.add(eta.constant * std::pow(edge, 1.0 - eta.exponent) / (eta.exponent - 1.0));
    return 2.0 * acc.value();
}

TruncatedV v_truncated(const MapSystem& system, const OmegaSequence& omega, const Observable& f,
                       const Ensemble& ensemble, std::size_t i, std::size_t K, std::optional<PowerLaw> eta) {
    TruncatedV out;
    const auto corr = lag_correlations(system, omega, f, ensemble, i, K);
    CompensatedSum acc;
    for (std::size_t k = 0; k <= K; ++k) {
        const double term = (k == 0 ? 1.0 : 2.0) * corr[k];
        out.terms.push_back(term);
        acc.add(term);
        if (eta && std::abs(corr[k]) > eta->at(k) + 1e-12) out.flagged.push_back(k);
    }
    out.value = acc.value();
    if (eta) out.tail_bound = eta_tail(*eta, K);
    return out;
}

MeanQuenchedVariance mean_quenched_variance(const MapSystem& system, const SelectionProcess& process,
                                            const Observable& f, const Ensemble& ensemble, std::size_t n,
                                            const MonteCarloOptions& options) {
    if (options.realizations < 1) throw ContractError("at least one realization is required");
    MeanQuenchedVariance out;
    out.values.resize(options.realizations);
    parallel_for(options.realizations, options.workers, [&](std::size_t r) {
        const OmegaSequence omega = sample_omega(process, n, options.seed, r);
        out.values[r] = quenched_variance(system, omega, f, ensemble, n);
    });
    RunningMoments mom;
    for (double v : out.values) mom.add(v);
    out.mean = mom.mean();
    out.standard_error = mom.standard_error();
    out.standard_error_defined = options.realizations >= 2;
    std::vector<double> spread;
    for (double v : out.values) spread.push_back(std::abs(v - out.mean));
    out.spread_median = median(spread);
    out.spread_q90 = quantile(spread, 0.9);
    out.spread_max = *std::max_element(spread.begin(), spread.end());
    return out;
}

VarianceIdentity variance_identity_report(const MapSystem& system, const SelectionProcess& process,
                                          const Observable& f, const Ensemble& ensemble, std::size_t n,
                                          const MonteCarloOptions& options) {
    if (options.realizations < 1) throw ContractError("at least one realization is required");
    if (n < 1) throw ContractError("n must be at least 1");
    const std::size_t R = options.realizations;
    const double root_n = std::sqrt(static_cast<double>(n));
    std::vector<std::vector<double>> w_values(R);
    parallel_for(R, options.workers, [&](std::size_t r) {
        const OmegaSequence omega = sample_omega(process, n, options.seed, r);
        auto sums = birkhoff_sums(system, omega, f, ensemble, n);
        w_values[r] = std::move(sums[n]);
        for (double& v : w_values[r]) v /= root_n;
    });
    const auto w = ensemble.weights();
    std::vector<double> means(R), sigmas(R);
    for (std::size_t r = 0; r < R; ++r) {
        means[r] = weighted_mean(w_values[r], w);
        sigmas[r] = weighted_variance(w_values[r], w);
    }
    const std::vector<double> equal(R, 1.0 / static_cast<double>(R));
    VarianceIdentity out;
    out.mean_sigma = weighted_mean(sigmas, equal);
    out.centering = weighted_variance(means, equal);

    const double grand = weighted_mean(means, equal);
    CompensatedSum total;
    for (std::size_t r = 0; r < R; ++r) {
        CompensatedSum inner;
        for (std::size_t p = 0; p < w.size(); ++p) {
            const double d = w_values[r][p] - grand;
            inner.add(w[p] * d * d);
        }
        total.add(inner.value());
    }
    out.total = total.value() / static_cast<double>(R);
    out.residual = std::abs(out.total - out.centering - out.mean_sigma);
    return out;
}

FluctuationDecay fluctuation_decay(const MapSystem& system, const SelectionProcess& process, const Observable& f,
                                   const Ensemble& ensemble, std::span<const std::size_t> ns,
                                   const MonteCarloOptions& options) {
    if (ns.size() < 3) throw DataError("fluctuation decay needs at least 3 schedule points");
    check_schedule(ns);
    if (options.realizations < 1) throw ContractError("at least one realization is required");
    FluctuationDecay out;
    out.sigma.resize(options.realizations);
    parallel_for(options.realizations, options.workers, [&](std::size_t r) {
        const OmegaSequence omega = sample_omega(process, ns.back(), options.seed, r);
        out.sigma[r] = quenched_variance_schedule(system, omega, f, ensemble, ns);
    });
    out.identically_zero = true;
    std::vector<double> xs, ys;
    for (std::size_t s = 0; s < ns.size(); ++s) {
        RunningMoments mom;
        for (const auto& row : out.sigma) mom.add(row[s]);
        std::vector<double> fl;
        for (const auto& row : out.sigma) fl.push_back(std::abs(row[s] - mom.mean()));
        FluctuationRow row{ns[s], mom.mean(), median(fl), quantile(fl, 0.1), quantile(fl, 0.9)};
        if (*std::max_element(fl.begin(), fl.end()) != 0.0) out.identically_zero = false;
        if (row.median > 0.0) {
            xs.push_back(std::log(static_cast<double>(row.n)));
            ys.push_back(std::log(row.median));
        }
        out.rows.push_back(row);
    }
    if (!out.identically_zero && xs.size() >= 2) out.fit = linear_fit(xs, ys);
    return out;
}

CorrelationDecayFit fit_correlation_decay(std::span<const double> correlations, double floor) {
    if (correlations.empty()) throw DataError("no correlations to fit");
    CorrelationDecayFit out;
    out.envelope.resize(correlations.size());
    double run = 0.0;
    for (std::size_t k = correlations.size(); k-- > 0;) {
        run = std::max(run, std::abs(correlations[k]));
        out.envelope[k] = run;
    }
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < out.envelope.size(); ++k)
        if (out.envelope[k] > floor) {
            xs.push_back(static_cast<double>(k));
            ys.push_back(std::log(out.envelope[k]));
        }
    out.fit_points = xs.size();
    if (xs.size() < 2) {
        out.constant = out.envelope.front();
        out.rate = 0.0;
        out.eta = {out.constant, std::numeric_limits<double>::infinity()};
        return out;
    }
    out.rate = std::min(1.0, std::exp(linear_fit(xs, ys).slope));
    for (std::size_t t = 0; t < xs.size(); ++t)
        out.constant = std::max(out.constant, std::exp(ys[t]) / std::pow(out.rate, xs[t]));
    const double decay = -std::log(out.rate);
    const std::size_t k_last = std::max<std::size_t>(3, correlations.size() - 1);
    double psi = std::numeric_limits<double>::infinity();
    for (std::size_t k = 2; k <= k_last; ++k) {
        const double kk = static_cast<double>(k);
        psi = std::min(psi, kk * decay / std::log(kk));
    }
    out.eta = {out.constant, psi};
    return out;
}

}  // namespace qclt
