#pragma once

#include "qclt/map_core.hpp"
#include "qclt/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qclt {

enum class ProcessKind { iid, markov, ams_markov };

std::string to_string(ProcessKind kind);

/// Law of the driving sequence omega. Finite alphabets are handled as Markov
/// chains (an i.i.d. law is the chain whose rows all equal the letter law);
/// a continuous i.i.d. law draws letters uniformly from [lo, hi].
class SelectionProcess {
public:
    static SelectionProcess iid(std::vector<double> alphabet, std::vector<double> probabilities);
    static SelectionProcess iid_continuous(double lo, double hi);
    /// One-letter process: every omega_i equals `letter`.
    static SelectionProcess constant(double letter);
    /// Chain started at its stationary law.
    static SelectionProcess markov(std::vector<double> alphabet, Eigen::MatrixXd transition);
    /// Chain started at an arbitrary initial law.
    static SelectionProcess ams_markov(std::vector<double> alphabet, Eigen::MatrixXd transition,
                                       std::vector<double> initial);

    ProcessKind kind() const noexcept { return kind_; }
    bool is_continuous() const noexcept { return continuous_; }
    const std::vector<double>& alphabet() const noexcept { return alphabet_; }
    double lower() const noexcept { return lo_; }
    double upper() const noexcept { return hi_; }
    const Eigen::MatrixXd& transition() const noexcept { return transition_; }
    const Eigen::VectorXd& initial() const noexcept { return initial_; }
    const Eigen::VectorXd& stationary() const noexcept { return stationary_; }
    /// True when the initial law is invariant, so every coordinate has the same marginal.
    bool is_stationary() const noexcept;
    /// |lambda_2| of the transition matrix (0 for one letter or i.i.d. laws).
    double second_eigenvalue_modulus() const noexcept { return lambda2_; }
    std::string id() const;

    /// Law of the letter index at coordinate `i` (1-based).
    Eigen::VectorXd marginal(std::size_t i) const;
    /// Index of a letter in the alphabet; throws DomainError when absent.
    std::size_t index_of(double letter) const;
    /// Letters to consider for slope bounds: the alphabet, or {lo, hi} when continuous.
    std::vector<double> letter_support() const;

private:
    SelectionProcess() = default;
    void finish();

    ProcessKind kind_ = ProcessKind::iid;
    bool continuous_ = false;
    double lo_ = 0.0, hi_ = 0.0;
    std::vector<double> alphabet_;
    Eigen::MatrixXd transition_;
    Eigen::VectorXd initial_;
    Eigen::VectorXd stationary_;
    double lambda2_ = 0.0;
};

/// Deterministic in (process, length, seed, realization, stream).
OmegaSequence sample_omega(const SelectionProcess& process, std::size_t length, std::uint64_t seed,
                           std::uint64_t realization, Stream stream = Stream::omega);

/// (omega_{m+1}, ...). Throws InsufficientRandomnessError when m exceeds the length.
OmegaSequence shift(const OmegaSequence& omega, std::size_t m);

/// max over events A in sigma(omega_a..omega_b) and B in sigma(omega_c..omega_d)
/// of |P(AB) - P(A)P(B)|, from exact chain probabilities. Coordinates are 1-based
/// and inclusive with b < c.
double alpha_between(const SelectionProcess& process, std::size_t a, std::size_t b, std::size_t c, std::size_t d);

/// Bounded-depth lower bound of sup_i alpha(F_1^i, F_{i+n}^inf) with i ranging
/// over 1..horizon_i. Exactly 0 for i.i.d. laws. Throws UnsupportedError for
/// continuous alphabets.
double estimate_alpha(const SelectionProcess& process, std::size_t n, std::size_t horizon_i = 4,
                      std::size_t depth_a = 2, std::size_t depth_b = 2);

struct MixingProfile {
    std::vector<double> raw;          ///< alpha-hat(1..n_max) before regularization
    std::vector<double> alpha;        ///< running max from the right: non-increasing
    std::string form;                 ///< "zero" or "exponential"
    double exp_constant = 0.0;        ///< alpha(n) ~ C lambda^n
    double exp_rate = 0.0;            ///< lambda
    double log_rate = 0.0;            ///< log lambda, fitted
    double poly_constant = 0.0;       ///< alpha(n) <= C n^-gamma over the computed range
    double poly_gamma = 0.0;

    double fitted_bound(std::size_t n) const;
};

MixingProfile mixing_profile(const SelectionProcess& process, std::size_t n_max, double gamma = 2.0,
                             std::size_t horizon_i = 4, std::size_t depth_a = 2, std::size_t depth_b = 2);

/// A bounded function of the letters omega_first..omega_last (1-based, inclusive).
struct CoordinateFunction {
    std::size_t first = 1;
    std::size_t last = 1;
    std::function<double(std::span<const double>)> fn;
    double sup_norm = 1.0;

    double operator()(const OmegaSequence& omega) const;
};

/// Indicator that omega_coordinate equals `letter`.
CoordinateFunction letter_indicator(std::size_t coordinate, double letter);

struct MixingCheck {
    double estimate = 0.0;     ///< |E[uv] - Eu Ev|, Monte Carlo
    double standard_error = 0.0;
    double exact = 0.0;        ///< exact covariance from chain enumeration
    double alpha = 0.0;        ///< alpha between the supporting windows
    double bound = 0.0;        ///< 4 |u| |v| alpha
    bool pass = false;         ///< estimate <= bound + 3 se
};

/// Throws ContractError unless v starts at least `gap` coordinates after u ends.
MixingCheck check_strong_mixing_inequality(const SelectionProcess& process, const CoordinateFunction& u,
                                           const CoordinateFunction& v, std::size_t gap, std::size_t samples,
                                           std::uint64_t seed);

/// Exact E[g] when g is read on the coordinates first+shift..last+shift.
double exact_expectation(const SelectionProcess& process, const CoordinateFunction& g, std::size_t shift = 0);

struct AmsAverage {
    double average = 0.0;     ///< (1/n) sum_{i<n} E[g o tau^i]
    double stationary = 0.0;  ///< E g under the stationary law
    double difference = 0.0;  ///< average - stationary
};

AmsAverage ams_average_weights(const SelectionProcess& process, const CoordinateFunction& g, std::size_t n);

/// Fitted zeta in |difference(n)| ~ n^-zeta over a schedule; +inf when every
/// difference vanishes.
double fit_ams_zeta(const SelectionProcess& process, const CoordinateFunction& g, std::span<const std::size_t> ns);

}  // namespace qclt
