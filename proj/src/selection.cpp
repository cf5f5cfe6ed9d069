#include "qclt/selection.hpp"

#include "qclt/error.hpp"
#include "qclt/numeric.hpp"
#include "qclt/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

namespace qclt {

namespace {

constexpr std::size_t kMaxEnumeratedWords = 1u << 16;
constexpr std::size_t kMaxSubsetSide = 20;

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_law(const Eigen::VectorXd& p, const std::string& what) {
    for (Eigen::Index k = 0; k < p.size(); ++k)
        if (!(p[k] >= 0.0) || !std::isfinite(p[k])) throw DomainError(what + " has a negative or non-finite entry");
    if (std::abs(p.sum() - 1.0) > 1e-12) throw DomainError(what + " does not sum to 1");
}

void check_alphabet(const std::vector<double>& alphabet) {
    if (alphabet.empty()) throw DomainError("alphabet is empty");
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
        if (!std::isfinite(alphabet[i])) throw DomainError("alphabet letter is not finite");
        for (std::size_t j = 0; j < i; ++j)
            if (alphabet[i] == alphabet[j]) throw DomainError("alphabet letters must be distinct");
    }
}

std::size_t power_size(std::size_t base, std::size_t exponent) {
    std::size_t n = 1;
    for (std::size_t k = 0; k < exponent; ++k) {
        n *= base;
        if (n > kMaxEnumeratedWords) throw UnsupportedError("cylinder enumeration too large");
    }
    return n;
}

/// Words of a window as index tuples, last coordinate fastest.
struct WindowWords {
    std::size_t length = 0;
    std::size_t count = 0;
    std::vector<std::size_t> digits;  // count * length

    WindowWords(std::size_t letters, std::size_t len) : length(len), count(power_size(letters, len)) {
        digits.resize(count * length);
        for (std::size_t w = 0; w < count; ++w) {
            std::size_t rest = w;
            for (std::size_t k = length; k-- > 0;) {
                digits[w * length + k] = rest % letters;
                rest /= letters;
            }
        }
    }
    std::size_t at(std::size_t w, std::size_t k) const { return digits[w * length + k]; }
    std::size_t first(std::size_t w) const { return at(w, 0); }
    std::size_t last(std::size_t w) const { return at(w, length - 1); }
};

/// Probability of a word given the law of its first letter.
double word_probability(const SelectionProcess& p, const WindowWords& words, std::size_t w,
                        const Eigen::VectorXd& start) {
    double prob = start[static_cast<Eigen::Index>(words.first(w))];
    for (std::size_t k = 1; k < words.length; ++k)
        prob *= p.transition()(static_cast<Eigen::Index>(words.at(w, k - 1)), static_cast<Eigen::Index>(words.at(w, k)));
    return prob;
}

/// Probability of the word after its first letter is fixed.
double word_tail_probability(const SelectionProcess& p, const WindowWords& words, std::size_t w) {
    double prob = 1.0;
    for (std::size_t k = 1; k < words.length; ++k)
        prob *= p.transition()(static_cast<Eigen::Index>(words.at(w, k - 1)), static_cast<Eigen::Index>(words.at(w, k)));
    return prob;
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& m, std::size_t n) {
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(m.rows(), m.cols());
    Eigen::MatrixXd base = m;
    while (n) {
        if (n & 1) result = result * base;
        base = base * base;
        n >>= 1;
    }
    return result;
}

/// Joint law of two windows and the product of their marginals.
struct JointWindows {
    WindowWords a_words, b_words;
    Eigen::MatrixXd joint;  // rows: A words, cols: B words
    Eigen::VectorXd pa, pb;
};

JointWindows joint_windows(const SelectionProcess& p, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    if (a < 1 || a > b || b >= c || c > d)
        throw ContractError("windows must satisfy 1 <= a <= b < c <= d");
    const std::size_t letters = p.alphabet().size();
    JointWindows jw{WindowWords(letters, b - a + 1), WindowWords(letters, d - c + 1), {}, {}, {}};
    const Eigen::VectorXd start = p.marginal(a);
    const Eigen::MatrixXd bridge = matrix_power(p.transition(), c - b);
    const Eigen::VectorXd start_b = p.marginal(c);
    const auto na = static_cast<Eigen::Index>(jw.a_words.count);
    const auto nb = static_cast<Eigen::Index>(jw.b_words.count);
    jw.joint.resize(na, nb);
    jw.pa.resize(na);
    jw.pb.resize(nb);
    Eigen::VectorXd tail_b(nb);
    for (Eigen::Index j = 0; j < nb; ++j) {
        jw.pb[j] = word_probability(p, jw.b_words, static_cast<std::size_t>(j), start_b);
        tail_b[j] = word_tail_probability(p, jw.b_words, static_cast<std::size_t>(j));
    }
    for (Eigen::Index i = 0; i < na; ++i) {
        const double pw = word_probability(p, jw.a_words, static_cast<std::size_t>(i), start);
        jw.pa[i] = pw;
        const auto from = static_cast<Eigen::Index>(jw.a_words.last(static_cast<std::size_t>(i)));
        for (Eigen::Index j = 0; j < nb; ++j) {
            const auto to = static_cast<Eigen::Index>(jw.b_words.first(static_cast<std::size_t>(j)));
            jw.joint(i, j) = pw * bridge(from, to) * tail_b[j];
        }
    }
    return jw;
}

/// max over row subsets R and column subsets C of |sum_{R x C} D| for a
/// matrix whose rows and columns sum to zero.
double max_block_sum(const Eigen::MatrixXd& dmat) {
    const Eigen::MatrixXd m = dmat.rows() <= dmat.cols() ? dmat : Eigen::MatrixXd(dmat.transpose());
    const auto rows = static_cast<std::size_t>(m.rows());
    if (rows > kMaxSubsetSide) throw UnsupportedError("too many cylinder words for exhaustive event search");
    Eigen::VectorXd colsum = Eigen::VectorXd::Zero(m.cols());
    double best = 0.0;
    std::uint64_t prev_gray = 0;
    const std::uint64_t total = std::uint64_t{1} << rows;
    for (std::uint64_t k = 1; k < total; ++k) {
        const std::uint64_t gray = k ^ (k >> 1);
        const std::uint64_t flip = gray ^ prev_gray;
        const auto row = static_cast<Eigen::Index>(std::countr_zero(flip));
        if (gray & flip)
            colsum += m.row(row).transpose();
        else
            colsum -= m.row(row).transpose();
        prev_gray = gray;
        double pos = 0.0, neg = 0.0;
        for (Eigen::Index j = 0; j < colsum.size(); ++j) {
            if (colsum[j] > 0.0) pos += colsum[j];
            else neg -= colsum[j];
        }
        best = std::max({best, pos, neg});
    }
    return best;
}

template <class Letters>
void fill_letters(const SelectionProcess& p, const CounterRng& rng, std::size_t length, Letters& out) {
    out.resize(length);
    if (p.is_continuous()) {
        for (std::size_t k = 0; k < length; ++k) out[k] = p.lower() + (p.upper() - p.lower()) * rng.uniform(k);
        return;
    }
    const auto& alphabet = p.alphabet();
    const auto n = static_cast<Eigen::Index>(alphabet.size());
    auto draw = [&](auto law, std::uint64_t counter) {
        const double u = rng.uniform(counter);
        double acc = 0.0;
        for (Eigen::Index s = 0; s + 1 < n; ++s) {
            acc += law(s);
            if (u < acc) return static_cast<std::size_t>(s);
        }
        return static_cast<std::size_t>(n - 1);
    };
    std::size_t state = 0;
    for (std::size_t k = 0; k < length; ++k) {
        if (k == 0)
            state = draw([&](Eigen::Index s) { return p.initial()[s]; }, k);
        else
            state = draw([&](Eigen::Index s) { return p.transition()(static_cast<Eigen::Index>(state), s); }, k);
        out[k] = alphabet[state];
    }
}

/// E[fn(window)] where the window has `length` letters and its first letter has law `start`.
double window_expectation(const SelectionProcess& p, const Eigen::VectorXd& start, const CoordinateFunction& g) {
    if (g.first < 1 || g.last < g.first) throw ContractError("coordinate function has an empty support");
    const WindowWords words(p.alphabet().size(), g.last - g.first + 1);
    std::vector<double> letters(words.length);
    CompensatedSum total;
    for (std::size_t w = 0; w < words.count; ++w) {
        const double prob = word_probability(p, words, w, start);
        if (prob == 0.0) continue;
        for (std::size_t k = 0; k < words.length; ++k) letters[k] = p.alphabet()[words.at(w, k)];
        total.add(prob * g.fn(letters));
    }
    return total.value();
}

void require_finite(const SelectionProcess& p, const char* op) {
    if (p.is_continuous()) throw UnsupportedError(std::string(op) + " needs a finite alphabet");
}

}  // namespace

std::string to_string(ProcessKind kind) {
    switch (kind) {
        case ProcessKind::iid: return "iid";
        case ProcessKind::markov: return "markov";
        case ProcessKind::ams_markov: return "ams-markov";
    }
    return "unknown";
}

SelectionProcess SelectionProcess::iid(std::vector<double> alphabet, std::vector<double> probabilities) {
    check_alphabet(alphabet);
    if (probabilities.size() != alphabet.size()) throw DomainError("letter probabilities do not match the alphabet");
    SelectionProcess p;
    p.kind_ = ProcessKind::iid;
    p.alphabet_ = std::move(alphabet);
    p.initial_ = to_vector(probabilities);
    check_law(p.initial_, "letter law");
    const auto n = p.initial_.size();
    p.transition_.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r) p.transition_.row(r) = p.initial_.transpose();
    p.finish();
    return p;
}

SelectionProcess SelectionProcess::iid_continuous(double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo <= hi)) throw DomainError("continuous range must satisfy lo <= hi");
    SelectionProcess p;
    p.kind_ = ProcessKind::iid;
    p.continuous_ = true;
    p.lo_ = lo;
    p.hi_ = hi;
    return p;
}

SelectionProcess SelectionProcess::constant(double letter) { return iid({letter}, {1.0}); }

SelectionProcess SelectionProcess::markov(std::vector<double> alphabet, Eigen::MatrixXd transition) {
    SelectionProcess p;
    p.kind_ = ProcessKind::markov;
    p.alphabet_ = std::move(alphabet);
    p.transition_ = std::move(transition);
    p.finish();
    p.initial_ = p.stationary_;
    return p;
}

SelectionProcess SelectionProcess::ams_markov(std::vector<double> alphabet, Eigen::MatrixXd transition,
                                              std::vector<double> initial) {
    SelectionProcess p;
    p.kind_ = ProcessKind::ams_markov;
    p.alphabet_ = std::move(alphabet);
    p.transition_ = std::move(transition);
    p.initial_ = to_vector(initial);
    if (p.initial_.size() != static_cast<Eigen::Index>(p.alphabet_.size()))
        throw DomainError("initial law does not match the alphabet");
    check_law(p.initial_, "initial law");
    p.finish();
    return p;
}

void SelectionProcess::finish() {
    check_alphabet(alphabet_);
    const auto n = static_cast<Eigen::Index>(alphabet_.size());
    if (transition_.rows() != n || transition_.cols() != n)
        throw DomainError("transition matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    for (Eigen::Index r = 0; r < n; ++r)
        check_law(transition_.row(r).transpose(), "transition row " + std::to_string(r));

    Eigen::MatrixXd a = transition_.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[n - 1] = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw DomainError("transition matrix has no unique stationary law");
    stationary_ = lu.solve(rhs);
    if ((stationary_.transpose() * transition_ - stationary_.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
        stationary_.minCoeff() < -1e-12)
        throw DomainError("stationary law could not be resolved to 1e-10");
    stationary_ = stationary_.cwiseMax(0.0);
    stationary_ /= stationary_.sum();

    lambda2_ = 0.0;
    if (kind_ != ProcessKind::iid && n > 1) {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(transition_, false);
        std::vector<double> mods;
        for (Eigen::Index k = 0; k < n; ++k) mods.push_back(std::abs(solver.eigenvalues()[k]));
        std::sort(mods.begin(), mods.end(), std::greater<>());
        lambda2_ = mods[1];
    }
}

bool SelectionProcess::is_stationary() const noexcept {
    if (continuous_ || kind_ != ProcessKind::ams_markov) return true;
    return (initial_ - stationary_).cwiseAbs().maxCoeff() <= 1e-12;
}

std::string SelectionProcess::id() const {
    std::ostringstream os;
    os << to_string(kind_);
    if (continuous_) {
        os << "[" << lo_ << "," << hi_ << "]";
        return os.str();
    }
    os << "{";
    for (std::size_t k = 0; k < alphabet_.size(); ++k) os << (k ? "," : "") << alphabet_[k];
    os << "}";
    return os.str();
}

Eigen::VectorXd SelectionProcess::marginal(std::size_t i) const {
    if (continuous_) throw UnsupportedError("continuous laws have no finite marginal vector");
    if (i < 1) throw ContractError("coordinates are 1-based");
    if (is_stationary()) return initial_;
    return matrix_power(transition_.transpose(), i - 1) * initial_;
}

std::size_t SelectionProcess::index_of(double letter) const {
    for (std::size_t k = 0; k < alphabet_.size(); ++k)
        if (alphabet_[k] == letter) return k;
    throw DomainError("letter not in the alphabet");
}

std::vector<double> SelectionProcess::letter_support() const {
    if (continuous_) return {lo_, hi_};
    return alphabet_;
}

OmegaSequence sample_omega(const SelectionProcess& process, std::size_t length, std::uint64_t seed,
                           std::uint64_t realization, Stream stream) {
    if (length < 1) throw ContractError("driving sequence length must be at least 1");
    OmegaSequence omega;
    omega.provenance = {process.id(), seed, realization};
    fill_letters(process, CounterRng(seed, stream, realization), length, omega.letters);
    return omega;
}

OmegaSequence shift(const OmegaSequence& omega, std::size_t m) {
    require_length(omega, m);
    OmegaSequence out;
    out.provenance = omega.provenance;
    out.letters.assign(omega.letters.begin() + static_cast<std::ptrdiff_t>(m), omega.letters.end());
    return out;
}

double alpha_between(const SelectionProcess& process, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    require_finite(process, "alpha estimation");
    if (process.kind() == ProcessKind::iid) {
        if (a < 1 || a > b || b >= c || c > d) throw ContractError("windows must satisfy 1 <= a <= b < c <= d");
        return 0.0;
    }
    const JointWindows jw = joint_windows(process, a, b, c, d);
    const Eigen::MatrixXd dmat = jw.joint - jw.pa * jw.pb.transpose();
    return max_block_sum(dmat);
}

double estimate_alpha(const SelectionProcess& process, std::size_t n, std::size_t horizon_i, std::size_t depth_a,
                      std::size_t depth_b) {
    require_finite(process, "alpha estimation");
    if (n < 1) throw ContractError("gap n must be at least 1");
    if (horizon_i < 1 || depth_a < 1 || depth_b < 1) throw ContractError("horizon and depths must be at least 1");
    if (process.kind() == ProcessKind::iid) return 0.0;
    const std::size_t last_i = process.is_stationary() ? std::min(horizon_i, depth_a) : horizon_i;
    double best = 0.0;
    for (std::size_t i = 1; i <= last_i; ++i) {
        const std::size_t a = i >= depth_a ? i - depth_a + 1 : 1;
        best = std::max(best, alpha_between(process, a, i, i + n, i + n + depth_b - 1));
    }
    return best;
}

double MixingProfile::fitted_bound(std::size_t n) const {
    return poly_constant * std::pow(static_cast<double>(n), -poly_gamma);
}

MixingProfile mixing_profile(const SelectionProcess& process, std::size_t n_max, double gamma, std::size_t horizon_i,
                             std::size_t depth_a, std::size_t depth_b) {
    if (n_max < 1) throw ContractError("mixing profile needs n_max >= 1");
    if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
    MixingProfile prof;
    prof.poly_gamma = gamma;
    for (std::size_t n = 1; n <= n_max; ++n)
        prof.raw.push_back(estimate_alpha(process, n, horizon_i, depth_a, depth_b));
    prof.alpha = prof.raw;
    for (std::size_t k = prof.alpha.size() - 1; k-- > 0;) prof.alpha[k] = std::max(prof.alpha[k], prof.alpha[k + 1]);

    for (std::size_t k = 0; k < prof.alpha.size(); ++k)
        prof.poly_constant =
            std::max(prof.poly_constant, prof.alpha[k] * std::pow(static_cast<double>(k + 1), gamma));

    // Exponential fit on the part of the profile well above rounding noise.
    std::vector<double> xs, ys;
    const double floor = prof.alpha.front() * 1e-9;
    for (std::size_t k = 0; k < prof.alpha.size(); ++k)
        if (prof.alpha[k] > floor && prof.alpha[k] > 0.0) {
            xs.push_back(static_cast<double>(k + 1));
            ys.push_back(std::log(prof.alpha[k]));
        }
    if (xs.size() < 2) {
        prof.form = "zero";
        return prof;
    }
    const LinearFit fit = linear_fit(xs, ys);
    prof.form = "exponential";
    prof.log_rate = fit.slope;
    prof.exp_rate = std::exp(fit.slope);
    prof.exp_constant = std::exp(fit.intercept);
    return prof;
}

double CoordinateFunction::operator()(const OmegaSequence& omega) const {
    if (first < 1 || last < first) throw ContractError("coordinate function has an empty support");
    require_length(omega, last);
    return fn(std::span<const double>(omega.letters).subspan(first - 1, last - first + 1));
}

CoordinateFunction letter_indicator(std::size_t coordinate, double letter) {
    return {coordinate, coordinate, [letter](std::span<const double> w) { return w[0] == letter ? 1.0 : 0.0; }, 1.0};
}

MixingCheck check_strong_mixing_inequality(const SelectionProcess& process, const CoordinateFunction& u,
                                           const CoordinateFunction& v, std::size_t gap, std::size_t samples,
                                           std::uint64_t seed) {
    require_finite(process, "strong-mixing check");
    if (u.first < 1 || u.last < u.first || v.last < v.first)
        throw ContractError("coordinate functions need non-empty 1-based supports");
    if (gap < 1 || v.first < u.last + gap)
        throw ContractError("v must depend only on coordinates at least " + std::to_string(gap) +
                            " after the last coordinate of u");
    if (samples < 2) throw ContractError("strong-mixing check needs at least 2 samples");

    std::vector<double> us(samples), vs(samples);
    std::vector<double> letters;
    for (std::size_t s = 0; s < samples; ++s) {
        fill_letters(process, CounterRng(seed, Stream::mixing_samples, s), v.last, letters);
        const std::span<const double> w(letters);
        us[s] = u.fn(w.subspan(u.first - 1, u.last - u.first + 1));
        vs[s] = v.fn(w.subspan(v.first - 1, v.last - v.first + 1));
    }
    const std::vector<double> weights(samples, 1.0 / static_cast<double>(samples));
    const double mu = weighted_mean(us, weights);
    const double mv = weighted_mean(vs, weights);
    RunningMoments prod;
    for (std::size_t s = 0; s < samples; ++s) prod.add((us[s] - mu) * (vs[s] - mv));

    MixingCheck out;
    out.estimate = std::abs(prod.mean());
    out.standard_error = prod.standard_error();

    const JointWindows jw = joint_windows(process, u.first, u.last, v.first, v.last);
    std::vector<double> ua(jw.a_words.count), vb(jw.b_words.count);
    std::vector<double> buf;
    for (std::size_t w = 0; w < jw.a_words.count; ++w) {
        buf.resize(jw.a_words.length);
        for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = process.alphabet()[jw.a_words.at(w, k)];
        ua[w] = u.fn(buf);
    }
    for (std::size_t w = 0; w < jw.b_words.count; ++w) {
        buf.resize(jw.b_words.length);
        for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = process.alphabet()[jw.b_words.at(w, k)];
        vb[w] = v.fn(buf);
    }
    CompensatedSum euv, eu, ev;
    for (std::size_t i = 0; i < ua.size(); ++i) {
        eu.add(jw.pa[static_cast<Eigen::Index>(i)] * ua[i]);
        for (std::size_t j = 0; j < vb.size(); ++j)
            euv.add(jw.joint(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * ua[i] * vb[j]);
    }
    for (std::size_t j = 0; j < vb.size(); ++j) ev.add(jw.pb[static_cast<Eigen::Index>(j)] * vb[j]);
    out.exact = euv.value() - eu.value() * ev.value();

    out.alpha = process.kind() == ProcessKind::iid
                    ? 0.0
                    : max_block_sum(jw.joint - jw.pa * jw.pb.transpose());
    out.bound = 4.0 * u.sup_norm * v.sup_norm * out.alpha;
    out.pass = out.estimate <= out.bound + 3.0 * out.standard_error;
    return out;
}

double exact_expectation(const SelectionProcess& process, const CoordinateFunction& g, std::size_t shift_by) {
    require_finite(process, "exact expectation");
    return window_expectation(process, process.marginal(g.first + shift_by), g);
}

AmsAverage ams_average_weights(const SelectionProcess& process, const CoordinateFunction& g, std::size_t n) {
    require_finite(process, "AMS averaging");
    if (n < 1) throw ContractError("AMS average needs n >= 1");
    AmsAverage out;
    out.stationary = window_expectation(process, process.stationary(), g);
    Eigen::VectorXd law = process.marginal(g.first);
    const Eigen::MatrixXd pt = process.transition().transpose();
    CompensatedSum total;
    for (std::size_t i = 0; i < n; ++i) {
        total.add(window_expectation(process, law, g));
        if (!process.is_stationary()) law = pt * law;
    }
    out.average = total.value() / static_cast<double>(n);
    out.difference = process.is_stationary() ? 0.0 : out.average - out.stationary;
    return out;
}

double fit_ams_zeta(const SelectionProcess& process, const CoordinateFunction& g, std::span<const std::size_t> ns) {
    std::vector<double> xs, ys;
    for (std::size_t n : ns) {
        const double diff = std::abs(ams_average_weights(process, g, n).difference);
        if (diff > 1e-15) {
            xs.push_back(std::log(static_cast<double>(n)));
            ys.push_back(std::log(diff));
        }
    }
    if (xs.empty()) return std::numeric_limits<double>::infinity();
    if (xs.size() < 2) throw DataError("AMS zeta fit needs at least two nonzero differences");
    return -linear_fit(xs, ys).slope;
}

}  // namespace qclt
