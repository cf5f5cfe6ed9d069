#pragma once

#include "qclt/lattice.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qclt {

enum class MapFamily { beta, doubling, tent, custom_table };

std::string to_string(MapFamily family);

/// One branch of a piecewise-linear map: x in [lo, hi) goes to
/// offset + slope * (x - lo), taken mod 1.
struct Branch {
    double lo = 0.0;
    double hi = 1.0;
    double slope = 2.0;
    double offset = 0.0;
};

using BranchTable = std::vector<Branch>;

/// A parametrized family {T_a} of self-maps of [0,1). How a letter a selects
/// the map depends on the family:
///   beta        x -> a*x mod 1, a > 1
///   doubling    x -> 2x mod 1 (letter ignored)
///   tent        x -> a*min(x, 1-x), 0 < a <= 2
///   custom      the branch table with index a
/// All maps are evaluated exactly on the lattice (see lattice.hpp) when the
/// slopes are integers, and to within one lattice unit otherwise.
class MapSystem {
public:
    static MapSystem beta();
    static MapSystem doubling();
    static MapSystem tent();
    /// Throws DomainError unless every table covers [0,1) with contiguous branches.
    static MapSystem custom(std::vector<BranchTable> tables);

    MapFamily family() const noexcept { return family_; }
    std::string id() const;

    /// Throws DomainError when the letter does not name a map of this family.
    void check_letter(double letter) const;

    Point apply(double letter, Point p) const;

    /// Applies T_letter to every point in place.
    void advance(double letter, std::span<Point> points) const;

    /// Largest |slope| of T_letter.
    double slope_bound(double letter) const;

    /// Largest slope over a set of letters.
    double max_slope(std::span<const double> letters) const;

    /// Checks that every T_letter maps a test grid into [0,1) through the
    /// double-valued interface. Throws DomainError on the first violation.
    void validate(std::span<const double> letters, std::size_t grid_size = 4096) const;

    const std::vector<BranchTable>& tables() const noexcept { return tables_; }

private:
    struct CompiledBranch {
        std::uint64_t lo = 0;  // residue
        std::uint64_t hi = 0;
        std::uint64_t offset = 0;
        FixedSlope slope;
        bool negative = false;
    };

    explicit MapSystem(MapFamily family) : family_(family) {}

    std::size_t table_index(double letter) const;

    MapFamily family_;
    std::vector<BranchTable> tables_;
    std::vector<std::vector<CompiledBranch>> compiled_;
};

/// Fixed-point encoding of a real slope. Throws DomainError for slopes that are
/// non-finite, negative or too large for the 32.32 representation.
FixedSlope fixed_slope(double slope);

/// A bounded observable f : [0,1) -> R^d. Each component is evaluated on a
/// whole batch of points at once.
class Observable {
public:
    using Kernel = std::function<void(std::span<const Point>, std::span<double>)>;

    struct Component {
        std::string name;
        Kernel kernel;
        double sup_bound = 0.0;
    };

    Observable() = default;
    explicit Observable(std::vector<Component> components);

    static Observable cos2pi(double frequency = 1.0);
    static Observable sin2pi(double frequency = 1.0);
    static Observable constant(double c);
    /// f = g - g o T_letter, evaluated exactly on the lattice map.
    static Observable coboundary(const Observable& g, MapSystem system, double letter);
    /// Linear interpolation through knots (x_k, y_k); constant outside the range.
    static Observable piecewise_linear(std::vector<std::pair<double, double>> knots);
    /// Stacks scalar observables into a vector observable.
    static Observable stack(const std::vector<Observable>& parts);

    std::size_t dimension() const noexcept { return components_.size(); }
    const Component& component(std::size_t alpha) const { return components_.at(alpha); }
    double sup_bound() const noexcept;
    std::string name() const;

    /// Scalar observable v^T f.
    Observable project(std::span<const double> v) const;

    /// Scalar observable made of a single component.
    Observable scalar(std::size_t alpha) const;

    void evaluate(std::span<const Point> points, std::span<double> out, std::size_t alpha = 0) const;
    double evaluate(double x, std::size_t alpha = 0) const;

private:
    std::vector<Component> components_;
};

enum class EnsembleMode { iid_sample, stratified_grid };

/// Discrete initial measure: points with nonnegative weights summing to 1.
class Ensemble {
public:
    /// Midpoint grid (k + 1/2)/m with equal weights.
    static Ensemble grid(std::size_t m);
    /// Midpoint grid reweighted by a nonnegative density.
    static Ensemble grid(std::size_t m, const std::function<double(double)>& density);
    /// m i.i.d. uniform points drawn from the counter RNG.
    static Ensemble sample(std::size_t m, std::uint64_t seed, std::uint64_t stream_index = 0);
    /// Arbitrary weighted cloud. Weights are normalized; throws DomainError
    /// when a weight is negative or all weights vanish.
    static Ensemble weighted(std::vector<Point> points, std::vector<double> weights, EnsembleMode mode);

    std::span<const Point> points() const noexcept { return points_; }
    std::span<const double> weights() const noexcept { return weights_; }
    EnsembleMode mode() const noexcept { return mode_; }
    std::size_t size() const noexcept { return points_.size(); }
    /// 1 / sum w^2.
    double effective_size() const noexcept;

    /// Same weights and mode, different points.
    Ensemble with_points(std::vector<Point> points) const;

private:
    Ensemble(std::vector<Point> points, std::vector<double> weights, EnsembleMode mode)
        : points_(std::move(points)), weights_(std::move(weights)), mode_(mode) {}

    std::vector<Point> points_;
    std::vector<double> weights_;
    EnsembleMode mode_ = EnsembleMode::iid_sample;
};

inline constexpr std::size_t kNoHorizonCap = std::numeric_limits<std::size_t>::max();

/// Largest iterate index usable for quadrature on a grid ensemble:
/// floor(log(m) / log(max slope)) - 2. Sample ensembles have no cap.
std::size_t horizon_cap(const Ensemble& ensemble, double max_slope);

/// Throws PrecisionError naming the cap when `horizon` exceeds it.
void require_within_cap(const Ensemble& ensemble, double max_slope, std::size_t horizon);

struct Provenance {
    std::string process_id;
    std::uint64_t seed = 0;
    std::uint64_t realization = 0;
};

/// A finite driving sequence (omega_1, ..., omega_N).
struct OmegaSequence {
    std::vector<double> letters;
    Provenance provenance;

    std::size_t size() const noexcept { return letters.size(); }
};

/// Throws InsufficientRandomnessError when n exceeds the sequence length.
void require_length(const OmegaSequence& omega, std::size_t n);

/// T_letter(x) for x in [0,1).
double apply_map(const MapSystem& system, double letter, double x);

/// phi(n, omega) x = T_{omega_n} o ... o T_{omega_1}(x).
Point cocycle_apply(const MapSystem& system, const OmegaSequence& omega, std::size_t n, Point x);
double cocycle_apply(const MapSystem& system, const OmegaSequence& omega, std::size_t n, double x);

/// phi^(2)(n, omega)(x, y) = (phi(n, omega) x, phi(n, omega) y).
std::pair<double, double> doubled_cocycle_apply(const MapSystem& system, const OmegaSequence& omega,
                                                std::size_t n, double x, double y);

/// Advances every point of the ensemble by phi(n, omega); weights unchanged.
Ensemble push_ensemble(const MapSystem& system, const OmegaSequence& omega, std::size_t n,
                       const Ensemble& ensemble);

/// Kolmogorov distance between the empirical CDF of a weighted cloud and the
/// uniform distribution on [0,1).
double uniform_cdf_deviation(const Ensemble& ensemble);

/// Kolmogorov distance between the weighted empirical CDFs of two clouds.
double cdf_distance(const Ensemble& a, const Ensemble& b);

}  // namespace qclt
