#include "qclt/map_core.hpp"

#include "qclt/error.hpp"
#include "qclt/numeric.hpp"
#include "qclt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qclt {

Point point_from_unit(double x) {
    if (!(x >= 0.0 && x < 1.0))
        throw DomainError("point outside [0,1): " + std::to_string(x));
    const long double scaled = static_cast<long double>(x) * static_cast<long double>(kModulus);
    auto r = static_cast<std::uint64_t>(std::llround(scaled));
    if (r >= kModulus) r = 0;
    return Point{r};
}

namespace {

constexpr double kMaxSlope = 1.0e6;

std::uint64_t residue_of_fraction(double x) {
    double f = x - std::floor(x);
    if (f >= 1.0) f = 0.0;
    return point_from_unit(f).residue;
}

std::uint64_t sub_mod(std::uint64_t a, std::uint64_t b) noexcept {
    return a >= b ? a - b : a + kModulus - b;
}

std::uint64_t add_mod(std::uint64_t a, std::uint64_t b) noexcept {
    const std::uint64_t s = a + b;
    return s >= kModulus ? s - kModulus : s;
}

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string to_string(MapFamily family) {
    switch (family) {
        case MapFamily::beta: return "beta";
        case MapFamily::doubling: return "doubling";
        case MapFamily::tent: return "tent";
        case MapFamily::custom_table: return "custom-table";
    }
    return "unknown";
}

FixedSlope fixed_slope(double slope) {
    if (!std::isfinite(slope) || slope < 0.0 || slope > kMaxSlope)
        throw DomainError("slope not representable: " + format_number(slope));
    return FixedSlope{static_cast<std::uint64_t>(std::llround(std::ldexp(slope, 32)))};
}

MapSystem MapSystem::beta() { return MapSystem(MapFamily::beta); }
MapSystem MapSystem::doubling() { return MapSystem(MapFamily::doubling); }
MapSystem MapSystem::tent() { return MapSystem(MapFamily::tent); }

MapSystem MapSystem::custom(std::vector<BranchTable> tables) {
    if (tables.empty()) throw DomainError("custom map family needs at least one table");
    MapSystem system(MapFamily::custom_table);
    for (std::size_t t = 0; t < tables.size(); ++t) {
        const auto& table = tables[t];
        const std::string where = "table " + std::to_string(t);
        if (table.empty()) throw DomainError(where + " has no branches");
        if (table.front().lo != 0.0 || table.back().hi != 1.0)
            throw DomainError(where + " must cover [0,1)");
        std::vector<CompiledBranch> compiled;
        for (std::size_t b = 0; b < table.size(); ++b) {
            const Branch& br = table[b];
            if (!(br.lo < br.hi)) throw DomainError(where + ": empty branch " + std::to_string(b));
            if (b > 0 && table[b - 1].hi != br.lo)
                throw DomainError(where + ": branches are not contiguous at " + std::to_string(b));
            if (!std::isfinite(br.offset)) throw DomainError(where + ": non-finite offset");
            CompiledBranch c;
            c.lo = point_from_unit(br.lo).residue;
            c.hi = br.hi >= 1.0 ? kModulus : point_from_unit(br.hi).residue;
            c.offset = residue_of_fraction(br.offset);
            c.negative = br.slope < 0.0;
            c.slope = fixed_slope(std::abs(br.slope));
            compiled.push_back(c);
        }
        system.compiled_.push_back(std::move(compiled));
    }
    system.tables_ = std::move(tables);
    return system;
}

std::string MapSystem::id() const {
    if (family_ != MapFamily::custom_table) return to_string(family_);
    return to_string(family_) + "[" + std::to_string(tables_.size()) + "]";
}

std::size_t MapSystem::table_index(double letter) const {
    if (!(letter >= 0.0) || letter != std::floor(letter) ||
        letter >= static_cast<double>(compiled_.size()))
        throw DomainError("custom-table letter must index a table: " + format_number(letter));
    return static_cast<std::size_t>(letter);
}

void MapSystem::check_letter(double letter) const {
    switch (family_) {
        case MapFamily::beta:
            if (!(letter > 1.0 && letter <= kMaxSlope))
                throw DomainError("beta letter must exceed 1: " + format_number(letter));
            return;
        case MapFamily::doubling: return;
        case MapFamily::tent:
            if (!(letter > 0.0 && letter <= 2.0))
                throw DomainError("tent slope must lie in (0, 2]: " + format_number(letter));
            return;
        case MapFamily::custom_table: table_index(letter); return;
    }
}

Point MapSystem::apply(double letter, Point p) const {
    Point out = p;
    advance(letter, std::span<Point>(&out, 1));
    return out;
}

void MapSystem::advance(double letter, std::span<Point> points) const {
    check_letter(letter);
    switch (family_) {
        case MapFamily::doubling:
            for (Point& p : points) p.residue = add_mod(p.residue, p.residue);
            return;
        case MapFamily::beta: {
            const FixedSlope s = fixed_slope(letter);
            for (Point& p : points) p.residue = mul_slope(p.residue, s);
            return;
        }
        case MapFamily::tent: {
            const FixedSlope s = fixed_slope(letter);
            for (Point& p : points) {
                const std::uint64_t m = std::min(p.residue, kModulus - p.residue);
                p.residue = mul_slope(m, s);
            }
            return;
        }
        case MapFamily::custom_table: {
            const auto& branches = compiled_[table_index(letter)];
            for (Point& p : points) {
                auto it = std::upper_bound(branches.begin(), branches.end(), p.residue,
                                           [](std::uint64_t r, const CompiledBranch& b) { return r < b.lo; });
                const CompiledBranch& b = *(it - 1);
                const std::uint64_t step = mul_slope(p.residue - b.lo, b.slope);
                p.residue = b.negative ? sub_mod(b.offset, step) : add_mod(b.offset, step);
            }
            return;
        }
    }
}

double MapSystem::slope_bound(double letter) const {
    check_letter(letter);
    switch (family_) {
        case MapFamily::beta: return letter;
        case MapFamily::doubling: return 2.0;
        case MapFamily::tent: return letter;
        case MapFamily::custom_table: {
            double s = 0.0;
            for (const Branch& b : tables_[table_index(letter)]) s = std::max(s, std::abs(b.slope));
            return s;
        }
    }
    return 0.0;
}

double MapSystem::max_slope(std::span<const double> letters) const {
    double s = 0.0;
    for (double a : letters) s = std::max(s, slope_bound(a));
    return s;
}

void MapSystem::validate(std::span<const double> letters, std::size_t grid_size) const {
    if (grid_size == 0) throw DomainError("validation grid is empty");
    for (double a : letters) {
        check_letter(a);
        for (std::size_t k = 0; k < grid_size; ++k) {
            const double x = static_cast<double>(k) / static_cast<double>(grid_size);
            const double y = apply_map(*this, a, x);
            if (!(y >= 0.0 && y < 1.0))
                throw DomainError("map " + id() + " letter " + format_number(a) + " leaves [0,1) at x=" +
                                  format_number(x));
        }
    }
}

Observable::Observable(std::vector<Component> components) : components_(std::move(components)) {
    if (components_.empty()) throw DomainError("observable needs at least one component");
    for (const auto& c : components_)
        if (!std::isfinite(c.sup_bound) || c.sup_bound < 0.0)
            throw DomainError("observable " + c.name + " has no finite sup bound");
}

Observable Observable::cos2pi(double frequency) {
    const double w = 2.0 * std::numbers::pi * frequency;
    return Observable({{"cos2pi", [w](std::span<const Point> pts, std::span<double> out) {
                            for (std::size_t i = 0; i < pts.size(); ++i) out[i] = std::cos(w * pts[i].value());
                        },
                        1.0}});
}

Observable Observable::sin2pi(double frequency) {
    const double w = 2.0 * std::numbers::pi * frequency;
    return Observable({{"sin2pi", [w](std::span<const Point> pts, std::span<double> out) {
                            for (std::size_t i = 0; i < pts.size(); ++i) out[i] = std::sin(w * pts[i].value());
                        },
                        1.0}});
}

Observable Observable::constant(double c) {
    if (!std::isfinite(c)) throw DomainError("constant observable must be finite");
    return Observable({{"constant", [c](std::span<const Point>, std::span<double> out) {
                            std::fill(out.begin(), out.end(), c);
                        },
                        std::abs(c)}});
}

Observable Observable::coboundary(const Observable& g, MapSystem system, double letter) {
    if (g.dimension() != 1) throw DomainError("coboundary needs a scalar g");
    system.check_letter(letter);
    Component base = g.components_.front();
    Kernel kernel = [base, system = std::move(system), letter](std::span<const Point> pts, std::span<double> out) {
        std::vector<Point> moved(pts.begin(), pts.end());
        system.advance(letter, moved);
        std::vector<double> shifted(pts.size());
        base.kernel(pts, out);
        base.kernel(moved, shifted);
        for (std::size_t i = 0; i < pts.size(); ++i) out[i] -= shifted[i];
    };
    return Observable({{"coboundary(" + base.name + ")", std::move(kernel), 2.0 * base.sup_bound}});
}

Observable Observable::piecewise_linear(std::vector<std::pair<double, double>> knots) {
    if (knots.empty()) throw DomainError("piecewise-linear observable needs knots");
    std::sort(knots.begin(), knots.end());
    double sup = 0.0;
    for (auto [x, y] : knots) {
        if (!std::isfinite(x) || !std::isfinite(y)) throw DomainError("non-finite knot");
        sup = std::max(sup, std::abs(y));
    }
    Kernel kernel = [knots](std::span<const Point> pts, std::span<double> out) {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double x = pts[i].value();
            auto it = std::upper_bound(knots.begin(), knots.end(), x,
                                       [](double v, const std::pair<double, double>& k) { return v < k.first; });
            if (it == knots.begin()) {
                out[i] = knots.front().second;
            } else if (it == knots.end()) {
                out[i] = knots.back().second;
            } else {
                const auto& [x0, y0] = *(it - 1);
                const auto& [x1, y1] = *it;
                out[i] = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
    };
    return Observable({{"piecewise-linear", std::move(kernel), sup}});
}

Observable Observable::stack(const std::vector<Observable>& parts) {
    std::vector<Component> all;
    for (const auto& p : parts) all.insert(all.end(), p.components_.begin(), p.components_.end());
    return Observable(std::move(all));
}

double Observable::sup_bound() const noexcept {
    double s = 0.0;
    for (const auto& c : components_) s = std::max(s, c.sup_bound);
    return s;
}

std::string Observable::name() const {
    std::string s;
    for (std::size_t a = 0; a < components_.size(); ++a) {
        if (a) s += ",";
        s += components_[a].name;
    }
    return components_.size() == 1 ? s : "(" + s + ")";
}

Observable Observable::project(std::span<const double> v) const {
    if (v.size() != components_.size())
        throw ContractError("projection vector has dimension " + std::to_string(v.size()) + ", observable has " +
                            std::to_string(components_.size()));
    std::vector<double> coef(v.begin(), v.end());
    std::vector<Component> comps = components_;
    double sup = 0.0;
    for (std::size_t a = 0; a < comps.size(); ++a) sup += std::abs(coef[a]) * comps[a].sup_bound;
    Kernel kernel = [coef, comps](std::span<const Point> pts, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        std::vector<double> buf(pts.size());
        for (std::size_t a = 0; a < comps.size(); ++a) {
            if (coef[a] == 0.0) continue;
            comps[a].kernel(pts, buf);
            for (std::size_t i = 0; i < pts.size(); ++i) out[i] += coef[a] * buf[i];
        }
    };
    return Observable({{"projection", std::move(kernel), sup}});
}

Observable Observable::scalar(std::size_t alpha) const { return Observable({components_.at(alpha)}); }

void Observable::evaluate(std::span<const Point> points, std::span<double> out, std::size_t alpha) const {
    if (out.size() < points.size()) throw ContractError("observable output buffer too small");
    components_.at(alpha).kernel(points, out.first(points.size()));
}

double Observable::evaluate(double x, std::size_t alpha) const {
    const Point p = point_from_unit(x);
    double out = 0.0;
    evaluate(std::span<const Point>(&p, 1), std::span<double>(&out, 1), alpha);
    return out;
}

Ensemble Ensemble::grid(std::size_t m) {
    return grid(m, [](double) { return 1.0; });
}

Ensemble Ensemble::grid(std::size_t m, const std::function<double(double)>& density) {
    if (m == 0) throw DomainError("grid ensemble needs at least one point");
    std::vector<Point> pts(m);
    std::vector<double> w(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double x = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
        pts[k] = point_from_unit(x);
        w[k] = density(x);
    }
    return weighted(std::move(pts), std::move(w), EnsembleMode::stratified_grid);
}

Ensemble Ensemble::sample(std::size_t m, std::uint64_t seed, std::uint64_t stream_index) {
    if (m == 0) throw DomainError("sample ensemble needs at least one point");
    const CounterRng rng(seed, Stream::ensemble, stream_index);
    std::vector<Point> pts(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::uint64_t r = rng.bits(k) >> 3;
        pts[k].residue = r >= kModulus ? 0 : r;
    }
    std::vector<double> w(m, 1.0 / static_cast<double>(m));
    return Ensemble(std::move(pts), std::move(w), EnsembleMode::iid_sample);
}

Ensemble Ensemble::weighted(std::vector<Point> points, std::vector<double> weights, EnsembleMode mode) {
    if (points.size() != weights.size()) throw DomainError("points and weights differ in length");
    if (points.empty()) throw DomainError("ensemble is empty");
    CompensatedSum total;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("ensemble weights must be finite and nonnegative");
        total.add(w);
    }
    const double t = total.value();
    if (!(t > 0.0)) throw DomainError("ensemble weights vanish");
    for (double& w : weights) w /= t;
    for (const Point& p : points)
        if (p.residue >= kModulus) throw DomainError("ensemble point outside [0,1)");
    return Ensemble(std::move(points), std::move(weights), mode);
}

double Ensemble::effective_size() const noexcept {
    CompensatedSum s;
    for (double w : weights_) s.add(w * w);
    return 1.0 / s.value();
}

Ensemble Ensemble::with_points(std::vector<Point> points) const {
    if (points.size() != points_.size()) throw ContractError("replacement points differ in count");
    return Ensemble(std::move(points), weights_, mode_);
}

std::size_t horizon_cap(const Ensemble& ensemble, double max_slope) {
    if (ensemble.mode() != EnsembleMode::stratified_grid || max_slope <= 1.0) return kNoHorizonCap;
    const double levels = std::floor(std::log(static_cast<double>(ensemble.size())) / std::log(max_slope) + 1e-9);
    return levels > 2.0 ? static_cast<std::size_t>(levels) - 2 : 0;
}

void require_within_cap(const Ensemble& ensemble, double max_slope, std::size_t horizon) {
    const std::size_t cap = horizon_cap(ensemble, max_slope);
    if (horizon > cap)
        throw PrecisionError("horizon " + std::to_string(horizon) + " exceeds the grid precision cap n_max=" +
                             std::to_string(cap) + " (grid size " + std::to_string(ensemble.size()) +
                             ", max slope " + format_number(max_slope) + ")");
}

void require_length(const OmegaSequence& omega, std::size_t n) {
    if (n > omega.size())
        throw InsufficientRandomnessError("horizon " + std::to_string(n) + " exceeds driving sequence length " +
                                          std::to_string(omega.size()));
}

double apply_map(const MapSystem& system, double letter, double x) {
    return system.apply(letter, point_from_unit(x)).value();
}

Point cocycle_apply(const MapSystem& system, const OmegaSequence& omega, std::size_t n, Point x) {
    require_length(omega, n);
    for (std::size_t i = 0; i < n; ++i) x = system.apply(omega.letters[i], x);
    return x;
}

double cocycle_apply(const MapSystem& system, const OmegaSequence& omega, std::size_t n, double x) {
    return cocycle_apply(system, omega, n, point_from_unit(x)).value();
}

std::pair<double, double> doubled_cocycle_apply(const MapSystem& system, const OmegaSequence& omega, std::size_t n,
                                                double x, double y) {
    return {cocycle_apply(system, omega, n, x), cocycle_apply(system, omega, n, y)};
}

Ensemble push_ensemble(const MapSystem& system, const OmegaSequence& omega, std::size_t n, const Ensemble& ensemble) {
    require_length(omega, n);
    std::vector<Point> pts(ensemble.points().begin(), ensemble.points().end());
    for (std::size_t i = 0; i < n; ++i) system.advance(omega.letters[i], pts);
    return ensemble.with_points(std::move(pts));
}

double uniform_cdf_deviation(const Ensemble& ensemble) {
    std::vector<std::pair<double, double>> vw(ensemble.size());
    for (std::size_t k = 0; k < ensemble.size(); ++k) vw[k] = {ensemble.points()[k].value(), ensemble.weights()[k]};
    std::sort(vw.begin(), vw.end());
    double before = 0.0, worst = 0.0;
    for (auto [x, w] : vw) {
        const double after = before + w;
        worst = std::max({worst, after - x, x - before});
        before = after;
    }
    return worst;
}

double cdf_distance(const Ensemble& a, const Ensemble& b) {
    // Merge both clouds; weights of b enter with a negative sign.
    std::vector<std::pair<std::uint64_t, double>> merged;
    merged.reserve(a.size() + b.size());
    for (std::size_t k = 0; k < a.size(); ++k) merged.emplace_back(a.points()[k].residue, a.weights()[k]);
    for (std::size_t k = 0; k < b.size(); ++k) merged.emplace_back(b.points()[k].residue, -b.weights()[k]);
    std::sort(merged.begin(), merged.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    CompensatedSum diff;
    double worst = 0.0;
    for (std::size_t k = 0; k < merged.size(); ++k) {
        diff.add(merged[k].second);
        if (k + 1 == merged.size() || merged[k + 1].first != merged[k].first)
            worst = std::max(worst, std::abs(diff.value()));
    }
    return worst;
}

}  // namespace qclt
