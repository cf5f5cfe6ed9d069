#include "qclt/rate_engine.hpp"

#include "qclt/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace qclt {

namespace {

constexpr double kEqualityTolerance = 1e-12;

bool equals(double a, double b) { return std::abs(a - b) <= kEqualityTolerance; }

std::string printf_g(const char* fmt, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, x);
    return buf;
}

void require_psi(double psi) {
    if (!(psi > 1.0)) throw ParameterError("psi must exceed 1");
}
void require_positive(double v, const char* name) {
    if (!(v > 0.0)) throw ParameterError(std::string(name) + " must be positive");
}

/// Case function shared by the Gal-Koksma conversion and the fluctuation rate.
RateSpec koksma_case(double beta, double delta) {
    if (equals(beta, 1.0)) return RateSpec::make(-0.5 + delta, 0.0);
    if (beta > 1.0) return RateSpec::make(-0.5, 1.5 + delta);
    return RateSpec::make(-beta / 2.0, 1.5 + delta);
}

}  // namespace

std::string format_exponent(double x) {
    if (x == 0.0) return "0";
    if (x == std::round(x)) return printf_g("%.0f", x);
    if (equals(std::abs(x), 0.5)) return x < 0 ? "-1/2" : "1/2";
    const double milli = std::round(x * 1000.0);
    if (std::abs(x * 1000.0 - milli) < 1e-6) return printf_g("%.10g", milli / 1000.0);
    for (int d = 2; d <= 12; ++d) {
        const double num = std::round(x * d);
        if (std::abs(x - num / d) < 1e-9) return printf_g("%.0f", num) + "/" + std::to_string(d);
    }
    return printf_g("%.6g", x);
}

std::string describe_rate(double power, double log_power) {
    std::string s;
    if (power != 0.0) s = "n^{" + format_exponent(power) + "}";
    if (log_power != 0.0) {
        if (!s.empty()) s += " ";
        s += equals(log_power, 1.0) ? std::string("log n") : "log^{" + format_exponent(log_power) + "} n";
    }
    return s.empty() ? "1" : s;
}

RateSpec RateSpec::make(double power, double log_power) {
    return RateSpec{power, log_power, describe_rate(power, log_power)};
}

double RateSpec::evaluate(double n) const { return std::pow(n, power) * std::pow(std::log(n), log_power); }

bool dominates(const RateSpec& a, const RateSpec& b) noexcept {
    if (a.power != b.power) return a.power > b.power;
    return a.log_power > b.log_power;
}

double h_zeta(double zeta, double n) {
    require_positive(zeta, "zeta");
    if (!(n >= 2.0)) throw ParameterError("h_zeta needs n >= 2");
    if (equals(zeta, 1.0)) return std::log(n) / n;
    if (zeta > 1.0) return 1.0 / n;
    return std::pow(n, -zeta);
}

RateSpec gal_koksma_rate(double beta, double delta) {
    require_positive(beta, "beta");
    require_positive(delta, "delta");
    return koksma_case(beta, delta);
}

RateSpec variance_mean_gap_rate(double psi) {
    require_psi(psi);
    if (equals(psi, 2.0)) return RateSpec::make(-1.0, 1.0);
    if (psi > 2.0) return RateSpec::make(-1.0, 0.0);
    return RateSpec::make(1.0 - psi, 0.0);
}

double variance_mean_gap_bound(double psi, double n) {
    const RateSpec r = variance_mean_gap_rate(psi);
    if (!(n >= 2.0)) throw ParameterError("gap bound needs n >= 2");
    return r.evaluate(n);
}

RateSpec fluctuation_rate(double psi, double gamma, double delta) {
    require_psi(psi);
    require_positive(gamma, "gamma");
    require_positive(delta, "delta");
    return koksma_case(std::min(psi - 1.0, gamma), delta);
}

RateSpec mean_convergence_rate(double psi, double zeta) {
    require_psi(psi);
    require_positive(zeta, "zeta");
    if (equals(zeta, 1.0)) return RateSpec::make(1.0 / psi - 1.0, 1.0 - 1.0 / psi);
    if (zeta > 1.0) return RateSpec::make(1.0 / psi - 1.0, 0.0);
    return RateSpec::make(zeta / psi - zeta, 0.0);
}

RateSpec main_rate(double psi, double gamma, double zeta, double delta) {
    const RateSpec fluct = fluctuation_rate(psi, gamma, delta);
    require_positive(zeta, "zeta");
    if (zeta >= 1.0 - kEqualityTolerance) return fluct;
    const RateSpec mean = mean_convergence_rate(psi, zeta);
    return dominates(mean, fluct) ? mean : fluct;
}

std::vector<double> S_sum_profile(std::span<const std::size_t> ms, const BoundModel& model) {
    if (ms.empty()) return {};
    const std::size_t top = *std::max_element(ms.begin(), ms.end());
    std::vector<double> eta(top + 1), alpha(top + 1);
    for (std::size_t n = 0; n <= top; ++n) {
        eta[n] = model.eta.at(n);
        alpha[n] = model.alpha.at(n);
    }
    // inner[D] = sum_{t<D} min_{u<=D} { eta(D-u) + alpha(u) eta(t) }, D = k - j.
    std::vector<double> inner(top + 1, 0.0);
    for (std::size_t D = 1; D <= top; ++D) {
        CompensatedSum acc;
        for (std::size_t t = 0; t < D; ++t) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t u = 0; u <= D; ++u) best = std::min(best, eta[D - u] + alpha[u] * eta[t]);
            acc.add(best);
        }
        inner[D] = acc.value();
    }
    std::vector<double> out;
    for (std::size_t m : ms) {
        CompensatedSum s;
        for (std::size_t D = 1; D <= m; ++D) s.add(eta[m - D] * inner[D]);
        out.push_back(s.value());
    }
    return out;
}

double S_sum(std::size_t i, std::size_t k, const BoundModel& model) {
    if (i > k) throw ParameterError("S(i,k) needs i <= k");
    const std::size_t m[] = {k - i};
    return S_sum_profile(m, model).front();
}

SandwichAudit sandwich_audit(const BoundModel& model, std::span<const std::size_t> ms) {
    if (ms.size() < 8) throw DataError("sandwich audit needs at least 8 values of m");
    for (std::size_t m : ms)
        if (m < 1) throw DataError("sandwich audit needs m >= 1");
    SandwichAudit out;
    out.expected_slope = -std::min(model.psi() - 1.0, model.gamma());
    const auto s = S_sum_profile(ms, model);
    std::vector<double> xs, ys;
    out.c1 = std::numeric_limits<double>::infinity();
    const double eta0 = model.eta.at(std::size_t{0});
    out.printed_c1 = 0.5 * eta0 * eta0 + 0.5 * eta0;
    out.printed_c1_holds = true;
    for (std::size_t t = 0; t < ms.size(); ++t) {
        const std::size_t m = ms[t];
        const double md = static_cast<double>(m);
        SandwichRow row{m, s[t], md * model.eta.at(m) + model.alpha.at(m),
                        md * model.eta.at(m / 4) + model.alpha.at(m / 4)};
        out.c1 = std::min(out.c1, row.s / row.lower);
        out.c2 = std::max(out.c2, row.s / row.upper);
        if (row.s < out.printed_c1 * row.lower) out.printed_c1_holds = false;
        out.rows.push_back(row);
        xs.push_back(std::log(md));
        ys.push_back(std::log(row.s));
    }
    out.fit = linear_fit(xs, ys);
    const std::size_t half = xs.size() / 2;
    out.tail_slope = linear_fit(std::span<const double>(xs).subspan(half), std::span<const double>(ys).subspan(half)).slope;
    out.slope_pass = std::abs(out.fit.slope - out.expected_slope) <= 0.1;
    return out;
}

RateFit fit_rate(std::span<const double> n, std::span<const double> values) {
    if (n.size() != values.size()) throw DataError("rate fit needs matching n and values");
    if (n.size() < 3) throw DataError("rate fit needs at least 3 points");
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < n.size(); ++k) {
        if (!(values[k] > 0.0) || !(n[k] > 0.0)) throw DataError("rate fit needs positive n and values");
        xs.push_back(std::log(n[k]));
        ys.push_back(std::log(values[k]));
    }
    const LinearFit f = linear_fit(xs, ys);
    return {f.slope, f.ci_low, f.ci_high, f.slope_se, f.points};
}

std::vector<GoldenRow> load_golden_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open golden table " + path);
    std::vector<GoldenRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        GoldenRow row;
        std::string args;
        if (!std::getline(ls, row.function, '\t') || !std::getline(ls, args, '\t') ||
            !std::getline(ls, row.expected))
            throw DataError("golden table line " + std::to_string(lineno) + " needs three tab-separated fields");
        std::istringstream as(args);
        std::string a;
        while (std::getline(as, a, ',')) row.args.push_back(std::stod(a));
        rows.push_back(std::move(row));
    }
    return rows;
}

GoldenResult check_golden_row(const GoldenRow& row) {
    GoldenResult r{row, "", false};
    const auto& a = row.args;
    auto need = [&](std::size_t n) {
        if (a.size() != n) throw DataError(row.function + " expects " + std::to_string(n) + " arguments");
    };
    auto value_match = [&](double v) {
        r.actual = printf_g("%.17g", v);
        const double e = std::stod(row.expected);
        r.pass = std::abs(v - e) <= 1e-12 * std::max(1.0, std::abs(e));
    };
    auto rate_match = [&](const RateSpec& s) {
        r.actual = s.description;
        r.pass = r.actual == row.expected;
    };
    if (row.function == "h_zeta") {
        need(2);
        value_match(h_zeta(a[0], a[1]));
    } else if (row.function == "variance_mean_gap_bound") {
        need(2);
        value_match(variance_mean_gap_bound(a[0], a[1]));
    } else if (row.function == "variance_mean_gap_rate") {
        need(1);
        rate_match(variance_mean_gap_rate(a[0]));
    } else if (row.function == "gal_koksma_rate") {
        need(2);
        rate_match(gal_koksma_rate(a[0], a[1]));
    } else if (row.function == "fluctuation_rate") {
        need(3);
        rate_match(fluctuation_rate(a[0], a[1], a[2]));
    } else if (row.function == "mean_convergence_rate") {
        need(2);
        rate_match(mean_convergence_rate(a[0], a[1]));
    } else if (row.function == "main_rate") {
        need(4);
        rate_match(main_rate(a[0], a[1], a[2], a[3]));
    } else {
        throw DataError("unknown golden function " + row.function);
    }
    return r;
}

std::string default_golden_path() { return std::string(QCLT_DATA_DIR) + "/golden_rates.v1.tsv"; }

}  // namespace qclt
