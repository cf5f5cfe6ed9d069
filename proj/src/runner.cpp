#include "qclt/runner.hpp"

#include "qclt/clt_harness.hpp"
#include "qclt/csv.hpp"
#include "qclt/error.hpp"
#include "qclt/limit_variance.hpp"
#include "qclt/parallel.hpp"
#include "qclt/quenched_stats.hpp"
#include "qclt/rate_engine.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>

namespace qclt {

namespace {

using json = nlohmann::ordered_json;

constexpr std::size_t kMixingHorizon = 12;
constexpr std::size_t kIdentityBase = 256;

double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

/// Most conservative polynomial exponent for c * rate^k over k = 2..k_last.
double polynomial_exponent(double rate, std::size_t k_last) {
    if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
    const double decay = -std::log(std::min(rate, 1.0));
    double out = std::numeric_limits<double>::infinity();
    for (std::size_t k = 2; k <= std::max<std::size_t>(3, k_last); ++k) {
        const double kk = static_cast<double>(k);
        out = std::min(out, kk * decay / std::log(kk));
    }
    return out;
}

json number(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? json("nan") : json(v > 0 ? "inf" : "-inf");
}

/// Everything a subcommand needs, built once from the config.
struct Context {
    const ExperimentConfig& config;
    MapSystem system;
    SelectionProcess process;
    Observable f;
    Observable f0;  // first component
    Ensemble ensemble;
    BoundModel bounds;
    MonteCarloOptions mc;
    std::filesystem::path dir;
    std::string hash;
    RunResult result;

    explicit Context(const ExperimentConfig& c)
        : config(c),
          system(build_map(c)),
          process(build_process(c)),
          f(build_observable(c, system)),
          f0(f.scalar(0)),
          ensemble(build_ensemble(c)),
          mc{c.realizations, c.seed, c.workers},
          dir(c.output),
          hash(c.hash()) {
        std::vector<double> letters = process.letter_support();
        for (double a : letters) system.check_letter(a);
        system.validate(letters, 1024);
        std::filesystem::create_directories(dir);
    }

    CsvWriter csv(const std::string& name, const std::vector<std::string>& columns) {
        const auto path = (dir / name).string();
        result.files.push_back(name);
        return CsvWriter(path, hash, columns);
    }

    void check(std::string name, bool pass, std::string detail = {}) {
        result.checks.push_back({std::move(name), pass, std::move(detail)});
    }

    std::size_t horizon() const { return config.schedule.back(); }
};

}  // namespace

std::string to_string(Command command) {
    switch (command) {
        case Command::simulate: return "simulate";
        case Command::variance: return "variance";
        case Command::limit: return "limit";
        case Command::rates: return "rates";
        case Command::positivity: return "positivity";
        case Command::clt: return "clt";
        case Command::audit: return "audit";
    }
    return "unknown";
}

bool RunResult::all_pass() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

BoundModel resolve_bounds(const ExperimentConfig& config, json* sources) {
    BoundModel b;
    json src;
    b.delta = config.delta.value_or(0.1);
    src["delta"] = "config";

    const MapSystem system = build_map(config);
    const SelectionProcess process = build_process(config);
    Observable f = build_observable(config, system);
    Ensemble ensemble = build_ensemble(config);

    // eta: fitted constant always; exponent from config or from the fit.
    {
        std::size_t K = config.k_max;
        if (ensemble.mode() == EnsembleMode::stratified_grid)
            K = std::min(K, horizon_cap(ensemble, system.max_slope(process.letter_support())));
        std::optional<CorrelationDecayFit> fit;
        if (K >= 1) {
            const OmegaSequence omega = sample_omega(process, K, config.seed, 0);
            const auto corr = lag_correlations(system, omega, f.scalar(0), ensemble, 0, K);
            const double floor = ensemble.mode() == EnsembleMode::iid_sample ? 3.0 / std::sqrt(ensemble.effective_size())
                                                                              : 1e-12;
            fit = fit_correlation_decay(corr, floor);
            src["eta_fit"] = {{"constant", number(fit->constant)}, {"rate", number(fit->rate)}, {"lags", K}};
        }
        b.eta.constant = fit ? std::max(fit->constant, 1e-300) : 1.0;
        if (config.psi) {
            b.eta.exponent = *config.psi;
            src["psi"] = "config";
        } else {
            if (!fit) throw ConfigError("bounds.psi", "cannot fit psi: no lags fit under the grid precision cap");
            b.eta.exponent = fit->eta.exponent;
            src["psi"] = "fit";
        }
    }
    // alpha
    if (config.gamma) {
        b.alpha.exponent = *config.gamma;
        src["gamma"] = "config";
    } else {
        src["gamma"] = "fit";
        if (process.is_continuous() || process.kind() == ProcessKind::iid) {
            b.alpha = {0.0, std::numeric_limits<double>::infinity()};
        } else {
            const MixingProfile prof = mixing_profile(process, kMixingHorizon);
            b.alpha.exponent = prof.form == "zero" ? std::numeric_limits<double>::infinity()
                                                   : polynomial_exponent(prof.exp_rate, kMixingHorizon);
            b.alpha.constant = prof.exp_constant;
            src["alpha_fit"] = {{"form", prof.form}, {"rate", number(prof.exp_rate)}, {"log_rate", number(prof.log_rate)}};
        }
    }
    // zeta
    if (config.zeta) {
        b.zeta = *config.zeta;
        src["zeta"] = "config";
    } else {
        b.zeta = process.is_stationary() ? 2.0 : 1.0;
        src["zeta"] = process.is_stationary() ? "default (stationary driver)" : "default (non-stationary driver)";
    }
    if (sources) *sources = src;
    return b;
}

ExperimentConfig default_audit_config() {
    return parse_config_string(
        "[map]\nfamily = doubling\n"
        "[selection]\nkind = iid\nalphabet = 2\n"
        "[observable]\nkind = cos2pi\n"
        "[ensemble]\nmode = grid\nsize = 256\n"
        "[schedule]\nn = 1,2,4,8\nk_max = 4\nrealizations = 4\n"
        "[run]\nseed = 1\noutput = audit\n");
}

namespace {

void quenched_section(Context& ctx, json& section) {
    const auto& ns = ctx.config.schedule;
    const std::size_t R = ctx.config.realizations;
    std::vector<std::vector<double>> sig(R);
    parallel_for(R, ctx.config.workers, [&](std::size_t r) {
        const OmegaSequence omega = sample_omega(ctx.process, ctx.horizon(), ctx.config.seed, r);
        sig[r] = quenched_variance_schedule(ctx.system, omega, ctx.f0, ctx.ensemble, ns);
    });
    {
        auto out = ctx.csv("sigma_n_sq.csv", {"n", "realization", "sigma_n_sq"});
        bool nonneg = true;
        for (std::size_t s = 0; s < ns.size(); ++s)
            for (std::size_t r = 0; r < R; ++r) {
                out.row({std::uint64_t{ns[s]}, std::uint64_t{r}, sig[r][s]});
                nonneg = nonneg && sig[r][s] >= 0.0;
            }
        ctx.check("sigma_n_sq nonnegative", nonneg);
    }
    {
        const std::size_t size = std::min(ctx.config.k_max + 1, ctx.horizon());
        const OmegaSequence omega = sample_omega(ctx.process, ctx.horizon(), ctx.config.seed, 0);
        const auto table = correlation_table(ctx.system, omega, ctx.f0, ctx.ensemble, size);
        auto out = ctx.csv("correlations.csv", {"i", "j", "correlation"});
        bool symmetric = true, bounded = true;
        const double cap = 4.0 * ctx.f0.sup_bound() * ctx.f0.sup_bound() + 1e-12;
        for (std::size_t i = 0; i < size; ++i)
            for (std::size_t j = 0; j < size; ++j) {
                out.row({std::uint64_t{i}, std::uint64_t{j}, table[i][j]});
                symmetric = symmetric && table[i][j] == table[j][i];
                bounded = bounded && std::abs(table[i][j]) <= cap;
            }
        ctx.check("correlation table symmetric", symmetric);
        ctx.check("correlations within 4 sup^2", bounded);
        const double direct = quenched_variance(ctx.system, omega, ctx.f0, ctx.ensemble, size);
        const double summed = sigma_sq_from_correlations(table, size);
        ctx.check("double sum equals direct variance", std::abs(direct - summed) <= 1e-9,
                  "residual " + format_cell(std::abs(direct - summed)));
        section["correlation_table_size"] = size;
    }
    if (ns.size() >= 3) {
        const auto fd = fluctuation_decay(ctx.system, ctx.process, ctx.f0, ctx.ensemble, ns, ctx.mc);
        auto out = ctx.csv("fluctuation.csv", {"n", "median_fluct", "q10", "q90", "mean_sigma_n_sq"});
        for (const auto& row : fd.rows) out.row({std::uint64_t{row.n}, row.median, row.q10, row.q90, row.mean_sigma});
        section["fluctuation"] = {{"identically_zero", fd.identically_zero},
                                  {"slope", fd.fit ? number(fd.fit->slope) : json(nullptr)},
                                  {"ci_low", fd.fit ? number(fd.fit->ci_low) : json(nullptr)},
                                  {"ci_high", fd.fit ? number(fd.fit->ci_high) : json(nullptr)}};
    }
    {
        const std::size_t n = ns.front();
        const auto id = variance_identity_report(ctx.system, ctx.process, ctx.f0, ctx.ensemble, n, ctx.mc);
        auto out = ctx.csv("identity.csv", {"n", "var_total", "var_centering", "mean_sigma_n_sq", "residual"});
        out.row({std::uint64_t{n}, id.total, id.centering, id.mean_sigma, id.residual});
        ctx.check("variance identity", id.residual < 1e-9, "residual " + format_cell(id.residual));
    }
}

void variance_section(Context& ctx, json& section) {
    auto out = ctx.csv("variance.csv",
                       {"n", "mean_sigma_n_sq", "se", "spread_median", "spread_q90", "spread_max"});
    for (std::size_t n : ctx.config.schedule) {
        const auto m = mean_quenched_variance(ctx.system, ctx.process, ctx.f0, ctx.ensemble, n, ctx.mc);
        out.row({std::uint64_t{n}, m.mean, m.standard_error, m.spread_median, m.spread_q90, m.spread_max});
    }
    const std::size_t K = std::min(ctx.config.k_max, ctx.horizon() - 1);
    const OmegaSequence omega = sample_omega(ctx.process, std::max<std::size_t>(K, 1), ctx.config.seed, 0);
    const auto v = v_truncated(ctx.system, omega, ctx.f0, ctx.ensemble, 0, K, ctx.bounds.eta);
    auto vo = ctx.csv("v_truncated.csv", {"i", "K", "value", "tail_bound", "flagged_lags"});
    vo.row({std::uint64_t{0}, std::uint64_t{K}, v.value, v.tail_bound.value_or(std::nan("")),
            std::uint64_t{v.flagged.size()}});
    section["v_truncated"] = {{"value", v.value}, {"flagged_lags", v.flagged}};
}

struct RouteValue {
    std::string route;
    double sigma_sq;
    double se;
};

std::vector<RouteValue> limit_section(Context& ctx, json& section) {
    std::size_t K = ctx.config.k_max;
    if (ctx.bounds.psi() > 1.0 && ctx.horizon() >= 2)
        K = std::min(K, choose_truncation_K(ctx.horizon(), ctx.bounds.psi(), ctx.bounds.zeta));
    const std::size_t burn_in = ctx.config.burn_in.value_or(2 * K);
    const auto& route = ctx.config.limit_route;
    std::vector<RouteValue> values;
    auto routes = ctx.csv("limit_routes.csv", {"route", "sigma_sq", "se", "K", "burn_in", "half_burn_in"});
    auto record = [&](const LimitVarianceEstimate& e, double value, double se) {
        routes.row({e.route, value, se, std::uint64_t{e.truncation_K}, std::uint64_t{e.burn_in}, e.half_burn_in_value});
        values.push_back({e.route, value, finite_or_zero(se)});
        ctx.check(e.route + " nonnegative up to noise", value >= -3.0 * finite_or_zero(se) - 1e-12);
    };
    if (route == "all" || route == "vk") {
        const auto e = estimate_vk_terms(ctx.system, ctx.process, ctx.f0, ctx.ensemble, K, burn_in, ctx.mc, ctx.bounds.eta);
        auto out = ctx.csv("vk_terms.csv", {"k", "V_k", "se"});
        for (std::size_t k = 0; k <= K; ++k) out.row({std::uint64_t{k}, e.per_k_terms[k], e.per_k_se[k]});
        record(e, e.sigma_sq, e.standard_error);
        section["vk_eta_violations"] = e.eta_violations;
        if (e.tail_bound) section["vk_tail_bound"] = number(*e.tail_bound);
    }
    if (route == "all" || route == "gk") {
        const std::size_t m = ctx.ensemble.size();
        const DoubledEnsemble pairs = m <= ctx.config.pairs / m ? DoubledEnsemble::product(ctx.ensemble)
                                                                : DoubledEnsemble::coupled(ctx.ensemble, ctx.config.pairs, ctx.config.seed);
        const auto gk = green_kubo_doubled(ctx.system, ctx.process, ctx.f0, pairs, K, burn_in, ctx.mc, ctx.bounds.eta);
        record(gk.estimate, gk.estimate.sigma_sq, gk.estimate.standard_error);
        const bool fmean = std::all_of(gk.f_means.begin(), gk.f_means.end(), [](const FMeanCheck& c) { return c.pass; });
        ctx.check("integral of F vanishes at every burn-in depth", fmean);
        section["gk_pairs"] = {{"product", pairs.is_product()}, {"count", pairs.size()}};
    }
    if (route == "all" || route == "split") {
        if (ctx.process.is_stationary()) {
            const auto sp = classical_green_kubo_split(ctx.system, ctx.process, ctx.f0, ctx.ensemble, K, burn_in, ctx.mc);
            LimitVarianceEstimate e = sp.classical;
            e.half_burn_in_value = sp.classical.half_burn_in_value - sp.centering.half_burn_in_value;
            record(e, sp.difference, sp.difference_se);
            section["split"] = {{"classical", sp.classical.sigma_sq}, {"centering", sp.centering.sigma_sq}};
        } else {
            section["split"] = "unsupported: driving process is not stationary";
        }
    }
    for (std::size_t a = 0; a < values.size(); ++a)
        for (std::size_t b = a + 1; b < values.size(); ++b) {
            const double joint = std::sqrt(values[a].se * values[a].se + values[b].se * values[b].se);
            const double gap = std::abs(values[a].sigma_sq - values[b].sigma_sq);
            ctx.check(values[a].route + " vs " + values[b].route + " within 2 joint se", gap <= 2.0 * joint + 1e-9,
                      "gap " + format_cell(gap) + ", joint se " + format_cell(joint));
        }
    section["K"] = K;
    section["burn_in"] = burn_in;
    json est = json::array();
    for (const auto& v : values) est.push_back({{"route", v.route}, {"sigma_sq", v.sigma_sq}, {"se", v.se}});
    section["estimates"] = est;
    return values;
}

void rate_section(Context& ctx, json& section) {
    const BoundModel& b = ctx.bounds;
    auto out = ctx.csv("rates.csv", {"quantity", "description", "power", "log_power"});
    auto emit = [&](const std::string& name, auto make) {
        try {
            const RateSpec r = make();
            out.row({name, r.description, r.power, r.log_power});
            section[name] = r.description;
        } catch (const ParameterError& e) {
            out.row({name, std::string("undefined"), std::nan(""), std::nan("")});
            section[name] = std::string("undefined: ") + e.what();
            ctx.check(name + " defined", false, e.what());
        }
    };
    emit("main_rate", [&] { return main_rate(b.psi(), b.gamma(), b.zeta, b.delta); });
    emit("fluctuation_rate", [&] { return fluctuation_rate(b.psi(), b.gamma(), b.delta); });
    emit("mean_convergence_rate", [&] { return mean_convergence_rate(b.psi(), b.zeta); });
    emit("variance_mean_gap", [&] { return variance_mean_gap_rate(b.psi()); });
}

void positivity_section(Context& ctx, json& section) {
    if (ctx.config.schedule.size() < 4) throw ConfigError("schedule.n", "positivity needs at least 4 schedule points");
    const auto growth = growth_data(ctx.system, ctx.process, ctx.f0, ctx.ensemble, ctx.config.schedule, ctx.mc);
    auto out = ctx.csv("growth.csv", {"n", "mean_var_S_n", "se"});
    for (const auto& g : growth) out.row({std::uint64_t{g.n}, g.mean, g.standard_error});
    const double psi = ctx.bounds.psi() > 1.0 ? ctx.bounds.psi() : 2.0;
    const auto v = positivity_check(growth, psi);
    section["verdict"] = v.verdict;
    section["exponent"] = number(v.exponent);
    section["c"] = v.c;
    section["c_se"] = v.c_se;
}

void clt_section(Context& ctx, json& section, std::optional<double> sigma_sq) {
    if (!sigma_sq) {
        std::size_t K = ctx.config.k_max;
        if (ctx.bounds.psi() > 1.0 && ctx.horizon() >= 2)
            K = std::min(K, choose_truncation_K(ctx.horizon(), ctx.bounds.psi(), ctx.bounds.zeta));
        sigma_sq = estimate_vk_terms(ctx.system, ctx.process, ctx.f0, ctx.ensemble, K,
                                     ctx.config.burn_in.value_or(2 * K), ctx.mc)
                       .sigma_sq;
    }
    const OmegaSequence omega = sample_omega(ctx.process, ctx.horizon(), ctx.config.seed, 0);
    const auto rep = triangle_report(ctx.system, omega, ctx.f0, ctx.ensemble, ctx.config.schedule, *sigma_sq);
    auto out = ctx.csv("clt.csv", {"n", "d_kolmogorov", "d_wasserstein", "sigma_n", "sigma", "d_fiber", "d_scale",
                                   "triangle_residual"});
    for (const auto& r : rep.rows)
        out.row({std::uint64_t{r.n}, r.d_total, r.wasserstein, r.sigma_n, r.sigma, r.d_fiber, r.d_scale, r.residual});
    ctx.check("triangle inequality", rep.triangle_holds);
    section["sigma_sq"] = *sigma_sq;
    section["degenerate"] = rep.degenerate;
    section["decay_slope"] = rep.fit ? number(rep.fit->slope) : json(nullptr);

    if (ctx.f.dimension() > 1) {
        const std::size_t n = ctx.config.schedule.front();
        const auto pol = covariance_by_polarization(ctx.system, omega, ctx.f, ctx.ensemble, n);
        const auto dir = direct_covariance(ctx.system, omega, ctx.f, ctx.ensemble, n);
        auto cov = ctx.csv("covariance.csv", [&] {
            std::vector<std::string> cols{"n", "row"};
            for (Eigen::Index c = 0; c < pol.matrix.cols(); ++c) cols.push_back("c" + std::to_string(c));
            return cols;
        }());
        for (Eigen::Index r = 0; r < pol.matrix.rows(); ++r) {
            std::vector<CsvCell> cells{std::uint64_t{n}, std::uint64_t(r)};
            for (Eigen::Index c = 0; c < pol.matrix.cols(); ++c) cells.push_back(pol.matrix(r, c));
            cov.row(cells);
        }
        const double diff = (pol.matrix - dir.matrix).cwiseAbs().maxCoeff();
        ctx.check("polarization equals direct covariance", diff <= 1e-9, "max diff " + format_cell(diff));
        ctx.check("covariance PSD up to 3 se", pol.psd);
    }
}

void audit_section(Context& ctx, json& section) {
    {
        auto out = ctx.csv("golden.csv", {"function", "args", "expected", "actual", "pass"});
        std::size_t passed = 0;
        const auto rows = load_golden_table(default_golden_path());
        for (const auto& row : rows) {
            const auto r = check_golden_row(row);
            std::string args;
            for (std::size_t k = 0; k < row.args.size(); ++k) args += (k ? " " : "") + format_cell(row.args[k]);
            out.row({row.function, args, row.expected, r.actual, std::string(r.pass ? "1" : "0")});
            passed += r.pass;
        }
        ctx.check("golden rate table", passed == rows.size(),
                  std::to_string(passed) + "/" + std::to_string(rows.size()) + " rows");
    }
    {
        std::vector<std::size_t> ms;
        for (std::size_t p = 1; p <= 10; ++p) ms.push_back(std::size_t{1} << p);
        auto rows = ctx.csv("sandwich.csv", {"psi", "gamma", "m", "S", "lower", "upper"});
        auto summary = ctx.csv("sandwich_summary.csv", {"psi", "gamma", "fitted_slope", "expected_slope", "tail_slope",
                                                        "c1", "c2", "printed_c1", "printed_c1_holds"});
        for (auto [psi, gamma] : {std::pair{3.0, 1.0}, std::pair{1.5, 5.0}, std::pair{2.0, 0.5}}) {
            BoundModel m;
            m.eta = {1.0, psi};
            m.alpha = {1.0, gamma};
            const auto a = sandwich_audit(m, ms);
            for (const auto& r : a.rows) rows.row({psi, gamma, std::uint64_t{r.m}, r.s, r.lower, r.upper});
            summary.row({psi, gamma, a.fit.slope, a.expected_slope, a.tail_slope, a.c1, a.c2, a.printed_c1,
                         std::string(a.printed_c1_holds ? "1" : "0")});
            const std::string tag = "(" + format_cell(psi) + "," + format_cell(gamma) + ")";
            ctx.check("sandwich slope " + tag, a.slope_pass,
                      "fitted " + format_cell(a.fit.slope) + ", expected " + format_cell(a.expected_slope));
            ctx.check("sandwich printed lower bound " + tag, a.printed_c1_holds);
        }
    }
    {
        // Algebraic identities on a small product ensemble built from the configured system.
        const Ensemble base = ctx.config.ensemble_mode == "sample" ? Ensemble::sample(kIdentityBase, ctx.config.seed)
                                                                   : Ensemble::grid(kIdentityBase);
        const DoubledEnsemble pairs = DoubledEnsemble::product(base);
        const std::size_t horizon = 8;
        const double slope = ctx.system.max_slope(ctx.process.letter_support());
        const std::size_t cap = horizon_cap(base, slope);
        const OmegaSequence omega = sample_omega(ctx.process, horizon, ctx.config.seed, 0);
        double worst = 0.0;
        for (std::size_t n = 1; n <= horizon && n - 1 <= cap; n *= 2) {
            const double z = z_variance(ctx.system, omega, ctx.f0, pairs, n);
            const double s = quenched_variance(ctx.system, omega, ctx.f0, base, n);
            worst = std::max(worst, std::abs(z - 2.0 * static_cast<double>(n) * s));
        }
        ctx.check("Z_n identity", worst < 1e-9, "max residual " + format_cell(worst));
        section["z_identity_residual"] = worst;
    }
}

void write_manifest(Context& ctx, Command command, json sections, const json& bound_sources) {
    json m;
    m["config_hash"] = ctx.hash;
    m["command"] = to_string(command);
    m["files"] = ctx.result.files;
    m["bound_model"] = {{"psi", number(ctx.bounds.psi())},
                        {"gamma", number(ctx.bounds.gamma())},
                        {"zeta", number(ctx.bounds.zeta)},
                        {"delta", number(ctx.bounds.delta)},
                        {"C_eta", number(ctx.bounds.eta.constant)},
                        {"C_alpha", number(ctx.bounds.alpha.constant)},
                        {"sources", bound_sources}};
    m["sections"] = std::move(sections);
    json checks = json::array();
    for (const auto& c : ctx.result.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    m["checks"] = checks;
    m["all_pass"] = ctx.result.all_pass();
    std::ofstream out(ctx.dir / "manifest.json");
    out << m.dump(2) << "\n";
    ctx.result.manifest = std::move(m);
}

}  // namespace

RunResult run(const ExperimentConfig& config, Command command) {
    Context ctx(config);
    json bound_sources;
    ctx.bounds = resolve_bounds(config, &bound_sources);
    ctx.result.bounds = ctx.bounds;
    json sections = json::object();
    switch (command) {
        case Command::simulate: {
            quenched_section(ctx, sections["quenched"]);
            const auto values = limit_section(ctx, sections["limit_variance"]);
            rate_section(ctx, sections["rate"]);
            std::optional<double> sigma;
            if (!values.empty()) sigma = values.front().sigma_sq;
            clt_section(ctx, sections["clt"], sigma);
            break;
        }
        case Command::variance: variance_section(ctx, sections["quenched"]); break;
        case Command::limit: limit_section(ctx, sections["limit_variance"]); break;
        case Command::rates: rate_section(ctx, sections["rate"]); break;
        case Command::positivity: positivity_section(ctx, sections["limit_variance"]); break;
        case Command::clt: clt_section(ctx, sections["clt"], std::nullopt); break;
        case Command::audit: audit_section(ctx, sections["audit"]); break;
    }
    write_manifest(ctx, command, std::move(sections), bound_sources);
    return ctx.result;
}

}  // namespace qclt
