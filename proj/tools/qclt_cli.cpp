// qclt command-line runner. Exit codes: 0 all checks pass, 1 a check failed,
// 2 invalid configuration, 3 runtime error.

#include "qclt/config.hpp"
#include "qclt/error.hpp"
#include "qclt/rate_engine.hpp"
#include "qclt/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Options {
    std::string config;
    std::optional<std::size_t> workers;
    std::optional<std::string> output;
    std::optional<std::string> route;
    std::optional<double> psi, gamma, zeta, delta;
};

int report(const qclt::RunResult& result, qclt::Command command) {
    for (const auto& c : result.checks)
        std::printf("%s %s%s%s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.empty() ? "" : ": ",
                    c.detail.c_str());
    if (command == qclt::Command::limit && result.manifest.contains("sections")) {
        for (const auto& e : result.manifest["sections"]["limit_variance"]["estimates"])
            std::printf("sigma^2[%s] = %.10g (se %.3g)\n", e["route"].get<std::string>().c_str(),
                        e["sigma_sq"].get<double>(), e["se"].get<double>());
    }
    std::printf("%zu files written; %s\n", result.files.size(), result.all_pass() ? "all checks pass" : "checks failed");
    return result.all_pass() ? 0 : 1;
}

qclt::ExperimentConfig load(const Options& o, qclt::Command command) {
    qclt::ExperimentConfig cfg;
    if (o.config.empty()) {
        if (command != qclt::Command::audit) throw qclt::ConfigError("--config", "a config file is required");
        cfg = qclt::default_audit_config();
    } else {
        cfg = qclt::parse_config_file(o.config);
    }
    if (o.workers) {
        if (*o.workers < 1) throw qclt::ConfigError("run.workers", "must be at least 1");
        cfg.workers = *o.workers;
    }
    if (o.output) cfg.output = *o.output;
    if (o.route) cfg.limit_route = *o.route;
    if (o.psi) cfg.psi = o.psi;
    if (o.gamma) cfg.gamma = o.gamma;
    if (o.zeta) cfg.zeta = o.zeta;
    if (o.delta) cfg.delta = o.delta;
    return cfg;
}

int rates_only(const Options& o) {
    const double psi = o.psi.value_or(3.0), gamma = o.gamma.value_or(2.0);
    const double zeta = o.zeta.value_or(2.0), delta = o.delta.value_or(0.1);
    std::cout << qclt::main_rate(psi, gamma, zeta, delta).description << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quenched CLT experiments for random expanding maps"};
    app.require_subcommand(1);
    Options o;

    struct Sub {
        const char* name;
        qclt::Command command;
        const char* help;
    };
    const Sub subs[] = {
        {"simulate", qclt::Command::simulate, "quenched, limit-variance, rate and CLT sections"},
        {"variance", qclt::Command::variance, "mean quenched variance schedule and truncated V"},
        {"limit", qclt::Command::limit, "limit variance by the V_k, doubled Green-Kubo and split routes"},
        {"rates", qclt::Command::rates, "rate expressions for a bound model"},
        {"positivity", qclt::Command::positivity, "growth of Var(S_n) and the positivity verdict"},
        {"clt", qclt::Command::clt, "Kolmogorov and Wasserstein distances to the Gaussian limit"},
        {"audit", qclt::Command::audit, "golden rate table, sandwich audit and identity checks"},
    };
    std::optional<qclt::Command> chosen;
    for (const auto& s : subs) {
        auto* sc = app.add_subcommand(s.name, s.help);
        sc->add_option("--config,-c", o.config, "experiment config file");
        sc->add_option("--workers,-w", o.workers, "worker threads");
        sc->add_option("--output,-o", o.output, "output directory");
        if (s.command == qclt::Command::limit)
            sc->add_option("--route", o.route, "all | vk | gk | split")->check(CLI::IsMember({"all", "vk", "gk", "split"}));
        if (s.command == qclt::Command::rates) {
            sc->add_option("--psi", o.psi);
            sc->add_option("--gamma", o.gamma);
            sc->add_option("--zeta", o.zeta);
            sc->add_option("--delta", o.delta);
        }
        sc->callback([&chosen, c = s.command] { chosen = c; });
    }
    CLI11_PARSE(app, argc, argv);

    try {
        if (*chosen == qclt::Command::rates && o.config.empty()) return rates_only(o);
        const auto cfg = load(o, *chosen);
        const auto result = qclt::run(cfg, *chosen);
        if (*chosen == qclt::Command::rates && result.manifest["sections"]["rate"].contains("main_rate"))
            std::cout << result.manifest["sections"]["rate"]["main_rate"].get<std::string>() << "\n";
        return report(result, *chosen);
    } catch (const qclt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qclt::ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
