#include "qclt/config.hpp"

#include "qclt/error.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace qclt {

namespace {

const std::set<std::string> kKnownKeys = {
    "map.family",           "selection.kind",     "selection.alphabet",  "selection.probabilities",
    "selection.transition", "selection.initial",  "selection.range",     "observable.kind",
    "observable.value",     "observable.frequency", "observable.g",      "observable.letter",
    "observable.knots",     "observable.components", "ensemble.mode",    "ensemble.size",
    "schedule.n",           "schedule.k_max",     "schedule.realizations", "schedule.burn_in",
    "bounds.psi",           "bounds.gamma",       "bounds.zeta",         "bounds.delta",
    "limit.route",          "limit.pairs",        "run.seed",            "run.workers",
    "run.output"};

std::string trim(std::string s) {
    boost::algorithm::trim(s);
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, s, [sep](char c) { return c == sep; });
    for (auto& p : parts) p = trim(p);
    return parts;
}

double to_double(const std::string& field, const std::string& text) {
    double v = 0.0;
    const auto t = trim(text);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(field, "expected a number, got '" + text + "'");
    return v;
}

std::uint64_t to_unsigned(const std::string& field, const std::string& text) {
    std::uint64_t v = 0;
    const auto t = trim(text);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(field, "expected a nonnegative integer, got '" + text + "'");
    return v;
}

std::vector<double> to_doubles(const std::string& field, const std::string& text) {
    std::vector<double> out;
    for (const auto& p : split(text, ',')) out.push_back(to_double(field, p));
    return out;
}

std::vector<std::vector<double>> to_matrix(const std::string& field, const std::string& text) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : split(text, '|')) rows.push_back(to_doubles(field, r));
    return rows;
}

std::string one_of(const std::string& field, const std::string& text, std::initializer_list<const char*> allowed) {
    const auto t = trim(text);
    std::string list;
    for (const char* a : allowed) {
        if (t == a) return t;
        list += std::string(list.empty() ? "" : ", ") + a;
    }
    throw ConfigError(field, "expected one of {" + list + "}, got '" + text + "'");
}

std::optional<double> number_or_fit(const std::string& field, const std::string& text) {
    if (trim(text) == "fit") return std::nullopt;
    return to_double(field, text);
}

}  // namespace

std::string ExperimentConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [k, v] : entries) {
        if (k == "run.workers" || k == "run.output") continue;
        for (char c : k + "=" + v + "\n") {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig parse_config_string(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()), e.message());
    }
    ExperimentConfig c;
    for (const auto& [section, keys] : tree) {
        if (keys.empty() && !keys.data().empty())
            throw ConfigError(section, "keys must appear inside a [section]");
        for (const auto& [key, value] : keys) {
            const std::string field = section + "." + key;
            const bool table = section == "map" && key.rfind("table.", 0) == 0;
            if (!table && !kKnownKeys.count(field)) throw ConfigError(field, "unknown key");
            c.entries[field] = trim(value.data());
        }
    }
    std::map<std::size_t, BranchTable> tables;
    for (const auto& [field, v] : c.entries) {
        if (field == "map.family") {
            c.map_family = one_of(field, v, {"beta", "doubling", "tent", "custom-table"});
        } else if (field.rfind("map.table.", 0) == 0) {
            const auto index = to_unsigned(field, field.substr(10));
            BranchTable t;
            for (const auto& row : to_matrix(field, v)) {
                if (row.size() != 4) throw ConfigError(field, "each branch needs lo,hi,slope,offset");
                t.push_back({row[0], row[1], row[2], row[3]});
            }
            tables[index] = std::move(t);
        } else if (field == "selection.kind") {
            c.selection_kind = one_of(field, v, {"iid", "markov", "ams-markov", "constant", "iid-continuous"});
        } else if (field == "selection.alphabet") {
            c.alphabet = to_doubles(field, v);
        } else if (field == "selection.probabilities") {
            c.probabilities = to_doubles(field, v);
        } else if (field == "selection.transition") {
            c.transition = to_matrix(field, v);
        } else if (field == "selection.initial") {
            c.initial = to_doubles(field, v);
        } else if (field == "selection.range") {
            const auto r = to_doubles(field, v);
            if (r.size() != 2) throw ConfigError(field, "expected lo,hi");
            c.range_lo = r[0];
            c.range_hi = r[1];
        } else if (field == "observable.kind") {
            c.observable_kind =
                one_of(field, v, {"cos2pi", "sin2pi", "constant", "coboundary", "piecewise-linear", "vector"});
        } else if (field == "observable.value") {
            c.observable_value = to_double(field, v);
        } else if (field == "observable.frequency") {
            c.frequency = to_double(field, v);
        } else if (field == "observable.g") {
            c.coboundary_g = one_of(field, v, {"cos2pi", "sin2pi"});
        } else if (field == "observable.letter") {
            c.coboundary_letter = to_double(field, v);
        } else if (field == "observable.knots") {
            for (const auto& row : to_matrix(field, v)) {
                if (row.size() != 2) throw ConfigError(field, "each knot needs x,y");
                c.knots.emplace_back(row[0], row[1]);
            }
        } else if (field == "observable.components") {
            c.components = split(v, ',');
            for (const auto& k : c.components) one_of(field, k, {"cos2pi", "sin2pi", "coboundary"});
        } else if (field == "ensemble.mode") {
            c.ensemble_mode = one_of(field, v, {"grid", "sample"});
        } else if (field == "ensemble.size") {
            c.ensemble_size = to_unsigned(field, v);
            if (c.ensemble_size < 1) throw ConfigError(field, "must be at least 1");
        } else if (field == "schedule.n") {
            c.schedule.clear();
            for (const auto& p : split(v, ',')) c.schedule.push_back(to_unsigned(field, p));
            if (c.schedule.empty()) throw ConfigError(field, "schedule is empty");
            for (std::size_t s = 0; s < c.schedule.size(); ++s)
                if (c.schedule[s] < 1 || (s && c.schedule[s] <= c.schedule[s - 1]))
                    throw ConfigError(field, "schedule must be positive and strictly increasing");
        } else if (field == "schedule.k_max") {
            c.k_max = to_unsigned(field, v);
        } else if (field == "schedule.realizations") {
            c.realizations = to_unsigned(field, v);
            if (c.realizations < 1) throw ConfigError(field, "must be at least 1");
        } else if (field == "schedule.burn_in") {
            c.burn_in = to_unsigned(field, v);
        } else if (field == "bounds.psi") {
            c.psi = number_or_fit(field, v);
        } else if (field == "bounds.gamma") {
            c.gamma = number_or_fit(field, v);
        } else if (field == "bounds.zeta") {
            c.zeta = number_or_fit(field, v);
        } else if (field == "bounds.delta") {
            c.delta = to_double(field, v);
            if (!(*c.delta > 0.0)) throw ConfigError(field, "must be positive");
        } else if (field == "limit.route") {
            c.limit_route = one_of(field, v, {"all", "vk", "gk", "split"});
        } else if (field == "limit.pairs") {
            c.pairs = to_unsigned(field, v);
            if (c.pairs < 1) throw ConfigError(field, "must be at least 1");
        } else if (field == "run.seed") {
            c.seed = to_unsigned(field, v);
        } else if (field == "run.workers") {
            c.workers = to_unsigned(field, v);
            if (c.workers < 1) throw ConfigError(field, "must be at least 1");
        } else if (field == "run.output") {
            c.output = v;
            if (c.output.empty()) throw ConfigError(field, "must not be empty");
        }
    }
    if (!c.entries.count("run.seed")) throw ConfigError("run.seed", "a master seed is required");
    std::size_t expected = 0;
    for (auto& [index, t] : tables) {
        if (index != expected++) throw ConfigError("map.table." + std::to_string(index), "table indices must be 0,1,2,...");
        c.tables.push_back(std::move(t));
    }
    if (c.map_family == "custom-table" && c.tables.empty()) throw ConfigError("map.table.0", "custom-table needs tables");
    // Letters must belong to the map family.
    const MapSystem system = build_map(c);
    const std::string letters_field =
        c.selection_kind == "iid-continuous" ? "selection.range" : "selection.alphabet";
    for (double a : build_process(c).letter_support()) {
        try {
            system.check_letter(a);
        } catch (const DomainError& e) {
            throw ConfigError(letters_field, e.what());
        }
    }
    return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str());
}

MapSystem build_map(const ExperimentConfig& c) {
    try {
        if (c.map_family == "beta") return MapSystem::beta();
        if (c.map_family == "tent") return MapSystem::tent();
        if (c.map_family == "custom-table") return MapSystem::custom(c.tables);
        return MapSystem::doubling();
    } catch (const DomainError& e) {
        throw ConfigError("map", e.what());
    }
}

SelectionProcess build_process(const ExperimentConfig& c) {
    try {
        if (c.selection_kind == "iid-continuous") return SelectionProcess::iid_continuous(c.range_lo, c.range_hi);
        if (c.selection_kind == "constant") {
            if (c.alphabet.size() != 1) throw ConfigError("selection.alphabet", "constant process needs one letter");
            return SelectionProcess::constant(c.alphabet.front());
        }
        if (c.selection_kind == "iid") {
            std::vector<double> p = c.probabilities;
            if (p.empty()) p.assign(c.alphabet.size(), 1.0 / static_cast<double>(c.alphabet.size()));
            return SelectionProcess::iid(c.alphabet, p);
        }
        const auto n = static_cast<Eigen::Index>(c.alphabet.size());
        if (static_cast<Eigen::Index>(c.transition.size()) != n)
            throw ConfigError("selection.transition", "needs one row per letter");
        Eigen::MatrixXd P(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
            if (static_cast<Eigen::Index>(c.transition[static_cast<std::size_t>(r)].size()) != n)
                throw ConfigError("selection.transition", "row " + std::to_string(r) + " has the wrong length");
            for (Eigen::Index k = 0; k < n; ++k) P(r, k) = c.transition[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
        }
        if (c.selection_kind == "markov") return SelectionProcess::markov(c.alphabet, P);
        if (c.initial.empty()) throw ConfigError("selection.initial", "ams-markov needs an initial law");
        return SelectionProcess::ams_markov(c.alphabet, P, c.initial);
    } catch (const DomainError& e) {
        throw ConfigError("selection", e.what());
    }
}

namespace {

Observable scalar_kind(const ExperimentConfig& c, const std::string& kind, const MapSystem& system) {
    if (kind == "cos2pi") return Observable::cos2pi(c.frequency);
    if (kind == "sin2pi") return Observable::sin2pi(c.frequency);
    if (kind == "constant") return Observable::constant(c.observable_value);
    if (kind == "piecewise-linear") {
        if (c.knots.empty()) throw ConfigError("observable.knots", "piecewise-linear needs knots");
        return Observable::piecewise_linear(c.knots);
    }
    const Observable g = c.coboundary_g == "sin2pi" ? Observable::sin2pi(c.frequency) : Observable::cos2pi(c.frequency);
    return Observable::coboundary(g, system, c.coboundary_letter);
}

}  // namespace

Observable build_observable(const ExperimentConfig& c, const MapSystem& system) {
    try {
        if (c.observable_kind != "vector") return scalar_kind(c, c.observable_kind, system);
        if (c.components.empty()) throw ConfigError("observable.components", "vector observable needs components");
        std::vector<Observable> parts;
        for (const auto& k : c.components) parts.push_back(scalar_kind(c, k, system));
        return Observable::stack(parts);
    } catch (const DomainError& e) {
        throw ConfigError("observable", e.what());
    }
}

Ensemble build_ensemble(const ExperimentConfig& c) {
    if (c.ensemble_mode == "sample") return Ensemble::sample(c.ensemble_size, c.seed);
    return Ensemble::grid(c.ensemble_size);
}

}  // namespace qclt
