#pragma once

#include "qclt/bounds.hpp"
#include "qclt/limit_variance.hpp"
#include "qclt/map_core.hpp"
#include "qclt/selection.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qclt {

/// Experiment description read from an INI-style file:
///
///   [map]         family = beta | doubling | tent | custom-table
///                 table.<i> = lo,hi,slope,offset | lo,hi,slope,offset ...
///   [selection]   kind = iid | markov | ams-markov | constant | iid-continuous
///                 alphabet = 2,3   probabilities = 0.5,0.5
///                 transition = 0.9,0.1 | 0.1,0.9   initial = 1,0   range = 2,3
///   [observable]  kind = cos2pi | sin2pi | constant | coboundary | piecewise-linear | vector
///                 value, frequency, g, letter, knots = x,y | x,y, components = cos2pi,sin2pi
///   [ensemble]    mode = grid | sample, size
///   [schedule]    n = 16,64,256   k_max   realizations   burn_in
///   [bounds]      psi, gamma, zeta, delta (each a number or "fit")
///   [limit]       route = all | vk | gk | split, pairs
///   [run]         seed (required), workers, output
struct ExperimentConfig {
    std::string map_family = "doubling";
    std::vector<BranchTable> tables;

    std::string selection_kind = "iid";
    std::vector<double> alphabet{2.0};
    std::vector<double> probabilities;
    std::vector<std::vector<double>> transition;
    std::vector<double> initial;
    double range_lo = 2.0, range_hi = 3.0;

    std::string observable_kind = "cos2pi";
    double observable_value = 1.0;
    double frequency = 1.0;
    std::string coboundary_g = "cos2pi";
    double coboundary_letter = 2.0;
    std::vector<std::pair<double, double>> knots;
    std::vector<std::string> components;

    std::string ensemble_mode = "grid";
    std::size_t ensemble_size = 4096;

    std::vector<std::size_t> schedule{16, 64, 256};
    std::size_t k_max = 8;
    std::size_t realizations = 20;
    std::optional<std::size_t> burn_in;

    std::optional<double> psi = 3.0, gamma = 2.0, zeta, delta = 0.1;  ///< nullopt: fitted or defaulted

    std::string limit_route = "all";
    std::size_t pairs = 65536;

    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string output = "results";

    /// Raw key/value pairs as read, keyed "section.key".
    std::map<std::string, std::string> entries;

    /// FNV-1a hash of the canonical entries, excluding run.workers and run.output.
    std::string hash() const;
};

/// Throws ConfigError with the dotted field path on any invalid entry.
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

MapSystem build_map(const ExperimentConfig& config);
SelectionProcess build_process(const ExperimentConfig& config);
Observable build_observable(const ExperimentConfig& config, const MapSystem& system);
Ensemble build_ensemble(const ExperimentConfig& config);

}  // namespace qclt
