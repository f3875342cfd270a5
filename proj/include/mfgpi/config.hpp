#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfgpi/filter.hpp"
#include "mfgpi/mfg.hpp"
#include "mfgpi/paths.hpp"
#include "mfgpi/utility.hpp"

namespace mfgpi {

// Coupling as written in a config file: a named catalogue entry, never a user function.
struct CouplingConfig {
    std::string kind = "none";  // none | linear | general_mean
    double theta = 0.5;
    std::string name = "linear_plus_tanh";  // general_mean catalogue: linear | linear_plus_tanh
    double a = 0.5;
    double b = 0.1;
    double k1 = 0.35;
    double k2 = 0.55;
};

struct NplayerConfig {
    std::vector<std::size_t> N_list{10, 100, 1000, 10000};
    std::size_t replications = 200;
    double atoms_lo = -1.0;
    double atoms_hi = 1.0;
    std::size_t atoms_n = 201;
    std::size_t n_steps = 20;
    std::size_t nash_N = 50;
    std::size_t nash_paths = 4000;
    std::vector<double> deltas{-0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2};
};

struct ExperimentConfig {
    std::vector<PriorAtom> prior{{0.2, 0.5}, {0.8, 0.5}};
    SpaceTimeGrid grid;
    std::string utility_kind = "exponential";  // exponential | sahara | cmim
    double utility_A = 1.0;
    double utility_B = 1.0;
    std::vector<CmimAtom> cmim_atoms;
    CouplingConfig coupling;
    double x0 = 0.0, y0 = 0.0, mbar0 = 0.0, t0 = 0.0;
    std::size_t n_paths = 1000;
    std::size_t n_steps = 100;
    std::uint64_t seed = 1;
    std::string measure = "physical";  // physical | risk_neutral
    std::size_t record_stride = 0;
    NplayerConfig nplayer;
    std::string out_dir = "out";
    std::vector<std::string> checks;  // empty runs every check
    unsigned threads = 1;
};

// Flat sections of `key = value` lines:
//   [section]            starts a section; keys below are read as section.key
//   key = 1.5            numbers, "strings", bare words, [arrays], [[nested], [arrays]]
//   # comment
// Values are read as JSON, with bare words taken as strings. Unknown keys, wrong types
// and repeated keys are InputErrors naming the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Throws InputError if any referenced spec fails its own validation.
void validate_config(const ExperimentConfig& cfg);

PriorMeasure make_prior(const ExperimentConfig& cfg);
UtilitySpec make_utility(const ExperimentConfig& cfg);
// Empty when coupling.kind is none.
std::optional<CouplingSpec> make_coupling(const ExperimentConfig& cfg);
Measure make_measure(const ExperimentConfig& cfg);

// Canonical one-line JSON of every field; equal configs give equal text.
std::string canonical_json(const ExperimentConfig& cfg);
// FNV-1a of canonical_json, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace mfgpi
