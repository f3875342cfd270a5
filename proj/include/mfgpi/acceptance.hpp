#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mfgpi {

// One measured quantity against its pinned threshold.
struct Measurement {
    std::string quantity;
    double value = 0.0;
    std::string relation;  // "<=", ">=", "<", ">", "in"
    double threshold = 0.0;
    double threshold_hi = 0.0;  // upper end for "in"
    bool pass = false;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    std::vector<Measurement> measurements;
    std::string error;     // set when the check threw
    double seconds = 0.0;  // wall clock, kept out of the serialized results
    bool pass() const;
};

struct AcceptanceOptions {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    // Adds a local bump to the exponential value function fed to the HJB residual.
    // Only hjb_residual should fail; used to check the harness itself.
    bool inject_hjb_perturbation = false;
    // Called after each criterion finishes.
    std::function<void(const struct CriterionResult&)> on_result;
};

// Check names in criterion order, e.g. "filter_closed_forms", "hjb_residual".
const std::vector<std::string>& criterion_names();

// Runs the named checks (all when `only` is empty). InputError for an unknown name.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, const std::vector<std::string>& only = {});

// Deterministic JSON array of the results (no timings).
std::string results_json(const std::vector<CriterionResult>& results);

// One line per criterion: "[PASS] 7 hjb_residual: quantity value <= threshold; ...".
std::string result_line(const CriterionResult& r);

}  // namespace mfgpi
