#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfgpi/hsurface.hpp"
#include "mfgpi/rng.hpp"

namespace mfgpi {

enum class Measure { Physical, RiskNeutral };

struct SimulationRequest {
    double x0 = 0.0;
    double y0 = 0.0;
    double t0 = 0.0;
    std::size_t n_paths = 1000;
    std::size_t n_steps = 100;
    std::uint64_t seed = 1;
    Measure measure = Measure::Physical;
    // States are kept for all paths at steps 0, stride, 2 stride, ..., n_steps.
    // 0 keeps the start and the terminal state only.
    std::size_t record_stride = 0;
};

// Optimal paths: Y by Euler, L = int c dY with trapezoidal drift and left-point
// noise, X*_s = H(H^{-1}(x0,y0,t0) + L_s, Y_s, s), alpha*_s = c H_z + H_y there.
struct PathBundle {
    std::uint64_t seed = 0;
    Stream stream = Stream::CommonNoise;
    Measure measure = Measure::Physical;
    double x0 = 0.0, y0 = 0.0, t0 = 0.0, T = 0.0;
    double z0 = 0.0;  // H^{-1}(x0, y0, t0)
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::vector<double> times;          // recorded times
    std::vector<std::size_t> steps;     // recorded step indices
    // Recorded states, path-major: value(path, k) = v[path * times.size() + k].
    std::vector<double> W, Y, L, X, alpha;
    std::vector<double> alpha_sq_integral;  // int alpha*^2 ds per path
    std::vector<std::uint8_t> valid;
    std::size_t excluded = 0;
    std::string first_failure;

    std::size_t n_records() const { return times.size(); }
    double at(const std::vector<double>& v, std::size_t path, std::size_t k) const {
        return v[path * times.size() + k];
    }
    double terminal(const std::vector<double>& v, std::size_t path) const { return at(v, path, times.size() - 1); }
    // Mean of int alpha*^2 over valid paths.
    ValueEstimate admissibility() const;
};

PathBundle simulate_paths(const HSurface& surface, const SimulationRequest& request);

// Monte-Carlo mean of J(X*_T) over the valid paths.
ValueEstimate estimate_value(const PathBundle& bundle, const UtilitySpec& utility);

// E_Q[J(h(h^{-1}(x,y,t), Y_T, T)) F(Y_T, T)] with Y_T = y + W_{T-t} sampled exactly.
ValueEstimate auxiliary_value_w(const HSurface& surface, double x, double y, double t, std::size_t n_paths,
                                std::uint64_t seed);

// Feynman-Kac oracle for H: dZ = c(Y,s) dW, dY = dW, H(z,y,t) = E[terminal_H(Z_T)].
ValueEstimate feynman_kac_H(const HSurface& surface, double z, double y, double t, std::size_t n_paths,
                            std::size_t n_steps, std::uint64_t seed, std::uint64_t probe_index = 0);

}  // namespace mfgpi
