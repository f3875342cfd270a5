#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mfgpi {

// Stream ids keep independent uses of one seed apart.
enum class Stream : std::uint64_t {
    CommonNoise = 1,
    InitialWealth = 2,
    FeynmanKac = 3,
    Auxiliary = 4,
    Idiosyncratic = 5,
};

std::uint64_t splitmix64(std::uint64_t x);

// Seed for path `index` of `stream`, independent of evaluation order.
std::uint64_t path_seed(std::uint64_t seed, Stream stream, std::uint64_t index);

class PathRng {
public:
    PathRng(std::uint64_t seed, Stream stream, std::uint64_t index) : engine_(path_seed(seed, stream, index)) {}
    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Pairwise summation: rounding error grows like log n and the result does not
// depend on how the values were produced.
double pairwise_sum(const double* v, std::size_t n);

struct ValueEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(n)
    std::size_t n_paths = 0;
};

ValueEstimate estimate_mean(const std::vector<double>& samples);

}  // namespace mfgpi
