#include "mfgpi/rng.hpp"

#include <cmath>

namespace mfgpi {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t path_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    return splitmix64(h ^ index);
}

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

ValueEstimate estimate_mean(const std::vector<double>& samples) {
    ValueEstimate e;
    e.n_paths = samples.size();
    if (samples.empty()) return e;
    e.mean = pairwise_sum(samples.data(), samples.size()) / static_cast<double>(samples.size());
    if (samples.size() < 2) return e;
    std::vector<double> dev(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) dev[i] = (samples[i] - e.mean) * (samples[i] - e.mean);
    const double var = pairwise_sum(dev.data(), dev.size()) / static_cast<double>(samples.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(samples.size()));
    return e;
}

}  // namespace mfgpi
