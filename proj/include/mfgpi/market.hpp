#pragma once

#include <vector>

#include "mfgpi/filter.hpp"
#include "mfgpi/parabolic.hpp"

namespace mfgpi {

// Filter plus the market surfaces:
//   k_t + 1/2 k_yy = 1/2 b^2,  k(y,T) = 0
//   c_t + 1/2 c_yy = 0,        c(y,T) = b(y,T)
//   n = k + ln F
struct MarketModel {
    PriorMeasure prior;
    FilterSurface filter;
    FieldSurface k;
    FieldSurface c;
    FieldSurface n;
    FieldSurface k_y;  // finite differences of k
    FieldSurface n_y;  // b + k_y
    std::vector<ResidualReport> reports;
    double c_mismatch = 0.0;  // max |c - (b + k_y)| over the interior third

    const SpaceTimeGrid& grid() const { return filter.grid; }
    double b(double y, double t) const { return eval_b(prior, y, t); }
};

// Throws ConsistencyError naming the violated inequality and the node.
MarketModel build_market(const PriorMeasure& prior, const SpaceTimeGrid& grid,
                         Scheme scheme = Scheme::CrankNicolson);

// Interior third of the y-range, the window where boundary closures are negligible.
YWindow interior_third(const SpaceTimeGrid& grid);

}  // namespace mfgpi
