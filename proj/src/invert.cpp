#include "mfgpi/invert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfgpi/errors.hpp"

namespace mfgpi {

double monotone_invert(const std::function<double(double)>& f, double target, double lo, double hi,
                       const std::function<double(double)>& df, InvertOptions opts) {
    if (!(lo < hi)) throw InputError("monotone_invert: need lo < hi");
    double a = lo;
    double b = hi;
    double fa = f(a) - target;
    double fb = f(b) - target;
    if (!std::isfinite(fa) || !std::isfinite(fb))
        throw NumericalError("monotone_invert: non-finite function value at a bracket end");
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa < 0.0) == (fb < 0.0)) {
        std::ostringstream os;
        os.precision(10);
        os << "monotone_invert: target " << target << " not bracketed on [" << lo << ", " << hi
           << "], f(lo)=" << fa + target << ", f(hi)=" << fb + target;
        throw BracketError(os.str(), fa + target, fb + target);
    }
    const double eps = std::numeric_limits<double>::epsilon();
    double x = a - fa * (b - a) / (fb - fa);
    double best_x = std::abs(fa) < std::abs(fb) ? a : b;
    double best_f = std::min(std::abs(fa), std::abs(fb));
    int slow = 0;
    for (int it = 0; it < opts.max_iter; ++it) {
        if (!(x > a && x < b)) x = 0.5 * (a + b);
        const double fx = f(x) - target;
        if (!std::isfinite(fx)) throw NumericalError("monotone_invert: non-finite function value");
        if (std::abs(fx) < best_f) {
            best_f = std::abs(fx);
            best_x = x;
        }
        if (fx == 0.0) break;
        const double width = b - a;
        if ((fx < 0.0) == (fa < 0.0)) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if (b - a <= 4.0 * eps * std::max({1.0, std::abs(a), std::abs(b)})) break;
        slow = (b - a > 0.5 * width) ? slow + 1 : 0;
        if (slow >= 2) {
            x = 0.5 * (a + b);
            slow = 0;
            continue;
        }
        double next = std::numeric_limits<double>::quiet_NaN();
        if (df) {
            const double d = df(x);
            if (std::isfinite(d) && d != 0.0) next = x - fx / d;
        }
        if (!(next > a && next < b)) next = a - fa * (b - a) / (fb - fa);
        x = next;
    }
    if (!(best_f <= opts.tol_rel * (1.0 + std::abs(target)))) {
        std::ostringstream os;
        os << "monotone_invert: residual " << best_f << " above tolerance for target " << target;
        throw NumericalError(os.str());
    }
    return best_x;
}

}  // namespace mfgpi
