#include "mfgpi/paths.hpp"

#include <cmath>
#include <sstream>

#include "mfgpi/errors.hpp"

namespace mfgpi {

ValueEstimate PathBundle::admissibility() const {
    std::vector<double> v;
    for (std::size_t p = 0; p < n_paths; ++p)
        if (valid[p]) v.push_back(alpha_sq_integral[p]);
    return estimate_mean(v);
}

namespace {

void check_request(const HSurface& s, const SimulationRequest& r) {
    const auto& g = s.market->grid();
    if (r.n_paths < 1 || r.n_steps < 1) throw InputError("simulate: n_paths and n_steps must be >= 1");
    if (!std::isfinite(r.x0) || !std::isfinite(r.y0)) throw InputError("simulate: x0 and y0 must be finite");
    if (!(r.t0 >= 0.0 && r.t0 <= g.T)) throw InputError("simulate: t0 must lie in [0, T]");
    if (r.y0 < g.y_lo || r.y0 > g.y_hi) throw RangeError("simulate: y0 outside the market grid");
    if (r.record_stride > 0 && r.n_steps % r.record_stride != 0)
        throw InputError("simulate: record_stride must divide n_steps");
}

}  // namespace

PathBundle simulate_paths(const HSurface& surface, const SimulationRequest& req) {
    check_request(surface, req);
    const MarketModel& m = *surface.market;
    const double T = m.grid().T;
    PathBundle b;
    b.seed = req.seed;
    b.stream = Stream::CommonNoise;
    b.measure = req.measure;
    b.x0 = req.x0;
    b.y0 = req.y0;
    b.t0 = req.t0;
    b.T = T;
    b.n_paths = req.n_paths;
    const bool degenerate = !(req.t0 < T);
    b.n_steps = degenerate ? 0 : req.n_steps;
    const double ds = degenerate ? 0.0 : (T - req.t0) / static_cast<double>(b.n_steps);
    const std::size_t stride = req.record_stride == 0 ? std::max<std::size_t>(b.n_steps, 1) : req.record_stride;
    for (std::size_t j = 0; j <= b.n_steps; j += stride) {
        b.steps.push_back(j);
        b.times.push_back(j == b.n_steps ? T : req.t0 + ds * static_cast<double>(j));
    }
    if (degenerate) {
        b.steps.assign(1, 0);
        b.times.assign(1, req.t0);
    }
    const std::size_t R = b.times.size();
    for (auto* v : {&b.W, &b.Y, &b.L, &b.X, &b.alpha}) v->assign(b.n_paths * R, NAN);
    b.alpha_sq_integral.assign(b.n_paths, 0.0);
    b.valid.assign(b.n_paths, 1);
    b.z0 = surface.H_inverse(req.x0, req.y0, req.t0);
    const double alpha0 = surface.alpha_at_z(b.z0, req.y0, req.t0);
    const double sq = std::sqrt(ds);
    const bool physical = req.measure == Measure::Physical;

    for (std::size_t p = 0; p < b.n_paths; ++p) {
        auto rec = [&](std::size_t k, double W, double Y, double L, double X, double a) {
            const std::size_t o = p * R + k;
            b.W[o] = W;
            b.Y[o] = Y;
            b.L[o] = L;
            b.X[o] = X;
            b.alpha[o] = a;
        };
        rec(0, 0.0, req.y0, 0.0, req.x0, alpha0);
        if (degenerate) continue;
        PathRng rng(req.seed, Stream::CommonNoise, p);
        double W = 0.0, Y = req.y0, L = 0.0;
        double s = req.t0;
        double c = m.c.eval(Y, s);
        double bb = physical ? m.b(Y, s) : 0.0;
        double a_prev = alpha0;
        double int_a2 = 0.0;
        std::size_t k = 1;
        try {
            for (std::size_t j = 0; j < b.n_steps; ++j) {
                const double dW = sq * rng.normal();
                const double s1 = (j + 1 == b.n_steps) ? T : req.t0 + ds * static_cast<double>(j + 1);
                const double Y1 = Y + bb * ds + dW;
                const double c1 = m.c.eval(Y1, s1);
                const double b1 = physical ? m.b(Y1, s1) : 0.0;
                L += 0.5 * (c * bb + c1 * b1) * ds + c * dW;
                W += dW;
                Y = Y1;
                s = s1;
                c = c1;
                bb = b1;
                const double z = b.z0 + L;
                const double a = surface.alpha_at_z(z, Y, s);
                int_a2 += 0.5 * (a_prev * a_prev + a * a) * ds;
                a_prev = a;
                if (k < R && b.steps[k] == j + 1) {
                    rec(k, W, Y, L, surface.H(z, Y, s), a);
                    ++k;
                }
            }
        } catch (const std::exception& e) {
            b.valid[p] = 0;
            ++b.excluded;
            if (b.first_failure.empty()) {
                std::ostringstream os;
                os << "path " << p << ": " << e.what();
                b.first_failure = os.str();
            }
            continue;
        }
        b.alpha_sq_integral[p] = int_a2;
    }
    return b;
}

ValueEstimate estimate_value(const PathBundle& bundle, const UtilitySpec& utility) {
    std::vector<double> v;
    v.reserve(bundle.n_paths);
    for (std::size_t p = 0; p < bundle.n_paths; ++p)
        if (bundle.valid[p]) v.push_back(utility_J(utility, bundle.terminal(bundle.X, p)));
    return estimate_mean(v);
}

ValueEstimate auxiliary_value_w(const HSurface& surface, double x, double y, double t, std::size_t n_paths,
                                std::uint64_t seed) {
    const auto& prior = surface.market->prior;
    const double T = surface.market->grid().T;
    const double z0 = surface.h_inverse(x, y, t);
    auto sample = [&](double yT) {
        const double wealth = terminal_H(surface.utility, z0 + eval_log_F(prior, yT, T));
        return utility_J(surface.utility, wealth) * eval_F(prior, yT, T);
    };
    if (!(t < T)) {
        const double v = utility_J(surface.utility, x) * eval_F(prior, y, T);
        return {v, 0.0, n_paths};
    }
    const double sd = std::sqrt(T - t);
    std::vector<double> v(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
        PathRng rng(seed, Stream::Auxiliary, p);
        v[p] = sample(y + sd * rng.normal());
    }
    return estimate_mean(v);
}

ValueEstimate feynman_kac_H(const HSurface& surface, double z, double y, double t, std::size_t n_paths,
                            std::size_t n_steps, std::uint64_t seed, std::uint64_t probe_index) {
    const MarketModel& m = *surface.market;
    const double T = m.grid().T;
    if (n_paths < 1 || n_steps < 1) throw InputError("feynman_kac_H: n_paths and n_steps must be >= 1");
    const double ds = (T - t) / static_cast<double>(n_steps);
    const double sq = std::sqrt(ds);
    std::vector<double> v;
    v.reserve(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
        PathRng rng(seed, Stream::FeynmanKac, (probe_index << 32) | p);
        double Z = z, Y = y, s = t;
        try {
            for (std::size_t j = 0; j < n_steps; ++j) {
                const double dW = sq * rng.normal();
                Z += m.c.eval(Y, s) * dW;
                Y += dW;
                s = (j + 1 == n_steps) ? T : t + ds * static_cast<double>(j + 1);
            }
            v.push_back(terminal_H(surface.utility, Z));
        } catch (const RangeError&) {
            // Paths leaving the market grid are dropped; the count shows in n_paths.
        }
    }
    return estimate_mean(v);
}

}  // namespace mfgpi
