#include "mfgpi/residuals.hpp"

#include <cmath>
#include <sstream>

#include "mfgpi/errors.hpp"

namespace mfgpi {

namespace {

constexpr double kW1[5] = {1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0};
constexpr double kW2[5] = {-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0};

// Derivatives of f at a probe from fourth-order central stencils.
struct Jet {
    double v, a, aa, y, yy, ay, t;
};

Jet jet(const Field3& f, const Probe3& p, const Steps3& s) {
    Jet j{};
    j.v = f(p.a, p.y, p.t);
    for (int k = 0; k < 5; ++k) {
        const double o = k - 2;
        const double fa = k == 2 ? j.v : f(p.a + o * s.da, p.y, p.t);
        const double fy = k == 2 ? j.v : f(p.a, p.y + o * s.dy, p.t);
        const double ft = k == 2 ? j.v : f(p.a, p.y, p.t + o * s.dt);
        j.a += kW1[k] * fa;
        j.aa += kW2[k] * fa;
        j.y += kW1[k] * fy;
        j.yy += kW2[k] * fy;
        j.t += kW1[k] * ft;
    }
    for (int k = 0; k < 5; ++k) {
        if (k == 2) continue;
        double d = 0.0;
        for (int l = 0; l < 5; ++l) {
            if (l == 2) continue;
            d += kW1[l] * f(p.a + (k - 2) * s.da, p.y + (l - 2) * s.dy, p.t);
        }
        j.ay += kW1[k] * d;
    }
    j.a /= s.da;
    j.aa /= s.da * s.da;
    j.y /= s.dy;
    j.yy /= s.dy * s.dy;
    j.t /= s.dt;
    j.ay /= s.da * s.dy;
    return j;
}

std::string steps_text(const Steps3& s) {
    std::ostringstream os;
    os << "stencil da=" << s.da << " dy=" << s.dy << " dt=" << s.dt;
    return os.str();
}

}  // namespace

std::vector<Probe3> probe_lattice(const std::vector<double>& a, const std::vector<double>& y,
                                  const std::vector<double>& t) {
    std::vector<Probe3> out;
    for (double tt : t)
        for (double yy : y)
            for (double aa : a) out.push_back({aa, yy, tt});
    return out;
}

ResidualReport hjb_residual(const Field3& u, const MarketModel& market, const std::vector<Probe3>& probes,
                            Steps3 steps) {
    ResidualReport rep;
    rep.check = "hjb";
    rep.grid = steps_text(steps);
    std::size_t idx = 0;
    for (const auto& p : probes) {
        const Jet j = jet(u, p, steps);
        if (!(j.aa < 0.0)) {
            std::ostringstream os;
            os << "hjb residual: u_xx = " << j.aa << " >= 0 at x=" << p.a << ", y=" << p.y << ", t=" << p.t;
            throw ConsistencyError(os.str());
        }
        const double b = market.b(p.y, p.t);
        const double q = b * j.a + j.ay;
        const double r = j.t - q * q / (2.0 * j.aa) + 0.5 * j.yy + b * j.y;
        rep.add(r, p.y, p.t, p.a, 0, 0, idx++);
    }
    rep.finish();
    return rep;
}

ResidualReport r_equation_residual(const Field3& R, const std::vector<Probe3>& probes, Steps3 steps) {
    ResidualReport rep;
    rep.check = "r_equation";
    rep.grid = steps_text(steps);
    std::size_t idx = 0;
    for (const auto& p : probes) {
        const Jet j = jet(R, p, steps);
        const double r = j.t + 0.5 * j.v * j.v * j.aa + j.v * j.ay + 0.5 * j.yy;
        rep.add(r, p.y, p.t, p.a, 0, 0, idx++);
    }
    rep.finish();
    return rep;
}

ResidualReport r_equation_residual(const HSurface& surface, const std::vector<Probe3>& probes, Steps3 steps) {
    return r_equation_residual(
        [&surface](double x, double y, double t) { return feedback_control(surface, x, y, t); }, probes, steps);
}

ResidualReport r_terminal_mismatch(const HSurface& surface, const std::vector<std::pair<double, double>>& xy) {
    ResidualReport rep;
    rep.check = "r_terminal";
    const double T = surface.market->grid().T;
    std::size_t idx = 0;
    for (const auto& [x, y] : xy) {
        const double a = feedback_control(surface, x, y, T);
        const double target = eval_b(surface.market->prior, y, T) * risk_tolerance(surface.utility, x);
        rep.add(a - target, y, T, x, 0, 0, idx++);
    }
    rep.finish();
    return rep;
}

ResidualReport H_pde_residual(const Field3& H, const MarketModel& market, const std::vector<Probe3>& probes,
                              Steps3 steps) {
    ResidualReport rep;
    rep.check = "H_equation";
    rep.grid = steps_text(steps);
    std::size_t idx = 0;
    for (const auto& p : probes) {
        const Jet j = jet(H, p, steps);
        const double c = market.c.eval(p.y, p.t);
        const double r = j.t + 0.5 * c * c * j.aa + c * j.ay + 0.5 * j.yy;
        rep.add(r, p.y, p.t, p.a, 0, 0, idx++);
    }
    rep.finish();
    return rep;
}

}  // namespace mfgpi
