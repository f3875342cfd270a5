#include "mfgpi/utility.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfgpi/errors.hpp"
#include "mfgpi/invert.hpp"

namespace mfgpi {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Largest |z| for which e^{-z} and the closed forms stay representable.
constexpr double kZWindow = 700.0;

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        std::ostringstream os;
        os << "utility: " << what << " must be finite";
        throw InputError(os.str());
    }
}

// Sahara helpers: s = sqrt(A), kappa = sqrt(B/A), V = asinh(x / kappa).
double sahara_V(const Sahara& u, double x) { return std::asinh(x / std::sqrt(u.B / u.A)); }

double sahara_J(const Sahara& u, double x) {
    const double kappa = std::sqrt(u.B / u.A);
    const double a = 1.0 / std::sqrt(u.A);
    const double V = sahara_V(u, x);
    const double up = std::abs(1.0 - a) < 1e-12 ? V : std::expm1((1.0 - a) * V) / (1.0 - a);
    const double down = -std::expm1(-(1.0 + a) * V) / (1.0 + a);
    return 0.5 * kappa * (up + down);
}

// CMIM in log coordinates: g(s) = I(e^s) = sum mu e^{-rho s}.
double cmim_g(const Cmim& u, double s) {
    double v = 0.0;
    for (const auto& a : u.atoms) v += a.mu * std::exp(-a.rho * s);
    return v;
}

// -w I'(w) at w = e^s, which equals r(I(w)).
double cmim_r_of_s(const Cmim& u, double s) {
    double v = 0.0;
    for (const auto& a : u.atoms) v += a.rho * a.mu * std::exp(-a.rho * s);
    return v;
}

// log of J'(x): solves g(s) = x.
double cmim_log_marginal(const Cmim& u, double x) {
    double lo = -1.0;
    double hi = 1.0;
    while (cmim_g(u, lo) < x) {
        lo *= 2.0;
        if (lo < -kZWindow) throw RangeError("utility: CMIM inverse marginal does not reach the requested wealth");
    }
    while (cmim_g(u, hi) > x) {
        hi *= 2.0;
        if (hi > kZWindow) throw RangeError("utility: CMIM inverse marginal does not reach the requested wealth");
    }
    auto g = [&](double s) { return cmim_g(u, s); };
    auto dg = [&](double s) { return -cmim_r_of_s(u, s); };
    return monotone_invert(g, x, lo, hi, dg, {1e-13, 300});
}

// Primitive of x -> -rho mu x^{-rho} evaluated through w, so that J(I(w)) = sum.
double cmim_J_of_s(const Cmim& u, double s) {
    double v = 0.0;
    for (const auto& a : u.atoms) {
        if (a.rho == 1.0)
            v += -a.mu * s;
        else
            v += -a.rho * a.mu * std::exp((1.0 - a.rho) * s) / (1.0 - a.rho);
    }
    return v;
}

double custom_inverse(const Custom& u, double z) {
    if (u.I) return u.I(z);
    double lo = -1.0;
    double hi = 1.0;
    while (u.J1(lo) < z) {
        lo *= 2.0;
        if (lo < -1e8) throw RangeError("utility: custom J' does not reach the requested level");
    }
    while (u.J1(hi) > z) {
        hi *= 2.0;
        if (hi > 1e8) throw RangeError("utility: custom J' does not reach the requested level");
    }
    return monotone_invert(u.J1, z, lo, hi, u.J2, {1e-12, 300});
}

}  // namespace

std::string utility_name(const UtilitySpec& spec) {
    return std::visit(Overloaded{[](const Exponential&) { return std::string("exponential"); },
                                 [](const Sahara&) { return std::string("sahara"); },
                                 [](const Cmim&) { return std::string("cmim"); },
                                 [](const Custom&) { return std::string("custom"); }},
                      spec);
}

void validate_utility(const UtilitySpec& spec) {
    std::visit(Overloaded{
                   [](const Exponential& u) {
                       if (!(u.B > 0.0) || !std::isfinite(u.B)) throw InputError("utility: exponential B must be > 0");
                   },
                   [](const Sahara& u) {
                       if (!(u.A > 0.0) || !(u.B > 0.0) || !std::isfinite(u.A) || !std::isfinite(u.B))
                           throw InputError("utility: sahara A and B must be > 0");
                   },
                   [](const Cmim& u) {
                       if (u.atoms.empty()) throw InputError("utility: cmim needs at least one atom");
                       double rmax = -INFINITY, rmin = INFINITY, mu_at_max = 0.0, mu_at_min = 0.0;
                       for (const auto& a : u.atoms) {
                           if (!std::isfinite(a.rho) || !std::isfinite(a.mu))
                               throw InputError("utility: cmim atoms must be finite");
                           if (a.rho > rmax) rmax = a.rho, mu_at_max = a.mu;
                           if (a.rho < rmin) rmin = a.rho, mu_at_min = a.mu;
                       }
                       // Wealth lives on the whole real line, so I must map (0, inf) onto it.
                       if (!(rmax > 0.0 && mu_at_max > 0.0) || !(rmin < 0.0 && mu_at_min < 0.0))
                           throw InputError(
                               "utility: cmim inverse marginal must run from +inf at 0 to -inf at infinity");
                       for (int k = -60; k <= 60; ++k) {
                           const double s = 0.5 * k;
                           if (!(cmim_r_of_s(u, s) > 0.0)) {
                               std::ostringstream os;
                               os << "utility: cmim inverse marginal not decreasing at z=" << std::exp(s);
                               throw InputError(os.str());
                           }
                       }
                   },
                   [](const Custom& u) {
                       if (!u.J || !u.J1 || !u.J2) throw InputError("utility: custom needs J, J1 and J2");
                       for (int k = -40; k <= 40; ++k) {
                           const double x = 0.25 * k;
                           if (!(u.J1(x) > 0.0) || !(u.J2(x) < 0.0)) {
                               std::ostringstream os;
                               os << "utility: custom J not strictly increasing and concave at x=" << x;
                               throw InputError(os.str());
                           }
                       }
                   }},
               spec);
}

double utility_J(const UtilitySpec& spec, double x) {
    require_finite(x, "x");
    return std::visit(Overloaded{[x](const Exponential& u) { return -u.B * std::exp(-x / u.B); },
                                 [x](const Sahara& u) { return sahara_J(u, x); },
                                 [x](const Cmim& u) { return cmim_J_of_s(u, cmim_log_marginal(u, x)); },
                                 [x](const Custom& u) { return u.J(x); }},
                      spec);
}

double marginal_utility(const UtilitySpec& spec, double x) {
    require_finite(x, "x");
    return std::visit(Overloaded{[x](const Exponential& u) { return std::exp(-x / u.B); },
                                 [x](const Sahara& u) { return std::exp(-sahara_V(u, x) / std::sqrt(u.A)); },
                                 [x](const Cmim& u) { return std::exp(cmim_log_marginal(u, x)); },
                                 [x](const Custom& u) { return u.J1(x); }},
                      spec);
}

double utility_second(const UtilitySpec& spec, double x) {
    require_finite(x, "x");
    return std::visit(Overloaded{[x](const Exponential& u) { return -std::exp(-x / u.B) / u.B; },
                                 [x](const Sahara& u) {
                                     const double r = std::sqrt(u.A * x * x + u.B);
                                     return -std::exp(-sahara_V(u, x) / std::sqrt(u.A)) / r;
                                 },
                                 [x](const Cmim& u) {
                                     const double s = cmim_log_marginal(u, x);
                                     return -std::exp(s) / cmim_r_of_s(u, s);
                                 },
                                 [x](const Custom& u) { return u.J2(x); }},
                      spec);
}

double risk_tolerance(const UtilitySpec& spec, double x) {
    require_finite(x, "x");
    return std::visit(Overloaded{[](const Exponential& u) { return u.B; },
                                 [x](const Sahara& u) { return std::sqrt(u.A * x * x + u.B); },
                                 [x](const Cmim& u) { return cmim_r_of_s(u, cmim_log_marginal(u, x)); },
                                 [x](const Custom& u) {
                                     const double j2 = u.J2(x);
                                     if (j2 == 0.0) {
                                         std::ostringstream os;
                                         os << "utility: degenerate J''=0 at x=" << x;
                                         throw NumericalError(os.str());
                                     }
                                     return -u.J1(x) / j2;
                                 }},
                      spec);
}

double inverse_marginal(const UtilitySpec& spec, double z) {
    if (!(z > 0.0) || !std::isfinite(z)) throw InputError("utility: inverse marginal needs z > 0");
    return std::visit(Overloaded{[z](const Exponential& u) { return -u.B * std::log(z); },
                                 [z](const Sahara& u) {
                                     return -std::sqrt(u.B / u.A) * std::sinh(std::sqrt(u.A) * std::log(z));
                                 },
                                 [z](const Cmim& u) { return cmim_g(u, std::log(z)); },
                                 [z](const Custom& u) { return custom_inverse(u, z); }},
                      spec);
}

double terminal_H(const UtilitySpec& spec, double z) {
    require_finite(z, "z");
    if (std::abs(z) > kZWindow) {
        std::ostringstream os;
        os << "utility: terminal_H argument z=" << z << " outside admissible window [" << -kZWindow << ", "
           << kZWindow << "]";
        throw RangeError(os.str());
    }
    const double v = std::visit(
        Overloaded{[z](const Exponential& u) { return u.B * z; },
                   [z](const Sahara& u) { return std::sqrt(u.B / u.A) * std::sinh(std::sqrt(u.A) * z); },
                   [z](const Cmim& u) { return cmim_g(u, -z); },
                   [z](const Custom& u) { return custom_inverse(u, std::exp(-z)); }},
        spec);
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "utility: terminal_H overflows at z=" << z;
        throw RangeError(os.str());
    }
    return v;
}

double terminal_H_z(const UtilitySpec& spec, double z) {
    require_finite(z, "z");
    if (const auto* u = std::get_if<Cmim>(&spec)) {
        if (std::abs(z) > kZWindow) throw RangeError("utility: terminal_H_z argument outside admissible window");
        return cmim_r_of_s(*u, -z);
    }
    return risk_tolerance(spec, terminal_H(spec, z));
}

UtilityConstants utility_constants(const UtilitySpec& spec) {
    validate_utility(spec);
    if (const auto* u = std::get_if<Exponential>(&spec)) return {0.0, u->B * u->B, u->B, 0.0};
    if (const auto* u = std::get_if<Sahara>(&spec)) return {u->A, u->B, std::sqrt(u->B), std::sqrt(u->A)};
    UtilityConstants c{0.0, -INFINITY, INFINITY, 0.0};
    std::vector<double> xs, rs;
    for (int k = -400; k <= 400; ++k) xs.push_back(0.05 * k);
    for (double x : xs) {
        const double h = 1e-4 * std::max(1.0, std::abs(x));
        const double d = (risk_tolerance(spec, x + h) - risk_tolerance(spec, x - h)) / (2.0 * h);
        c.r_slope = std::max(c.r_slope, std::abs(d));
        rs.push_back(risk_tolerance(spec, x));
        c.r_min = std::min(c.r_min, rs.back());
    }
    c.A = c.r_slope;
    for (std::size_t k = 0; k < xs.size(); ++k) c.B = std::max(c.B, rs[k] * rs[k] - c.A * xs[k] * xs[k]);
    return c;
}

IdentityReport check_marginal_identities(const UtilitySpec& spec, const std::vector<double>& probes, double tol) {
    IdentityReport rep;
    auto I = [&](double z) { return inverse_marginal(spec, z); };
    auto r = [&](double x) { return risk_tolerance(spec, x); };
    for (double z : probes) {
        double violation = 0.0;
        bool bad = false;
        try {
            if (!(z > 0.0)) throw InputError("probe must be positive");
            const double h = 1e-3 * z;
            const double fm2 = I(z - 2 * h), fm1 = I(z - h), f0 = I(z), fp1 = I(z + h), fp2 = I(z + 2 * h);
            const double I1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
            const double I2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h);
            const double x = f0;
            const double hx = 1e-3 * std::max(1.0, std::abs(x));
            const double rx = r(x);
            const double r1 = (r(x - 2 * hx) - 8 * r(x - hx) + 8 * r(x + hx) - r(x + 2 * hx)) / (12 * hx);
            const double e1 = std::abs(-z * I1 - rx) / std::max(1.0, std::abs(rx));
            const double lhs = z * I1 + z * z * I2;
            const double scale = std::max({1.0, std::abs(rx * r1), std::abs(z * I1), std::abs(z * z * I2)});
            const double e2 = std::abs(lhs - rx * r1) / scale;
            violation = std::max(e1, e2);
            if (!std::isfinite(violation)) bad = true;
            if (const auto* c = std::get_if<Custom>(&spec)) {
                if (!(c->J1(x) > 0.0) || !(c->J2(x) < 0.0)) bad = true;
            }
        } catch (const std::exception&) {
            bad = true;
            violation = INFINITY;
        }
        if (violation > rep.max_violation || (rep.flagged.empty() && bad)) {
            rep.max_violation = std::max(rep.max_violation, violation);
            rep.worst_probe = z;
        }
        if (bad || violation > tol) rep.flagged.push_back(z);
    }
    return rep;
}

}  // namespace mfgpi
