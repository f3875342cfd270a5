#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace mfgpi {

// J(x) = -B exp(-x/B): constant risk tolerance B.
struct Exponential {
    double B = 1.0;
};

// Risk tolerance r(x) = sqrt(A x^2 + B).
struct Sahara {
    double A = 1.0;
    double B = 1.0;
};

struct CmimAtom {
    double rho = 0.0;
    double mu = 0.0;
};

// Inverse marginal I(x) = sum_k mu_k x^(-rho_k).
struct Cmim {
    std::vector<CmimAtom> atoms;
};

// User supplied utility. I may be left empty; it is then obtained by inverting J1.
struct Custom {
    std::function<double(double)> J;
    std::function<double(double)> J1;
    std::function<double(double)> J2;
    std::function<double(double)> I;
};

using UtilitySpec = std::variant<Exponential, Sahara, Cmim, Custom>;

std::string utility_name(const UtilitySpec& spec);
void validate_utility(const UtilitySpec& spec);

double utility_J(const UtilitySpec& spec, double x);
double marginal_utility(const UtilitySpec& spec, double x);   // J'
double utility_second(const UtilitySpec& spec, double x);     // J''
double risk_tolerance(const UtilitySpec& spec, double x);     // -J'/J''
double inverse_marginal(const UtilitySpec& spec, double z);   // (J')^(-1)
double terminal_H(const UtilitySpec& spec, double z);         // I(e^{-z})
double terminal_H_z(const UtilitySpec& spec, double z);       // d/dz I(e^{-z}) = r(I(e^{-z}))

// Constants with r(x) <= sqrt(A x^2 + B), r(x) >= r_min and |r'| <= r_slope.
// Exact for the closed-form families, estimated on a probe lattice otherwise.
// For Sahara r_slope = sqrt(A), which exceeds A when A < 1.
struct UtilityConstants {
    double A = 0.0;
    double B = 0.0;
    double r_min = 0.0;
    double r_slope = 0.0;
};
UtilityConstants utility_constants(const UtilitySpec& spec);

struct IdentityReport {
    double max_violation = 0.0;
    double worst_probe = 0.0;
    std::vector<double> flagged;  // probes failing an identity or concavity
    bool ok() const { return flagged.empty(); }
};

// Checks -z I'(z) = r(I(z)) and z I' + z^2 I'' = r(I) r'(I) with finite
// differences, plus J' > 0 and J'' < 0 at the wealth levels I(z).
IdentityReport check_marginal_identities(const UtilitySpec& spec, const std::vector<double>& probes,
                                         double tol = 1e-7);

}  // namespace mfgpi
