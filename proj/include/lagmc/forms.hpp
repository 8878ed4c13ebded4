#pragma once

#include "lagmc/spectral.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lagmc {

struct FormConstants {
    double A = 3.0;
    double mu = 1e-2;
    double eps = 0.0;
    double delta = 0.0;
    double c_small = 0.0;
    double C_big = 0.0;
    double kappa = 1.0;
    double theta = 0.0;
    double coeff = 1.25;

    // c(n) = 1/(4n^2), C(n) = 8n^3, eps = delta = 1/(16n^2), coeff 5/4.
    static FormConstants convex(int n, double A);
    // Same constants with theta > 0 and coeff 9/8.
    static FormConstants supercritical(int n, double theta, double A);

    // Throws InvalidArgument when an invariant fails.
    void validate() const;
};

enum class FormCaseId {
    Convex1,
    Convex2,
    Convex3,
    SuperSeparated,
    SuperClusteredGammaN,
    SuperClusteredGammaLtN,
    Dim2Convex,
    Dim2Super,
};

const char* to_string(FormCaseId id);
std::optional<FormCaseId> form_case_from_string(const std::string& s);

struct FormCase {
    FormCaseId case_id = FormCaseId::Convex1;
    std::vector<double> a;
    double trace_sum = 0.0;
    double coeff = 1.25;
    int split = 0;  // k of Case 2 / m of the clustered branch, 0 otherwise
    // Supercritical bookkeeping (zero on convex cases).
    double kappa = 0.0;
    double tau = 0.0;
    double tau_floor = 0.0;  // mu / (8 n cot^2 theta)
    double eps_hat = 0.0;
};

struct Certificate {
    bool psd = false;
    double min_eigenvalue = 0.0;
    double criterion_value = 0.0;
    bool oracle_agrees = false;
};

// diag(a) - coeff * 1 1^T, assembled as a_n I - sum (a_n - a_i) e_i e_i^T - L^T L.
Matrix build_lambda_matrix(std::span<const double> a, double coeff);
Certificate rank_one_psd(std::span<const double> a, double coeff);
double qform_min_eig(std::span<const double> a, double coeff);

// Case 1: lambda_n >= c(n); Case 2: some lambda_i >= c(n) with i < n;
// Case 3: lambda_1 < c(n).
FormCaseId convex_case_of(const Spectrum& s, const FormConstants& k);
FormCase convex_case_coefficients(const Spectrum& s, double delta_u, const FormConstants& k);

// Separated when |lambda_n| < mu tan(theta)/(4n) or lambda_{n-1} > 4n cot(theta)/mu.
bool supercritical_separated(const Spectrum& s, const FormConstants& k);
// C(theta) = max(4n cot/mu, 8n(2-mu)cot^3/mu^2), the clustered split threshold.
double clustered_threshold(int n, double theta, double mu);
// gamma (1-based) selects the clustered sub-branch; gamma == n is the
// SuperClusteredGammaN case. Ignored in the separated regime.
FormCase supercritical_case_coefficients(const Spectrum& s, const FormConstants& k, int gamma);
FormCase supercritical_case_coefficients(const Spectrum& s, const FormConstants& k);

// eps_hat(theta) = sin^2(theta)/2: on sum g_i h_i ... see forms.cpp.
double supercritical_eps_hat(double theta);

enum class Dim2Regime { Convex, Supercritical };

// c(theta) = sin(theta) / (1 + sin(theta)), the largest c with
// lambda_1 + lambda_2 >= 2 c lambda_1 on every Theta >= theta spectrum.
double dim2_c_theta(double theta);
inline constexpr double kDim2Eps = 1e-2;
double dim2_jacobi_margin(const Spectrum& s, const FormConstants& k, Dim2Regime regime);

// Minimum of sum d_i x_i^2 - coeff (sum x_i)^2 over the unit sphere of the
// hyperplane sum w_i x_i = 0 (the true quadratic form before any reduction).
double constrained_form_min_eig(std::span<const double> d, double coeff, std::span<const double> w);

struct CertifyOptions {
    std::uint64_t seed = 1;
    double theta = 0.3;  // supercritical families only
};

struct CertifyResult {
    bool ok = true;
    double worst_margin = 0.0;
    std::optional<Spectrum> witness;
    std::size_t accepted = 0;
    std::size_t proposed = 0;
    std::size_t oracle_disagreements = 0;
};

// Draws `samples` spectra of the family (rejection sampling), builds the
// family's coefficients with FormConstants at A_candidate and certifies each.
CertifyResult certify_constants(int n, FormCaseId family, std::size_t samples, double A_candidate,
                                const CertifyOptions& opts = {});

inline constexpr double kMinA = 3.0;
inline constexpr double kMaxA = 1e8;

// Smallest A on the 1% log grid above 3 that certifies; returns 3 when 3 already does.
double find_min_A(int n, FormCaseId family, std::size_t samples, const CertifyOptions& opts = {});

// The families a given regime needs.
std::vector<FormCaseId> convex_families();
std::vector<FormCaseId> supercritical_families();

// Certified A: 2 x max of find_min_A over the families, deterministic and cached.
double certified_A_convex(int n);
double certified_A_supercritical(int n, double theta);

inline constexpr std::size_t kCalibrationSamples = 20000;
inline constexpr std::uint64_t kCalibrationSeed = 20240601;

}  // namespace lagmc
