#pragma once

#include "lagmc/forms.hpp"
#include "lagmc/random.hpp"

#include <cstdint>
#include <vector>

namespace lagmc {

// Eigenvalues tan(t_i) with t_i uniform on (-pi/2, pi/2); every tenth draw
// repeats an entry to exercise ties.
std::vector<double> sample_spectrum(int n, CounterRng& rng);
// The same law conditioned on Theta >= (n-2)pi/2 (rejection).
std::vector<double> sample_supercritical_spectrum(int n, CounterRng& rng);

struct RankOneSuite {
    int n = 0;
    double coeff = 0.0;
    std::size_t samples = 0;
    std::size_t in_band = 0;  // |1 - coeff sum 1/a_i| <= 1e-7, not compared
    std::size_t disagreements = 0;
    std::size_t psd_count = 0;
};

// Criterion coeff sum 1/a_i <= 1 against the sign of the smallest eigenvalue of
// diag(a) - coeff 1 1^T. A quarter of the draws are rescaled to land within
// 1e-9..1e-1 of the boundary.
RankOneSuite rank_one_suite(int n, double coeff, std::size_t samples, std::uint64_t seed);

struct StructureSuite {
    int n = 0;
    std::size_t samples = 0;
    std::size_t proposed = 0;
    std::size_t order_failures = 0;  // lambda_{n-1} < |lambda_n|
    std::size_t sigma_failures = 0;  // some sigma_k < 0, 1 <= k <= n-1
};

StructureSuite structure_suite(int n, std::size_t samples, std::uint64_t seed);

struct IdentitySuite {
    int n = 0;
    std::size_t samples = 0;
    double max_product_residual = 0.0;  // relative to V
    double max_trace_residual = 0.0;    // relative to n V
    double max_abs_c = 0.0;
};

IdentitySuite identity_suite(int n, std::size_t samples, std::uint64_t seed);

struct FormsSuiteRow {
    int n = 0;
    FormCaseId family = FormCaseId::Convex1;
    double A = 0.0;
    double theta = 0.0;
    CertifyResult result;
};

// Every convex and supercritical family at the certified A(n), resp. A(n, theta).
std::vector<FormsSuiteRow> forms_suite(int n, std::size_t samples, std::uint64_t seed, double theta);

}  // namespace lagmc
