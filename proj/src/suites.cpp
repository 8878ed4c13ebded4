#include "lagmc/suites.hpp"

#include "lagmc/parallel.hpp"
#include "lagmc/spectral.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace lagmc {

namespace {

constexpr double pi = std::numbers::pi;

// Stream ids keep the suites' random sequences disjoint for a shared seed.
constexpr std::uint64_t kRankOneStream = 100;
constexpr std::uint64_t kStructureStream = 200;
constexpr std::uint64_t kIdentityStream = 300;

}  // namespace

std::vector<double> sample_spectrum(int n, CounterRng& rng) {
    std::vector<double> l(static_cast<std::size_t>(n));
    for (double& x : l) x = std::tan(rng.uniform(-pi / 2, pi / 2));
    if (rng.uniform() < 0.1) l[1] = l[0];
    return l;
}

std::vector<double> sample_supercritical_spectrum(int n, CounterRng& rng) {
    const double crit = critical_phase(n);
    for (;;) {
        std::vector<double> t(static_cast<std::size_t>(n));
        for (double& x : t) x = rng.uniform(-pi / 2, pi / 2);
        if (std::accumulate(t.begin(), t.end(), 0.0) < crit) continue;
        std::vector<double> l(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) l[i] = std::tan(t[i]);
        if (lagrangian_angle(l) >= crit) return l;
    }
}

RankOneSuite rank_one_suite(int n, double coeff, std::size_t samples, std::uint64_t seed) {
    RankOneSuite s;
    s.n = n;
    s.coeff = coeff;
    s.samples = samples;
    std::vector<unsigned char> band(samples), disagree(samples), psd(samples);
    const std::uint64_t stream = kRankOneStream + static_cast<std::uint64_t>(n) * 2 + (coeff == 1.25 ? 1 : 0);
    parallel_for(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream, i);
        std::vector<double> a(static_cast<std::size_t>(n));
        for (double& x : a) x = std::exp(rng.uniform(std::log(1e-2), std::log(1e2)));
        double crit = coeff * std::accumulate(a.begin(), a.end(), 0.0, [](double acc, double x) { return acc + 1.0 / x; });
        if (rng.uniform() < 0.25) {
            const double gap = std::exp(rng.uniform(std::log(1e-9), std::log(1e-1)));
            const double target = rng.uniform() < 0.5 ? 1.0 - gap : 1.0 + gap;
            for (double& x : a) x *= crit / target;
            crit = coeff * std::accumulate(a.begin(), a.end(), 0.0, [](double acc, double x) { return acc + 1.0 / x; });
        }
        if (std::abs(1.0 - crit) <= 1e-7) {
            band[i] = 1;
            return;
        }
        const bool criterion_psd = crit <= 1.0;
        const bool oracle_psd = qform_min_eig(a, coeff) >= 0.0;
        psd[i] = criterion_psd;
        disagree[i] = criterion_psd != oracle_psd;
    });
    for (std::size_t i = 0; i < samples; ++i) {
        s.in_band += band[i];
        s.disagreements += disagree[i];
        s.psd_count += psd[i];
    }
    return s;
}

StructureSuite structure_suite(int n, std::size_t samples, std::uint64_t seed) {
    StructureSuite s;
    s.n = n;
    s.samples = samples;
    std::vector<unsigned char> order(samples), sig(samples);
    parallel_for(samples, [&](std::size_t i) {
        CounterRng rng(seed, kStructureStream + static_cast<std::uint64_t>(n), i);
        const Spectrum sp(sample_supercritical_spectrum(n, rng));
        const StructureReport r = supercritical_structure_check(sp);
        order[i] = !r.ordered;
        sig[i] = !r.sigmas_nonneg;
    });
    for (std::size_t i = 0; i < samples; ++i) {
        s.order_failures += order[i];
        s.sigma_failures += sig[i];
    }
    return s;
}

IdentitySuite identity_suite(int n, std::size_t samples, std::uint64_t seed) {
    IdentitySuite s;
    s.n = n;
    s.samples = samples;
    std::vector<double> prod(samples), trace(samples), cmax(samples);
    parallel_for(samples, [&](std::size_t i) {
        CounterRng rng(seed, kIdentityStream + static_cast<std::uint64_t>(n), i);
        const Spectrum sp(sample_spectrum(n, rng));
        const ProductIdentityResidual p = complex_product_identity(sp);
        prod[i] = std::max(p.residual_cos, p.residual_sin) / p.volume;
        const TraceExpansion t = inverse_metric_trace_expansion(sp);
        trace[i] = std::abs(t.lhs - t.rhs) / (n * volume_element(sp));
        double m = 0.0;
        for (double c : t.c) m = std::max(m, std::abs(c));
        cmax[i] = m;
    });
    for (std::size_t i = 0; i < samples; ++i) {
        s.max_product_residual = std::max(s.max_product_residual, prod[i]);
        s.max_trace_residual = std::max(s.max_trace_residual, trace[i]);
        s.max_abs_c = std::max(s.max_abs_c, cmax[i]);
    }
    return s;
}

std::vector<FormsSuiteRow> forms_suite(int n, std::size_t samples, std::uint64_t seed, double theta) {
    std::vector<FormsSuiteRow> rows;
    CertifyOptions opts;
    opts.seed = seed;
    opts.theta = theta;
    const double a_convex = certified_A_convex(n);
    for (FormCaseId f : convex_families())
        rows.push_back({n, f, a_convex, 0.0, certify_constants(n, f, samples, a_convex, opts)});
    const double a_super = certified_A_supercritical(n, theta);
    for (FormCaseId f : supercritical_families())
        rows.push_back({n, f, a_super, theta, certify_constants(n, f, samples, a_super, opts)});
    return rows;
}

}  // namespace lagmc
