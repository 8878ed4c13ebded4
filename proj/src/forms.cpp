#include "lagmc/forms.hpp"

#include "lagmc/error.hpp"
#include "lagmc/parallel.hpp"
#include "lagmc/random.hpp"
#include "lagmc/tolerance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <tuple>

namespace lagmc {

namespace {

constexpr double pi = std::numbers::pi;

void require_positive(std::span<const double> a) {
    if (a.empty()) throw InvalidArgument("coefficient list is empty");
    for (double x : a)
        if (!(x > 0.0) || !std::isfinite(x)) throw InvalidArgument("coefficients must be positive and finite");
}

double sum_inverse(std::span<const double> a) {
    double s = 0.0;
    for (double x : a) s += 1.0 / x;
    return s;
}

// Entries tied with the last (pivot) entry are nudged down by a relative 1e-9.
void nudge_ties(std::vector<double>& a) {
    if (a.size() < 2) return;
    const double pivot = a.back();
    for (std::size_t i = 0; i + 1 < a.size(); ++i)
        if (a[i] == pivot) a[i] = pivot * (1.0 - tol::kTieNudge);
}

FormCase finish(FormCaseId id, std::vector<double> a, double coeff, int split) {
    FormCase fc;
    fc.case_id = id;
    fc.a = std::move(a);
    fc.trace_sum = sum_inverse(fc.a);
    fc.coeff = coeff;
    fc.split = split;
    return fc;
}

// Shared by the convex cases and the separated supercritical regime:
// base_i = scale * |lambda_i| * w / (1 + lambda_i^2), dispatch on |lambda|.
struct SplitResult {
    FormCaseId id;
    std::vector<double> a;
    int split;
};

SplitResult split_construction(std::span<const double> abs_lambda, double w, double scale, double c, int n) {
    const std::size_t len = abs_lambda.size();
    auto base = [&](double l) { return scale * l * w / (1.0 + l * l); };
    if (abs_lambda[len - 1] >= c) {
        std::vector<double> a(len);
        for (std::size_t i = 0; i < len; ++i) a[i] = base(abs_lambda[i]);
        return {FormCaseId::Convex1, std::move(a), 0};
    }
    if (abs_lambda[0] >= c) {
        int k = 0;
        while (k < static_cast<int>(len) && abs_lambda[static_cast<std::size_t>(k)] >= c) ++k;
        std::vector<double> a(static_cast<std::size_t>(k) + 1);
        const double cap = 2.0 * n * n - 1.0;
        for (int i = 0; i < k; ++i) a[static_cast<std::size_t>(i)] = std::min((1.0 - c) * base(abs_lambda[static_cast<std::size_t>(i)]), cap);
        a[static_cast<std::size_t>(k)] = 2.0 * n * n;
        nudge_ties(a);
        return {FormCaseId::Convex2, std::move(a), k};
    }
    // All |lambda_i| < c. In y_i = lambda_i^2 g_i x_i the hyperplane constraint
    // sum g_i x_i = 0 turns sum x_i into sum y_i, and base_i x_i^2 becomes
    // (2 scale w (1 + lambda_i^2) / |lambda_i|^3) y_i^2 / 2. Zero eigenvalues
    // contribute y_i = 0 and drop out.
    std::vector<double> a;
    for (double l : abs_lambda)
        if (l > 0.0) a.push_back(scale * w * (1.0 + l * l) / (l * l * l));
    return {FormCaseId::Convex3, std::move(a), 0};
}

}  // namespace

FormConstants FormConstants::convex(int n, double A) {
    if (n < 2) throw InvalidArgument("dimension must be at least 2");
    FormConstants k;
    k.A = A;
    k.c_small = 1.0 / (4.0 * n * n);
    k.C_big = 8.0 * n * n * n;
    k.eps = 1.0 / (16.0 * n * n);
    k.delta = 1.0 / (16.0 * n * n);
    k.mu = 1e-2;
    k.kappa = 1.0;
    k.theta = 0.0;
    k.coeff = 1.25;
    k.validate();
    return k;
}

FormConstants FormConstants::supercritical(int n, double theta, double A) {
    FormConstants k = convex(n, A);
    if (!(theta > 0.0)) throw InvalidArgument("supercritical constants need theta > 0");
    k.theta = theta;
    k.coeff = 1.125;
    return k;
}

void FormConstants::validate() const {
    if (!(A >= kMinA)) throw InvalidArgument("A must be at least 3");
    auto unit = [](double x) { return x > 0.0 && x < 1.0; };
    if (!unit(mu) || !unit(eps) || !unit(delta)) throw InvalidArgument("mu, eps, delta must lie in (0, 1)");
    if (!(c_small < C_big)) throw InvalidArgument("c_small must be below C_big");
    if (!(theta >= 0.0)) throw InvalidArgument("theta must be nonnegative");
    if (!(coeff > 0.0)) throw InvalidArgument("coeff must be positive");
}

const char* to_string(FormCaseId id) {
    switch (id) {
        case FormCaseId::Convex1: return "Convex1";
        case FormCaseId::Convex2: return "Convex2";
        case FormCaseId::Convex3: return "Convex3";
        case FormCaseId::SuperSeparated: return "SuperSeparated";
        case FormCaseId::SuperClusteredGammaN: return "SuperClusteredGammaN";
        case FormCaseId::SuperClusteredGammaLtN: return "SuperClusteredGammaLtN";
        case FormCaseId::Dim2Convex: return "Dim2Convex";
        case FormCaseId::Dim2Super: return "Dim2Super";
    }
    return "?";
}

std::optional<FormCaseId> form_case_from_string(const std::string& s) {
    for (auto id : {FormCaseId::Convex1, FormCaseId::Convex2, FormCaseId::Convex3, FormCaseId::SuperSeparated,
                    FormCaseId::SuperClusteredGammaN, FormCaseId::SuperClusteredGammaLtN, FormCaseId::Dim2Convex,
                    FormCaseId::Dim2Super})
        if (s == to_string(id)) return id;
    return std::nullopt;
}

Matrix build_lambda_matrix(std::span<const double> a, double coeff) {
    require_positive(a);
    const Eigen::Index n = static_cast<Eigen::Index>(a.size());
    const double an = a.back();
    Matrix m = an * Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) m(i, i) -= an - a[static_cast<std::size_t>(i)];
    const Vector l = Vector::Constant(n, std::sqrt(coeff));
    m -= l * l.transpose();
    return m;
}

double qform_min_eig(std::span<const double> a, double coeff) {
    return jacobi_eigen(build_lambda_matrix(a, coeff)).values.back();
}

Certificate rank_one_psd(std::span<const double> a, double coeff) {
    require_positive(a);
    Certificate c;
    c.criterion_value = coeff * sum_inverse(a);
    c.psd = c.criterion_value <= 1.0 + tol::kCriterion;
    c.min_eigenvalue = qform_min_eig(a, coeff);
    const double amax = *std::max_element(a.begin(), a.end());
    const bool oracle_psd = c.min_eigenvalue >= -tol::kOracleBand * amax;
    c.oracle_agrees = oracle_psd == c.psd;
    return c;
}

FormCaseId convex_case_of(const Spectrum& s, const FormConstants& k) {
    if (s.min() >= k.c_small) return FormCaseId::Convex1;
    if (s.max() >= k.c_small) return FormCaseId::Convex2;
    return FormCaseId::Convex3;
}

FormCase convex_case_coefficients(const Spectrum& s, double delta_u, const FormConstants& k) {
    if (s.min() < 0.0) throw InvalidArgument("spectrum is not convex; use the supercritical construction");
    if (!(delta_u >= 0.0)) throw InvalidArgument("Delta u must be nonnegative on a convex spectrum");
    const int n = static_cast<int>(s.size());
    const double w = k.A + delta_u;
    auto r = split_construction(s.values(), w, 2.0, k.c_small, n);
    return finish(r.id, std::move(r.a), 1.25, r.split);
}

bool supercritical_separated(const Spectrum& s, const FormConstants& k) {
    const int n = static_cast<int>(s.size());
    const double t = std::tan(k.theta);
    return std::abs(s.min()) < k.mu * t / (4.0 * n) || s[s.size() - 2] > 4.0 * n / (t * k.mu);
}

double clustered_threshold(int n, double theta, double mu) {
    const double cot = 1.0 / std::tan(theta);
    return std::max(4.0 * n * cot / mu, 8.0 * n * (2.0 - mu) * cot * cot * cot / (mu * mu));
}

double supercritical_eps_hat(double theta) {
    const double s = std::sin(theta);
    return 0.5 * s * s;
}

FormCase supercritical_case_coefficients(const Spectrum& s, const FormConstants& k) {
    return supercritical_case_coefficients(s, k, static_cast<int>(s.size()));
}

FormCase supercritical_case_coefficients(const Spectrum& s, const FormConstants& k, int gamma) {
    const int n = static_cast<int>(s.size());
    if (!(k.theta > 0.0)) throw InvalidArgument("supercritical construction needs theta > 0");
    if (gamma < 1 || gamma > n) throw OutOfRange("gamma must lie in [1, n]");
    const double theta_s = lagrangian_angle(s);
    if (theta_s < critical_phase(n) + k.theta - tol::scaled(tol::kRoundoff, theta_s))
        throw InvalidArgument("spectrum phase is below (n-2)pi/2 + theta");
    if (s.min() >= 0.0) throw InvalidArgument("lambda_n >= 0: spectrum is convex; use the convex construction");

    const double delta_u = std::accumulate(s.values().begin(), s.values().end(), 0.0);
    const double w = k.A + delta_u;
    const double tan_t = std::tan(k.theta);
    const double cot_t = 1.0 / tan_t;

    if (supercritical_separated(s, k)) {
        std::vector<double> abs_l(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) abs_l[i] = std::abs(s[i]);
        // lambda_{n-1} >= |lambda_n| keeps |lambda| descending.
        std::sort(abs_l.begin(), abs_l.end(), std::greater<>());
        auto r = split_construction(abs_l, w, 2.0 * (1.0 - k.eps), k.c_small, n);
        FormCase fc = finish(FormCaseId::SuperSeparated, std::move(r.a), 1.125, r.split);
        fc.eps_hat = supercritical_eps_hat(k.theta);
        fc.kappa = 1.0;
        return fc;
    }

    const double cthr = clustered_threshold(n, k.theta, k.mu);
    int m = 0;
    while (m < n && s[static_cast<std::size_t>(m)] > cthr) ++m;
    const double n4 = std::pow(static_cast<double>(n), 4);
    std::vector<double> a(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double l = s[static_cast<std::size_t>(i)];
        a[static_cast<std::size_t>(i)] = i < m ? std::min(2.0 * (1.0 - k.eps) * l * w / (1.0 + l * l), n4) : n4 + (i + 1);
    }
    const FormCaseId id = gamma == n ? FormCaseId::SuperClusteredGammaN : FormCaseId::SuperClusteredGammaLtN;
    FormCase fc = finish(id, std::move(a), 1.125, m);
    fc.tau_floor = k.mu / (8.0 * n * cot_t * cot_t);
    fc.eps_hat = supercritical_eps_hat(k.theta);
    if (gamma == n) {
        // kappa > 1; kappa = 1 + tan^2/2 balances the two lower bounds at sin^2/2.
        fc.kappa = 1.0 + 0.5 * tan_t * tan_t;
    } else {
        fc.kappa = gamma <= m ? 0.5 * k.mu : 1.0;
        const double lam_g = s[static_cast<std::size_t>(gamma - 1)];
        fc.tau = tan_t / s[s.size() - 2] - (1.0 / fc.kappa - 1.0) * cot_t / lam_g;
    }
    return fc;
}

double dim2_c_theta(double theta) {
    const double s = std::sin(theta);
    return s / (1.0 + s);
}

double dim2_jacobi_margin(const Spectrum& s, const FormConstants& k, Dim2Regime regime) {
    if (s.size() != 2) throw InvalidArgument("two-dimensional margin needs n = 2");
    const double l1 = s[0], l2 = s[1];
    double target = 0.0;
    if (regime == Dim2Regime::Convex) {
        if (l2 < 0.0) throw InvalidArgument("convex regime needs lambda_2 >= 0");
        target = 0.5 * l1;
    } else {
        if (!(k.theta > 0.0)) throw InvalidArgument("supercritical regime needs theta > 0");
        if (lagrangian_angle(s) < k.theta - tol::kRoundoff) throw InvalidArgument("spectrum phase below theta");
        target = dim2_c_theta(k.theta) * l1;
    }
    const double w = k.A + l1 + l2;
    const double d = (l1 - l2) * (l1 + l2);
    return 2.0 * (l1 + l2) - (1.0 + kDim2Eps + 2.0 * k.delta) * d * d / (w * (1.0 + l1 * l1)) - target;
}

double constrained_form_min_eig(std::span<const double> d, double coeff, std::span<const double> w) {
    if (d.size() != w.size() || d.size() < 2) throw InvalidArgument("constrained form needs matching lengths >= 2");
    const Eigen::Index n = static_cast<Eigen::Index>(d.size());
    Matrix m = -coeff * Matrix::Ones(n, n);
    for (Eigen::Index i = 0; i < n; ++i) m(i, i) += d[static_cast<std::size_t>(i)];
    Vector wv(n);
    for (Eigen::Index i = 0; i < n; ++i) wv(i) = w[static_cast<std::size_t>(i)];
    if (wv.norm() == 0.0) throw InvalidArgument("constraint normal is zero");
    Eigen::HouseholderQR<Matrix> qr(wv);
    const Matrix q = qr.householderQ();
    const Matrix p = q.rightCols(n - 1);
    Matrix r = p.transpose() * m * p;
    r = (0.5 * (r + r.transpose())).eval();
    return jacobi_eigen(r).values.back();
}

std::vector<FormCaseId> convex_families() { return {FormCaseId::Convex1, FormCaseId::Convex2, FormCaseId::Convex3}; }

std::vector<FormCaseId> supercritical_families() {
    return {FormCaseId::SuperSeparated, FormCaseId::SuperClusteredGammaN, FormCaseId::SuperClusteredGammaLtN};
}

namespace {

bool is_convex_family(FormCaseId f) {
    return f == FormCaseId::Convex1 || f == FormCaseId::Convex2 || f == FormCaseId::Convex3;
}

bool is_super_family(FormCaseId f) {
    return f == FormCaseId::SuperSeparated || f == FormCaseId::SuperClusteredGammaN ||
           f == FormCaseId::SuperClusteredGammaLtN;
}

// One nonnegative eigenvalue drawn from a mixture covering tiny, moderate,
// near-threshold, huge, zero, and repeated values.
double convex_coordinate(CounterRng& rng, double c, double prev) {
    const double u = rng.uniform();
    if (u < 0.35) return std::pow(10.0, rng.uniform(-8.0, 8.0));
    if (u < 0.60) return c * std::pow(10.0, rng.uniform(-0.3, 0.3));
    if (u < 0.80) return std::pow(10.0, rng.uniform(-2.0, 3.0));
    if (u < 0.90) return 0.0;
    return prev >= 0.0 ? prev : std::pow(10.0, rng.uniform(-4.0, 4.0));
}

// Angle in (0, pi/2), concentrated toward pi/2 so that huge eigenvalues appear.
double positive_angle(CounterRng& rng) {
    if (rng.uniform() < 0.3) return rng.uniform(0.0, pi / 2);
    return pi / 2 - std::pow(10.0, rng.uniform(-10.0, 0.2));
}

struct Proposal {
    std::optional<Spectrum> spectrum;
    int gamma = 0;
};

std::optional<Spectrum> propose_supercritical(CounterRng& rng, int n, double theta) {
    std::vector<double> alpha(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        alpha[static_cast<std::size_t>(i)] = std::min(positive_angle(rng), std::nextafter(pi / 2, 0.0));
        sum += alpha[static_cast<std::size_t>(i)];
    }
    const double lo = std::max(-pi / 2, critical_phase(n) + theta - sum);
    if (lo >= 0.0) return std::nullopt;
    const double u = rng.uniform();
    double an;
    if (u < 0.4) an = rng.uniform(lo, 0.0);
    else if (u < 0.7) an = -std::pow(10.0, rng.uniform(-12.0, std::log10(-lo)));
    else an = lo + (-lo) * std::pow(10.0, rng.uniform(-9.0, 0.0));
    if (an >= 0.0 || an <= -pi / 2) return std::nullopt;
    alpha.back() = an;
    std::vector<double> l(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) l[i] = std::tan(alpha[i]);
    Spectrum s(std::move(l));
    if (lagrangian_angle(s) < critical_phase(n) + theta) return std::nullopt;
    if (!(s.min() < 0.0)) return std::nullopt;
    return s;
}

Proposal propose(CounterRng& rng, int n, FormCaseId family, const FormConstants& k) {
    Proposal p;
    if (is_convex_family(family) || family == FormCaseId::Dim2Convex) {
        std::vector<double> l(static_cast<std::size_t>(n));
        double prev = -1.0;
        for (auto& x : l) prev = x = convex_coordinate(rng, k.c_small, prev);
        Spectrum s(std::move(l));
        if (family == FormCaseId::Dim2Convex || convex_case_of(s, k) == family) p.spectrum = std::move(s);
        return p;
    }
    if (family == FormCaseId::Dim2Super) {
        const double a1 = rng.uniform() < 0.5 ? rng.uniform(k.theta, pi / 2) : pi / 2 - (pi / 2 - k.theta) * std::pow(10.0, rng.uniform(-9.0, 0.0));
        const double lo = std::max(-pi / 2, k.theta - a1);
        const double u = rng.uniform();
        double a2 = u < 0.5 ? rng.uniform(lo, a1) : lo + (a1 - lo) * std::pow(10.0, rng.uniform(-9.0, 0.0));
        a2 = std::max(a2, std::nextafter(-pi / 2, 0.0));
        Spectrum s{std::tan(a1), std::tan(a2)};
        if (lagrangian_angle(s) >= k.theta) p.spectrum = std::move(s);
        return p;
    }
    auto s = propose_supercritical(rng, n, k.theta);
    if (!s) return p;
    const bool sep = supercritical_separated(*s, k);
    if ((family == FormCaseId::SuperSeparated) != sep) return p;
    if (family == FormCaseId::SuperClusteredGammaN) p.gamma = n;
    if (family == FormCaseId::SuperClusteredGammaLtN) p.gamma = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
    if (family == FormCaseId::SuperSeparated) p.gamma = n;
    p.spectrum = std::move(s);
    return p;
}

std::uint64_t family_stream(int n, FormCaseId family) {
    return static_cast<std::uint64_t>(n) * 64 + static_cast<std::uint64_t>(family) + 1000;
}

}  // namespace

CertifyResult certify_constants(int n, FormCaseId family, std::size_t samples, double A_candidate,
                                const CertifyOptions& opts) {
    if (samples < 1) throw InvalidArgument("samples must be at least 1");
    if (n < 2) throw InvalidArgument("dimension must be at least 2");
    const bool dim2 = family == FormCaseId::Dim2Convex || family == FormCaseId::Dim2Super;
    if (dim2 && n != 2) throw InvalidArgument("two-dimensional families need n = 2");
    if (is_super_family(family) || family == FormCaseId::Dim2Super) {
        if (!(opts.theta > 0.0)) throw InvalidArgument("supercritical families need theta > 0");
    }
    const FormConstants k = (is_convex_family(family) || family == FormCaseId::Dim2Convex)
                                ? FormConstants::convex(n, A_candidate)
                                : FormConstants::supercritical(n, opts.theta, A_candidate);

    std::vector<double> margin(samples);
    std::vector<char> agrees(samples, 1);
    std::vector<std::size_t> attempts(samples);
    std::vector<std::optional<Spectrum>> drawn(samples);
    const std::uint64_t stream = family_stream(n, family);

    parallel_for(samples, [&](std::size_t i) {
        CounterRng rng(opts.seed, stream, i);
        std::size_t tries = 0;
        Proposal p;
        while (!p.spectrum) {
            if (++tries > 1000000) throw ConvergenceFailure("rejection sampler found no spectrum in the family", {});
            p = propose(rng, n, family, k);
        }
        attempts[i] = tries;
        const Spectrum& s = *p.spectrum;
        if (dim2) {
            const double mg = dim2_jacobi_margin(s, k, family == FormCaseId::Dim2Convex ? Dim2Regime::Convex : Dim2Regime::Supercritical);
            margin[i] = s[0] > 0.0 ? mg / s[0] : mg;
        } else {
            FormCase fc;
            if (is_convex_family(family)) {
                double du = 0.0;
                for (double x : s.values()) du += x;
                fc = convex_case_coefficients(s, du, k);
            } else {
                fc = supercritical_case_coefficients(s, k, p.gamma);
            }
            if (fc.a.empty()) {
                margin[i] = 1.0;
            } else {
                const Certificate c = rank_one_psd(fc.a, fc.coeff);
                margin[i] = 1.0 - c.criterion_value;
                agrees[i] = c.oracle_agrees ? 1 : 0;
            }
        }
        drawn[i] = s;
    });

    CertifyResult out;
    out.worst_margin = margin.empty() ? 0.0 : *std::min_element(margin.begin(), margin.end());
    out.accepted = samples;
    out.proposed = std::accumulate(attempts.begin(), attempts.end(), std::size_t{0});
    const double floor = dim2 ? 0.0 : -tol::kCriterion;
    for (std::size_t i = 0; i < samples; ++i) {
        if (!agrees[i]) ++out.oracle_disagreements;
        if (margin[i] < floor && out.ok) {
            out.ok = false;
            out.witness = drawn[i];
        }
    }
    return out;
}

double find_min_A(int n, FormCaseId family, std::size_t samples, const CertifyOptions& opts) {
    auto ok = [&](double A) { return certify_constants(n, family, samples, A, opts).ok; };
    if (ok(kMinA)) return kMinA;
    double lo = kMinA, hi = kMinA;
    do {
        lo = hi;
        hi = std::min(hi * 4.0, kMaxA);
        if (ok(hi)) break;
        if (hi >= kMaxA)
            throw InvalidArgument(std::string("no admissible A below 1e8 for family ") + to_string(family) +
                                  " at n = " + std::to_string(n));
    } while (true);
    while (hi / lo > 1.01) {
        const double mid = std::sqrt(lo * hi);
        if (ok(mid)) hi = mid;
        else lo = mid;
    }
    return hi;
}

namespace {

std::mutex cache_mutex;
std::map<std::tuple<int, double>, double> cache;

double cached(int n, double theta, const std::vector<FormCaseId>& families) {
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find({n, theta});
        if (it != cache.end()) return it->second;
    }
    double worst = kMinA;
    CertifyOptions opts;
    opts.seed = kCalibrationSeed;
    opts.theta = theta > 0.0 ? theta : 0.3;
    for (FormCaseId f : families) worst = std::max(worst, find_min_A(n, f, kCalibrationSamples, opts));
    const double A = 2.0 * worst;
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache[{n, theta}] = A;
    return A;
}

}  // namespace

double certified_A_convex(int n) {
    std::vector<FormCaseId> fam = convex_families();
    if (n == 2) fam.push_back(FormCaseId::Dim2Convex);
    return cached(n, 0.0, fam);
}

double certified_A_supercritical(int n, double theta) {
    if (!(theta > 0.0)) throw InvalidArgument("theta must be positive");
    std::vector<FormCaseId> fam = supercritical_families();
    if (n == 2) fam.push_back(FormCaseId::Dim2Super);
    return cached(n, theta, fam);
}

}  // namespace lagmc
