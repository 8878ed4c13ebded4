#include "lagmc/spectral.hpp"

#include "lagmc/error.hpp"
#include "lagmc/tolerance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace lagmc {

namespace {

void require_finite(const Matrix& m) {
    if (!m.allFinite()) throw InvalidArgument("matrix has non-finite entries");
}

}  // namespace

Spectrum::Spectrum(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw InvalidArgument("spectrum needs at least two eigenvalues");
    for (double v : values_)
        if (!std::isfinite(v)) throw InvalidArgument("spectrum has non-finite eigenvalue");
    std::sort(values_.begin(), values_.end(), std::greater<>());
}

const char* to_string(PhaseTag tag) {
    switch (tag) {
        case PhaseTag::Subcritical: return "subcritical";
        case PhaseTag::Critical: return "critical";
        case PhaseTag::Supercritical: return "supercritical";
    }
    return "?";
}

double max_asymmetry(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidArgument("matrix is not square");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
    return worst;
}

JacobiEigen jacobi_eigen(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1) throw InvalidArgument("eigen solver needs a non-empty square matrix");
    require_finite(m);
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = max_asymmetry(m);
    if (asym > tol::kSymmetry * scale)
        throw NotSymmetric("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")", asym);

    const Eigen::Index n = m.rows();
    Matrix a = 0.5 * (m + m.transpose());
    Matrix v = Matrix::Identity(n, n);
    int sweeps = 0;
    for (; sweeps < 100; ++sweeps) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += std::abs(a(p, q));
        if (off == 0.0) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p), aqq = a(q, q);
                // Entry negligible against both diagonals: drop it.
                const double g = 100.0 * std::abs(apq);
                if (sweeps > 3 && std::abs(app) + g == std::abs(app) && std::abs(aqq) + g == std::abs(aqq)) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const double theta = (aqq - app) / (2.0 * apq);
                double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (sweeps >= 100) throw ConvergenceFailure("Jacobi eigen solver did not converge", {});

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
    JacobiEigen out;
    out.values.resize(static_cast<std::size_t>(n));
    out.basis.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values[static_cast<std::size_t>(i)] = a(order[i], order[i]);
        out.basis.col(i) = v.col(order[i]);
    }
    out.sweeps = sweeps;
    return out;
}

EigenDecomposition eigen_sym(const Matrix& m) {
    if (m.rows() < 2) throw InvalidArgument("eigen_sym needs n >= 2");
    JacobiEigen e = jacobi_eigen(m);
    return {Spectrum(std::move(e.values)), std::move(e.basis)};
}

double lagrangian_angle(std::span<const double> lambda) {
    double sum = 0.0;
    for (double l : lambda) sum += std::atan(l);
    return sum;
}

double lagrangian_angle(const Spectrum& s) { return lagrangian_angle(s.values()); }

double critical_phase(int n) { return (n - 2) * std::numbers::pi / 2.0; }

PhaseRegime phase_classify(double theta_value, int n) {
    if (n < 1) throw InvalidArgument("dimension must be positive");
    if (!std::isfinite(theta_value)) throw InvalidArgument("phase value is not finite");
    const double a = std::abs(theta_value);
    if (a >= n * std::numbers::pi / 2.0) throw OutOfRange("phase magnitude must be below n*pi/2");
    const double crit = critical_phase(n);
    if (std::abs(a - crit) <= tol::scaled(tol::kPhaseCritical, crit)) return {PhaseTag::Critical, 0.0};
    if (a > crit) return {PhaseTag::Supercritical, a - crit};
    return {PhaseTag::Subcritical, 0.0};
}

std::vector<double> elementary_symmetric(std::span<const double> lambda) {
    std::vector<double> e(lambda.size() + 1, 0.0);
    e[0] = 1.0;
    for (std::size_t m = 0; m < lambda.size(); ++m)
        for (std::size_t k = m + 1; k >= 1; --k) e[k] += lambda[m] * e[k - 1];
    return e;
}

double sigma_k(const Spectrum& s, int k) {
    if (k < 0 || k > static_cast<int>(s.size())) throw OutOfRange("sigma_k index outside [0, n]");
    return elementary_symmetric(s.values())[static_cast<std::size_t>(k)];
}

double volume_element(std::span<const double> lambda) {
    double v = 1.0;
    for (double l : lambda) v *= std::hypot(1.0, l);
    return v;
}

double volume_element(const Spectrum& s) { return volume_element(s.values()); }

ProductIdentityResidual complex_product_identity(const Spectrum& s) {
    const auto e = elementary_symmetric(s.values());
    const double theta = lagrangian_angle(s);
    const double v = volume_element(s);
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) {
        // i^k: 1, i, -1, -i
        switch (k % 4) {
            case 0: re += e[k]; break;
            case 1: im += e[k]; break;
            case 2: re -= e[k]; break;
            case 3: im -= e[k]; break;
        }
    }
    return {std::abs(v * std::cos(theta) - re), std::abs(v * std::sin(theta) - im), v};
}

TraceExpansion inverse_metric_trace_expansion(const Spectrum& s) {
    const int n = static_cast<int>(s.size());
    const auto e = elementary_symmetric(s.values());
    const double theta = lagrangian_angle(s);
    const double v = volume_element(s);
    TraceExpansion out;
    for (double l : s.values()) out.lhs += v / (1.0 + l * l);
    out.c.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        out.c[static_cast<std::size_t>(k)] = (n - k) * std::cos(k * std::numbers::pi / 2.0 - theta);
        out.rhs += out.c[static_cast<std::size_t>(k)] * e[static_cast<std::size_t>(k)];
    }
    return out;
}

StructureReport supercritical_structure_check(const Spectrum& s) {
    const int n = static_cast<int>(s.size());
    StructureReport r;
    r.applies = lagrangian_angle(s) >= critical_phase(n);
    if (!r.applies) return r;
    const double ln = s[s.size() - 1];
    r.ordered = s[s.size() - 2] >= std::abs(ln) - tol::kOrdering * (1.0 + std::abs(ln));
    std::vector<double> abs_values(s.size());
    std::transform(s.values().begin(), s.values().end(), abs_values.begin(), [](double x) { return std::abs(x); });
    const auto e = elementary_symmetric(s.values());
    const auto scale = elementary_symmetric(abs_values);
    r.sigmas_nonneg = true;
    for (int k = 1; k <= n - 1; ++k)
        if (e[static_cast<std::size_t>(k)] < -tol::kSigmaSign * scale[static_cast<std::size_t>(k)]) r.sigmas_nonneg = false;
    return r;
}

Matrix operator_derivative(const Matrix& m) {
    const JacobiEigen e = jacobi_eigen(m);
    const Eigen::Index n = m.rows();
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = e.values[static_cast<std::size_t>(i)];
        w(i) = 1.0 / (1.0 + l * l);
    }
    Matrix out = e.basis * w.asDiagonal() * e.basis.transpose();
    return 0.5 * (out + out.transpose());
}

}  // namespace lagmc
