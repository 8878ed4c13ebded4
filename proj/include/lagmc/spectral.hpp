#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace lagmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Eigenvalues of a symmetric matrix, kept in descending order.
class Spectrum {
public:
    // Sorts the values descending; rejects fewer than two or non-finite values.
    explicit Spectrum(std::vector<double> values);
    Spectrum(std::initializer_list<double> values) : Spectrum(std::vector<double>(values)) {}

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return values_; }
    double max() const { return values_.front(); }
    double min() const { return values_.back(); }

private:
    std::vector<double> values_;
};

enum class PhaseTag { Subcritical, Critical, Supercritical };

struct PhaseRegime {
    PhaseTag tag = PhaseTag::Subcritical;
    double margin = 0.0;
};

const char* to_string(PhaseTag tag);

// Raw cyclic Jacobi output: values descending, basis columns matching.
struct JacobiEigen {
    std::vector<double> values;
    Matrix basis;
    int sweeps = 0;
};

// Cyclic Jacobi rotations with a fixed (p, q) sweep order. Accepts n >= 1.
// Throws NotSymmetric when max |M - M^T| > 1e-12 * max |M|.
JacobiEigen jacobi_eigen(const Matrix& m);

struct EigenDecomposition {
    Spectrum spectrum;
    Matrix basis;  // orthonormal columns, column i pairs with spectrum[i]
};

EigenDecomposition eigen_sym(const Matrix& m);

double lagrangian_angle(const Spectrum& s);
double lagrangian_angle(std::span<const double> lambda);

// (n-2) pi / 2.
double critical_phase(int n);

PhaseRegime phase_classify(double theta_value, int n);

// e_0 .. e_n of the given values by the one-at-a-time product recurrence.
std::vector<double> elementary_symmetric(std::span<const double> lambda);
double sigma_k(const Spectrum& s, int k);

double volume_element(const Spectrum& s);
double volume_element(std::span<const double> lambda);

struct ProductIdentityResidual {
    double residual_cos = 0.0;
    double residual_sin = 0.0;
    double volume = 0.0;
};

// Compares V cos(Theta), V sin(Theta) with the alternating sigma sums of the
// real and imaginary parts of prod (1 + i lambda_j).
ProductIdentityResidual complex_product_identity(const Spectrum& s);

struct TraceExpansion {
    double lhs = 0.0;  // sum_i V / (1 + lambda_i^2)
    double rhs = 0.0;  // sum_{k<n} c_k sigma_k
    std::vector<double> c;  // c_0 .. c_{n-1}
};

// Uses c_k = (n - k) cos(k pi / 2 - Theta). Derivation: V / (1 + lambda_i^2)
// = Re[e^{-i Theta} prod_{j != i} (1 + i lambda_j)], and summing sigma_k of
// the spectrum with lambda_i removed over i gives (n - k) sigma_k.
TraceExpansion inverse_metric_trace_expansion(const Spectrum& s);

struct StructureReport {
    bool applies = false;
    bool ordered = false;
    bool sigmas_nonneg = false;
};

StructureReport supercritical_structure_check(const Spectrum& s);

// (I + M^2)^{-1}, the derivative of M -> sum arctan lambda_i(M).
Matrix operator_derivative(const Matrix& m);

// max |M_ij - M_ji|.
double max_asymmetry(const Matrix& m);

}  // namespace lagmc
