#pragma once

#include "lagmc/forms.hpp"
#include "lagmc/grid.hpp"
#include "lagmc/manufactured.hpp"
#include "lagmc/solver.hpp"

#include <span>
#include <string>
#include <vector>

namespace lagmc {

struct GraphGeometry {
    Matrix g;
    Matrix g_inv;
    double V = 1.0;
    double mean_curv_norm = 0.0;
    // First-order part of the Beltrami operator, -g^{-1} D^2u Dphi.
    Vector beltrami_drift;
};

GraphGeometry graph_geometry(const Matrix& hessian, const Vector& grad_phi);

// (1/sqrt(det g)) d_j (sqrt(det g) g^{ij}) from the analytic third derivatives.
Vector beltrami_drift_divergence(const AnalyticField& u, std::span<const double> x);

// Pointwise ingredients of the trace Jacobi inequality for b = A + Delta u.
struct JacobiTerms {
    double b = 0.0;
    Vector lambda;     // eigenvalues of D^2u, descending
    Vector grad_b;     // D Delta u
    double trace_hess_b = 0.0;   // g^{ij} b_ij
    double drift_b = 0.0;        // drift . Db
    double grad_norm2 = 0.0;     // g^{ij} b_i b_j = |grad_g b|^2
    double bracket_h = 0.0;      // sum 2 lambda_i (g^ii)^2 u_iig^2 + sum_{i!=t} (lambda_i + lambda_t) g^ii g^tt u_itg^2
    double bracket_abs = 0.0;    // sum |lambda_i| (g^ii)^2 u_iig^2
    Vector grad_phi;
    Vector grad_phi_frame;            // Dphi in the eigenframe
    std::vector<double> third_frame;  // u_abc in the eigenframe, flattened like AnalyticField::third
    double lap_phi = 0.0;
    double min_eigenvalue = 0.0;
    double phase_margin = 0.0;   // Theta - (n-2)pi/2
};

JacobiTerms jacobi_terms(const AnalyticField& u, double A, std::span<const double> x);

// Delta_g ln b - eps |grad_g ln b|^2 - [delta []_h / b + Delta phi / b - C |Dphi|^2].
// Throws InvalidArgument at non-convex points (use the supercritical variant).
double jacobi_residual_convex(const AnalyticField& u, const FormConstants& c, std::span<const double> x);

// Delta_g b - (1 + eps)|grad_g b|^2 / b - [eps_hat sum |lambda_i| (g^ii)^2 u_iig^2 - C b |Dphi|^2 + Delta phi],
// eps_hat = sin^2(theta)/2. Throws InvalidArgument when the phase margin is below c.theta.
double jacobi_residual_supercritical(const AnalyticField& u, const FormConstants& c, std::span<const double> x);

enum class JacobiVariant { Convex, Supercritical };
const char* to_string(JacobiVariant v);

struct JacobiReport {
    JacobiVariant variant = JacobiVariant::Convex;
    std::size_t nodes_checked = 0;
    double min_margin = 0.0;
    double min_scaled_margin = 0.0;  // margin / (A + Delta u)
    std::size_t worst_node = 0;
    std::size_t violation_count = 0;  // margin < -1e-8 (A + Delta u)
    FormConstants constants;
    // Smallest gradient constant C for which no node violates; equals constants.C_big
    // when the ledger value already suffices.
    double calibrated_C = 0.0;
};

JacobiReport jacobi_report(const ManufacturedProblem& p, const Grid& grid, const FormConstants& c, JacobiVariant v);

// Newton tensor d sigma_k / d(D^2u) = Q diag(sigma_{k-1}(lambda | i)) Q^T.
Matrix newton_tensor(const Matrix& hessian, int k);

// max over interior nodes of |k sigma_k(D_h^2 u) - div_h(L_{sigma_k} D_h u)|, staggered fluxes
// (exact for k = 1 since the flux difference reproduces the three-point stencil).
double divergence_identity_check(const GridField& u, int k);
// Analytic flux L_{sigma_k}(D^2u) Du differenced centrally on the grid, against k sigma_k(D^2u).
double divergence_identity_check(const AnalyticField& u, const Grid& grid, int k);

struct MeanValueReport {
    double point_value = 0.0;   // ln(A + Delta_h u) at the center
    double ball_average = 0.0;  // sum over the ball of ln(A + Delta_h u) V h^n
    double ratio = 0.0;
    double volume = 0.0;        // sum over the ball of V h^n
    double gradient_integral = 0.0;        // sum |grad_g ln(A + Delta_h u)|^2 V h^n
    double phase_gradient_integral = 0.0;  // sum |Dphi|^2 V h^n
    std::size_t nodes = 0;
};

MeanValueReport mean_value_monitor(const GridField& u, const PhaseSpec& phi, double A, double radius);

struct HessianBoundRow {
    int points = 0;
    double h = 0.0;
    double hess0 = 0.0;  // spectral norm of D_h^2 u at the center node
    double exact0 = 0.0; // same for the analytic solution
    double osc = 0.0;
    double lip = 0.0;
    double theta = 0.0;
    int iterations = 0;
};

struct HessianBoundTable {
    Catalog family = Catalog::Quadratic;
    int dim = 2;
    std::vector<HessianBoundRow> rows;
    double spread = 0.0;  // relative spread of hess0 over the two finest rows
    bool stable = false;  // spread <= 1%
};

HessianBoundTable hessian_bound_study(Catalog family, int n, const std::vector<int>& points, double lo, double hi,
                                      const CatalogParams& params = {}, const SolveOptions& opts = {});

}  // namespace lagmc
