#pragma once

#include "lagmc/error.hpp"
#include "lagmc/grid.hpp"
#include "lagmc/phase.hpp"
#include "lagmc/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lagmc {

// Central differences: u_ii = ((u+ - u0)/h - (u0 - u-)/h)/h, u_ij by the
// four-point cross stencil over 4 h_i h_j.
Matrix discrete_hessian(const GridField& u, std::size_t node);

// Spectral norm max |lambda| of a symmetric matrix.
double hessian_norm(const Matrix& h);

// F(D_h^2 u) - phi at interior nodes, zero on the boundary.
GridField residual(const GridField& u, const PhaseSpec& phi);

enum class SolveMode { Supercritical, ConvexInitialized };
enum class LinearSolver { Auto, Direct, Iterative };

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 50;
    SolveMode mode = SolveMode::Supercritical;
    LinearSolver linear = LinearSolver::Auto;
    std::optional<GridField> initial;
};

// Linear systems up to this many unknowns use the direct factorization under Auto.
inline constexpr std::size_t kDirectSolveLimit = 20000;

struct SolveReport {
    int iterations = 0;
    double final_residual_inf = 0.0;
    int damping_events = 0;
    double hessian_sup = 0.0;
    double osc = 0.0;
    std::string wall_notes;
    std::vector<double> residual_history;
};

struct SolveResult {
    GridField u;
    SolveReport report;
};

class SolveFailure : public ConvergenceFailure {
public:
    SolveFailure(const std::string& what, GridField best, SolveReport report)
        : ConvergenceFailure(what, report.residual_history), best_(std::move(best)), report_(std::move(report)) {}
    const GridField& best() const { return best_; }
    const SolveReport& report() const { return report_; }

private:
    GridField best_;
    SolveReport report_;
};

// Damped Newton for sum arctan lambda_i(D_h^2 u) = phi with u = boundary on
// the boundary nodes. Throws InvalidArgument for a subcritical phase in
// supercritical mode, SolveFailure on non-convergence or linear breakdown.
SolveResult newton_solve(const Grid& grid, const PhaseSpec& phi, const GridField& boundary, const SolveOptions& opts = {});

// u + delta (|x|^2 - r^2), |x| measured from the origin.
GridField barrier_shift(const GridField& u, double delta, double r);

struct SandwichResult {
    bool ok = true;
    double worst_violation = 0.0;  // largest amount by which an inequality fails (<= 0 when none)
    std::size_t node = 0;
};

// lower <= mid <= upper nodewise with slack 1e-8 (1 + |mid|_inf).
SandwichResult sandwich_check(const GridField& lower, const GridField& mid, const GridField& upper);

}  // namespace lagmc
