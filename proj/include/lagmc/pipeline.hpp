#pragma once

#include "lagmc/grid.hpp"
#include "lagmc/phase.hpp"
#include "lagmc/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lagmc {

// Kink family: (n-2)pi/2 + theta + slope |x_1|, Lipschitz constant `slope`.
PhaseSpec kink_phase(int n, double theta, double slope, const Grid& box);

// 0.5 t |x|^2 with n arctan(t) equal to the mean of phi over the grid nodes.
GridField mean_phase_boundary(const Grid& g, const PhaseSpec& phi);

// Mollification radius 1/(k max(Lip, 1)).
double mollifier_radius(const PhaseSpec& phi, int k);

// Convolution with the bump exp(1/(|y|^2 - 1)) scaled to radius r_k, by
// tensor Gauss-Legendre quadrature of order 8 with weights normalized to sum
// to one, followed by a saturating clamp into
// [(n-2)pi/2 + theta - 1/(4k), n pi/2 - 1/(4k)] (theta = the phase's margin)
// that is the identity away from a band of width 1/(8k) at each end.
PhaseSpec mollify_phase(const PhaseSpec& phi, int k);

// Max over node pairs of the inner half-box of |D^2u(x) - D^2u(y)| / |x - y|^alpha,
// matrix norm = spectral norm. All pairs when every axis has <= 33 points;
// otherwise all pairs of a strided sublattice (<= 33 per axis) together with
// every pair within two nodes per axis.
double holder_quotient(const GridField& u, double alpha);

// Spectral-norm maximum of the discrete Hessian over interior nodes of the inner half-box.
double inner_hessian_sup(const GridField& u);
bool in_inner_half_box(const Grid& g, std::size_t node);

struct PipelineRow {
    int k = 0;
    double phik_err = 0.0;
    double lip = 0.0;
    int iters = 0;
    double hess_sup = 0.0;
    bool sandwich_ok = true;  // u_k against the barriers built from u_{k/2}; vacuous on the first row
    double diff_to_ref = 0.0;
    double holder = 0.0;
    // Sandwich calibration for the pair (k/2, k).
    double delta = 0.0;
    double c_cmp = 0.0;
    double sandwich_violation = 0.0;
    double diff_to_next = 0.0;  // |u_k - u_2k|_inf, 0 on the last row
};

struct PipelineReport {
    std::vector<PipelineRow> rows;
    double barrier_radius = 0.0;
    std::vector<std::string> findings;
    bool partial = false;
};

struct PipelineOptions {
    double alpha = 0.5;
    std::uint64_t seed = 1;
    std::size_t dense_samples = 4096;
    SolveOptions solve;
};

PipelineReport run_pipeline(const PhaseSpec& phi, const Grid& grid, int K, const GridField& boundary,
                            const PipelineOptions& opts = {});

// CSV with header k,phik_err,lip,iters,hess_sup,sandwich_ok,diff_to_ref,holder.
void write_pipeline_csv(std::ostream& os, const PipelineReport& r);

// 17 significant digits, the report number format.
std::string format_number(double v);

}  // namespace lagmc
