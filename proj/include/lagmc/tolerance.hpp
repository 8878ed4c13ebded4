#pragma once

#include <algorithm>
#include <cmath>

// Every numeric threshold used by checks lives here.
namespace lagmc::tol {

// Absolute below scale 1, relative above.
inline double scaled(double tol, double scale) { return tol * std::max(1.0, std::abs(scale)); }

inline constexpr double kRoundoff = 1e-12;
inline constexpr double kSymmetry = 1e-12;        // relative to max |M_ij|
inline constexpr double kReconstruction = 1e-10;  // eigen reconstruction, times (1 + |M|)
inline constexpr double kPhaseCritical = 1e-12;   // |theta| == (n-2)pi/2 test
inline constexpr double kOrdering = 1e-12;        // lambda_{n-1} >= |lambda_n|
inline constexpr double kSigmaSign = 1e-10;       // sigma_k >= 0, relative to e_k(|lambda|)
inline constexpr double kIdentity = 1e-10;        // complex product identity, times V
inline constexpr double kTraceExpansion = 1e-9;   // times (1 + lhs)
inline constexpr double kCriterion = 1e-9;        // coeff * sum 1/a <= 1 + kCriterion
inline constexpr double kOracleBand = 1e-9;       // min eig >= -kOracleBand * max a
inline constexpr double kTieNudge = 1e-9;         // relative nudge for Case-2 ties
inline constexpr double kNewton = 1e-10;          // default residual tolerance
inline constexpr double kSandwichSlack = 1e-8;    // times (1 + |mid|)
inline constexpr double kJacobiMargin = 1e-8;     // times (A + Delta u)
inline constexpr double kLipschitzSlack = 1e-6;

}  // namespace lagmc::tol
