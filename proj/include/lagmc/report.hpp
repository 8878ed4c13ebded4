#pragma once

#include "lagmc/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lagmc {

struct TableRef {
    std::string file;
    std::string module;
    std::string suite;
};

struct ReportBundle {
    std::string directory;
    Command command = Command::Solve;
    std::uint64_t config_hash = 0;  // FNV-1a of the canonical config without [run] out
    std::uint64_t seed = 0;
    std::vector<TableRef> tables;
    std::vector<std::string> fields;
    std::vector<std::string> failures;  // asserted checks that did not hold
    std::vector<std::string> findings;  // monitors; never affect the status
    std::string summary;

    bool passed() const { return failures.empty(); }
};

std::string version_string();

// Runs the configured suite and writes <out>/{config.ini, manifest.txt,
// summary.txt, tables, fields}. Files are written with a .partial suffix and
// renamed once the run completes; on an exception the partial files stay.
ReportBundle run(const RunConfig& config);

// 0 pass, 1 assertion failure, 2 configuration or precondition error, 3 solver non-convergence.
inline constexpr int kExitPass = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;

}  // namespace lagmc
