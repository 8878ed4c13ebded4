#pragma once

#include "lagmc/error.hpp"
#include "lagmc/expression.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lagmc {

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line) : Error(where(line) + what), line_(line) {}
    int line() const { return line_; }

private:
    static std::string where(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }
    int line_;
};

class ConfigSyntaxError : public ConfigError {
public:
    using ConfigError::ConfigError;
};
class UnknownKeyError : public ConfigError {
public:
    using ConfigError::ConfigError;
};
class OutOfRangeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};
class MissingKeyError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

enum class Command { Solve, VerifyForms, Jacobi, Identities, Approx, Refine };
const char* to_string(Command c);
std::optional<Command> command_from_string(const std::string& s);

enum class PhaseKind { Catalog, Constant, Expression, Kink };

// Every field is optional so that emit(parse(text)) reproduces exactly the keys
// that were written; defaults are applied by the run layer.
struct RunConfig {
    // [run]
    std::optional<Command> command;
    std::optional<int> n;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    // [grid]
    std::optional<int> points;
    std::optional<double> lo;
    std::optional<double> hi;
    std::optional<std::vector<int>> refine;
    // [phase]
    std::optional<PhaseKind> kind;
    std::optional<std::string> catalog;
    std::optional<double> value;
    std::optional<std::string> expression;
    std::optional<double> lipschitz;
    std::optional<double> theta;
    std::optional<double> slope;
    // [constants]
    std::optional<double> A;
    std::optional<double> C;
    std::optional<double> eps;
    std::optional<double> delta;
    std::optional<double> mu;
    // [solver]
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::optional<std::string> mode;
    std::optional<std::string> linear;
    std::optional<std::string> format;
    // [approx]
    std::optional<int> K;
    std::optional<double> alpha;
    std::optional<int> dense_samples;
    // [forms]
    std::optional<int> samples;
    std::optional<double> forms_theta;

    bool operator==(const RunConfig&) const = default;
};

// key = value lines under [section] headers; '#' and ';' start comments.
// Throws the ConfigError subclass naming the first problem with its line.
RunConfig parse_config(const std::string& text);

// Canonical form: sections and keys in schema order, one blank line between sections.
std::string emit_config(const RunConfig& c);

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& s);

}  // namespace lagmc
