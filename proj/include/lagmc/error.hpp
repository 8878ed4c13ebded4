#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lagmc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition or domain violation.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NotSymmetric : public InvalidArgument {
public:
    NotSymmetric(const std::string& what, double max_asymmetry)
        : InvalidArgument(what), max_asymmetry_(max_asymmetry) {}
    double max_asymmetry() const { return max_asymmetry_; }

private:
    double max_asymmetry_;
};

class OutOfRange : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

}  // namespace lagmc
