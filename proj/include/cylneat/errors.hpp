#pragma once

#include <stdexcept>
#include <string>

namespace cylneat {

// Exit-code classes used by the CLI: usage -> 3, resource -> 2, negative -> 1.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CapExceeded : public ResourceError {
public:
    using ResourceError::ResourceError;
};

class BudgetExceeded : public ResourceError {
public:
    using ResourceError::ResourceError;
};

class ExhaustionError : public std::runtime_error {
public:
    ExhaustionError(std::string what, std::string demand)
        : std::runtime_error(std::move(what)), demand_(std::move(demand)) {}
    const std::string& demand() const { return demand_; }

private:
    std::string demand_;
};

class ClosureFailure : public std::runtime_error {
public:
    ClosureFailure(std::string what, unsigned index, std::string subset)
        : std::runtime_error(std::move(what)), index_(index), subset_(std::move(subset)) {}
    unsigned index() const { return index_; }
    const std::string& subset() const { return subset_; }

private:
    unsigned index_;
    std::string subset_;
};

} // namespace cylneat
