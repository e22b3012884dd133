#ifndef MATCHNET_ERRORS_HPP
#define MATCHNET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace matchnet {

/// Malformed or out-of-range caller input.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A documented precondition on a state or configuration was broken.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// The requested computation mode is not available for this model (e.g. exact
/// match probabilities under continuous noise).
class UnsupportedMode : public std::runtime_error {
public:
    explicit UnsupportedMode(const std::string& what) : std::runtime_error(what) {}
};

/// A closed-form bound was requested outside the hypotheses under which it holds.
class BoundInapplicable : public std::runtime_error {
public:
    explicit BoundInapplicable(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class SizeError : public std::runtime_error {
public:
    explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace matchnet

#endif  // MATCHNET_ERRORS_HPP
