#ifndef HAABSA_ERRORS_HPP
#define HAABSA_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace haabsa {

// Shape disagreement between operands.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Bad hyperparameter, file/config mismatch or unsupported option.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Violated precondition in the calling code.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class EmptyTargetError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Input data that parses but breaks a domain invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Training produced a non-finite objective.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, std::size_t example, const std::string& what)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ", example " +
                             std::to_string(example) + ")"),
          epoch_(epoch), example_(example) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t example() const noexcept { return example_; }

private:
    std::size_t epoch_;
    std::size_t example_;
};

} // namespace haabsa

#endif
