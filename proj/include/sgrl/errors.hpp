#pragma once

#include <stdexcept>
#include <string>

namespace sgrl {

// Error classes named in module contracts. Preconditions violations use
// std::invalid_argument directly.

struct NotFoundError : std::runtime_error {
    explicit NotFoundError(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::string raw_text)
        : std::runtime_error(what), raw(std::move(raw_text)) {}
    std::string raw;  // offending input, kept for audits
};

struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sgrl
