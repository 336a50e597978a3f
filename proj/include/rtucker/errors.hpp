#pragma once

#include <stdexcept>
#include <string>

namespace rtucker {

/// Dimension or shape disagreement between operands.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// A requested multilinear rank exceeds the tensor dimension it applies to.
class RankError : public std::invalid_argument {
public:
    explicit RankError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed text input (tensor files, configs).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical invariant was violated; signals a bug rather than bad input.
class NumericalFault : public std::runtime_error {
public:
    explicit NumericalFault(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rtucker
