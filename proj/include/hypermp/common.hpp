#pragma once

#include <stdexcept>
#include <string>

namespace hypermp {

// Invalid structure on construction (bad vertex id, empty hyperedge, ...).
struct StructuralError : std::runtime_error {
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible tensor dimensions.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse: caller broke a documented precondition.
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; message carries the 1-based line number.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, long line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
    long line_number;
};

}  // namespace hypermp
