// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmoe {

inline constexpr const char* kToolkitVersion = "0.1.0";

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// Error taxonomy. Every failure mode surfaces as a typed exception so callers
// (and the CLI exit-code mapping) can distinguish validation errors from
// runtime failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidShape : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Raised eagerly the moment any op produces NaN/Inf.
class NonFinite : public Error {
public:
    using Error::Error;
};

class NonFiniteLoss : public NonFinite {
public:
    NonFiniteLoss(const std::string& msg, std::size_t batch_index)
        : NonFinite(msg), batch_index(batch_index) {}
    std::size_t batch_index = 0;
};

class MissingFile : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t row, std::size_t col)
        : Error(msg), row(row), col(col) {}
    std::size_t row = 0;  // 1-based, header is row 1
    std::size_t col = 0;  // 1-based
};

class NonNumericCell : public ParseError {
public:
    using ParseError::ParseError;
};

class EmptySplit : public Error {
public:
    using Error::Error;
};

class CorruptCheckpoint : public Error {
public:
    using Error::Error;
};

class UnsupportedVersion : public Error {
public:
    using Error::Error;
};

}  // namespace tmoe
