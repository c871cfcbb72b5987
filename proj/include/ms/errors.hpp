#pragma once

#include <stdexcept>
#include <string>

namespace ms {

/// Caller misuse: bad arguments, bad config keys, violated preconditions.
/// The CLI maps this to exit code 1.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data (parse failures, bad files).
/// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Conditioning on an event of probability zero.
class ZeroSupportError : public DataError {
public:
    explicit ZeroSupportError(const std::string& msg) : DataError(msg) {}
};

} // namespace ms
