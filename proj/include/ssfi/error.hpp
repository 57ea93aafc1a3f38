#pragma once

#include <stdexcept>
#include <string>

namespace ssfi {

// Invalid caller-supplied values (shape mismatches, out-of-range parameters).
class argument_error : public std::invalid_argument {
public:
    explicit argument_error(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed input data; message names the offending row/column where known.
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Transport-level failure; carries the HTTP status (0 when no response).
// Retryable by contract: the request may be reissued as-is.
class http_error : public std::runtime_error {
public:
    http_error(int status, const std::string& what)
        : std::runtime_error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

}  // namespace ssfi
