#pragma once

#include <cstdarg>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace gcs {

// All library failures surface as gcs::Error with a human-readable message
// carrying the offending values (shapes, parameters, file positions).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// printf-style string builder, used for error messages and text output.
inline std::string strf(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    va_list args2;
    va_copy(args2, args);
    int n = std::vsnprintf(nullptr, 0, fmt, args);
    va_end(args);
    std::string out(n > 0 ? static_cast<size_t>(n) : 0, '\0');
    if (n > 0) std::vsnprintf(out.data(), out.size() + 1, fmt, args2);
    va_end(args2);
    return out;
}

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

}  // namespace gcs
