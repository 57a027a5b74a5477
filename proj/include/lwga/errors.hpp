#pragma once

#include <stdexcept>
#include <string>

namespace lwga {

// Thrown when tensor/layer dimensions do not line up. The message names
// the offending axis.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

enum class IoErrc {
    bad_magic,
    bad_version,
    truncated,
    duplicate_name,
    malformed,
    manifest_mismatch,
    unreadable,
};

class IoError : public std::runtime_error {
public:
    IoError(IoErrc code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}
    IoErrc code() const { return code_; }

private:
    IoErrc code_;
};

} // namespace lwga
