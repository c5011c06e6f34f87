#pragma once

#include <stdexcept>
#include <string>

namespace engage {

// Invalid data handed to an operation (bad shapes, out-of-range values,
// malformed records).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration (dimension constraints, bad hyperparameters).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / stream failures.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint load failures carry a distinct code per failure mode.
class CheckpointError : public std::runtime_error {
public:
    enum class Code {
        bad_magic,
        bad_version,
        dim_mismatch,
        truncated,
        trailing_data,
    };

    CheckpointError(Code code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}

    Code code() const { return code_; }

private:
    Code code_;
};

// AUC is undefined when only one class is present; callers must not
// receive a silent 0 or 1.
class UndefinedAucError : public std::runtime_error {
public:
    explicit UndefinedAucError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace engage
