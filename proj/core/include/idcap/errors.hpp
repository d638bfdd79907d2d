#pragma once

#include <stdexcept>
#include <string>

namespace idcap {

/// Non-finite values or diverging optimization. Mapped to exit code 4 by the CLI.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File I/O or malformed on-disk format.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A referenced checkpoint/dataset does not exist. Mapped to exit code 3 by the CLI.
struct missing_artifact_error : std::runtime_error {
    explicit missing_artifact_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad experiment configuration. Mapped to exit code 2 by the CLI.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace idcap
