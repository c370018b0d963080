#pragma once

#include <stdexcept>
#include <string>

namespace fsqd {

// Error taxonomy mirrored by the CLI exit codes:
//   validation_error -> 2   (bad inputs, shape/precondition violations)
//   numerical_error  -> 3   (convergence failures, tolerance violations)
//   io_error         -> 4   (missing/corrupt files, un-writable outputs)
struct validation_error : std::invalid_argument {
    explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fsqd
