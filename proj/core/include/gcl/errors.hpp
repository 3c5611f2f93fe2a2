#pragma once

#include <stdexcept>
#include <string>

namespace gcl {

struct InvalidInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenerationFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StrategyMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingDivergenceError : std::runtime_error {
    TrainingDivergenceError(const std::string& what, int epoch_index)
        : std::runtime_error(what), epoch(epoch_index) {}
    int epoch;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gcl
