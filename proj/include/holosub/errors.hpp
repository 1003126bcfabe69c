#pragma once

#include <stdexcept>
#include <string>

namespace holosub {

// Validation failures: bad dimensions, out-of-range labels, malformed
// configs or files. CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A DFT bin magnitude fell below the projection floor (1e-12).
struct DegenerateSpectrum : std::runtime_error {
    explicit DegenerateSpectrum(const std::string& msg) : std::runtime_error(msg) {}
};

// A DFT bin magnitude fell below the inversion floor (1e-9).
struct NearSingularSpectrum : std::runtime_error {
    explicit NearSingularSpectrum(const std::string& msg) : std::runtime_error(msg) {}
};

// A vector norm fell below 1e-12 where a direction is required.
struct ZeroNorm : std::runtime_error {
    explicit ZeroNorm(const std::string& msg) : std::runtime_error(msg) {}
};

// Scene placement exhausted its attempt budget. CLI exit code 3.
struct PlacementFailure : std::runtime_error {
    explicit PlacementFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite activations in a forward pass.
struct NonFiniteActivation : std::runtime_error {
    explicit NonFiniteActivation(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss during training. CLI exit code 4.
struct TrainingDiverged : std::runtime_error {
    TrainingDiverged(int epoch_index, const std::string& msg)
        : std::runtime_error(msg), epoch(epoch_index) {}
    int epoch;
};

// Non-finite input gradient while computing a saliency map.
struct DivergedGradient : std::runtime_error {
    explicit DivergedGradient(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem errors surfaced verbatim.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace holosub
