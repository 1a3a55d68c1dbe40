#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpscale {

enum class ErrorCode {
    Domain,               // argument outside the valid domain
    Dimension,            // array or kernel sizes incompatible
    DegeneratePatch,      // patch with zero L1 norm or no texture
    InsufficientPatches,  // fewer than two usable patches
    RankDeficient,        // scale/focus system has rank < n+1
    Solver,               // weighted normal equations singular / non-finite result
    NegativeScale,        // joint solve produced a non-positive scale or focus
    Candidate,            // empty scale candidate set
    Loss,                 // every refinement contribution degenerate
    PipelineFailure,      // no view survived selection
    Spec,                 // invalid synthetic scene description
    Manifest,             // malformed or invalid manifest
    Format,               // unsupported or malformed file contents
    Io,                   // file could not be read or written
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace dpscale
